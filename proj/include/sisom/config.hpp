#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sisom/al_engine.hpp"
#include "sisom/ood_eval.hpp"
#include "sisom/steepness_opt.hpp"

namespace sisom {

struct DatasetSpec {
    std::string kind;                       // blobs | moons | rings | csv
    std::size_t n = 400;
    std::size_t test_n = 200;
    std::size_t dim = 2;
    std::size_t classes = 2;
    double sigma = 1.0;
    double center_radius = 3.0;
    std::vector<std::vector<double>> centers;   // optional explicit centers
    std::vector<int> center_class;              // class per center
    double noise = 0.1;                         // moons / rings
    double r_inner = 1.0, r_outer = 2.0;        // rings
    std::string train_csv, test_csv;            // csv
};

struct OodSetSpec {
    std::string name;
    std::string tag;                        // near | far
    std::string kind;                       // shifted-blobs | uniform-far | csv
    std::size_t n = 200;
    double radius_factor = 5.0;             // uniform-far
    std::string path;                       // csv
};

struct ModelSpec {
    std::vector<std::size_t> hidden = {64, 32};
    std::vector<std::size_t> capture = {0, 1};
    std::string model_file;                 // optional pre-trained model
};

struct ScorerSpec {
    ScoreMode mode = ScoreMode::Sisom;
    std::optional<double> r_avg_override;
    StoredClassMode stored_class = StoredClassMode::TrueLabel;
    bool standardize_fusion = false;
};

struct AlSpec {
    std::size_t initial_size = 20;
    std::size_t query_size = 20;
    std::size_t cycles = 5;
    Strategy strategy = Strategy::Sisom;
};

// Declarative description of one experiment. Parsed strictly: unknown keys
// anywhere in the document are rejected before any computation starts.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    DatasetSpec dataset;
    ModelSpec model;
    TrainOptions train;
    std::optional<std::vector<double>> steepness_values;
    std::optional<SteepnessSearchSpace> steepness_search;
    SubsetPolicy subset;
    ScorerSpec scorer;
    std::optional<AlSpec> al;
    std::vector<OodSetSpec> ood_sets;

    SteepnessConfig steepness_or_default(std::size_t n_layers) const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json load_config_file(const std::string& path);

// Sets `dotted.path=value` into the document; the value is parsed as JSON
// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct GeneratedData {
    Dataset train;
    Dataset test;
};

// Materializes the train/test splits (or loads them for kind=csv). All
// randomness forks from the config seed under the "data-gen" label.
GeneratedData generate_datasets(const ExperimentConfig& config);

// Materializes the configured OOD sets; shifted-blobs and uniform-far derive
// their geometry from the in-distribution dataset spec and data.
std::vector<OodSet> generate_ood_sets(const ExperimentConfig& config, const Dataset& train);

// Fresh seeded init + training, exactly as the CLI commands do it.
MlpModel train_fresh_model(const ExperimentConfig& config, const Dataset& train);
// Loads model_file when configured, otherwise trains fresh.
MlpModel obtain_model(const ExperimentConfig& config, const Dataset& train);

std::uint64_t fnv1a64(std::string_view text);
std::string config_hash(const nlohmann::json& doc);

} // namespace sisom
