#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sisom/scoring.hpp"

namespace sisom {

enum class Strategy { Sisom, Sisome, Random, Energy, Coreset };

Strategy parse_strategy(const std::string& name);
std::string strategy_name(Strategy s);

struct ALConfig {
    std::size_t initial_size = 20;
    std::size_t query_size = 20;
    std::size_t cycles = 5;
    Strategy strategy = Strategy::Sisom;
    TrainOptions train;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {64, 32};
    std::vector<std::size_t> capture = {0, 1};
    SteepnessConfig steepness;                 // empty: all layers at 1
    std::optional<double> r_avg_override;
    SubsetPolicy subset;
    StoredClassMode stored_class = StoredClassMode::TrueLabel;
    bool standardize_fusion = false;
    // Test / experiment hook: exact initial labeled ids instead of the
    // class-stratified random draw.
    std::optional<std::vector<std::string>> initial_ids;
};

struct CycleRecord {
    std::size_t cycle = 0;
    std::size_t labeled_size = 0;
    double test_accuracy = 0.0;
    double r_avg = 0.0;     // value available at selection time; NaN otherwise
    double wall_clock_s = 0.0;
    std::vector<std::string> queried_ids;
};

struct ALRun {
    // Row 0 covers the bootstrap training on the initial pool (no query);
    // rows 1..cycles each record one query + retrain round.
    std::vector<CycleRecord> rows;
    MlpModel initial_model;
    std::vector<MlpModel> checkpoints;                       // one per query cycle
    std::vector<std::vector<std::string>> labeled_ids_per_cycle; // after each row
    std::vector<std::string> final_unlabeled_ids;
};

// The q ids with the largest values; ties resolve to the lowest id. Exact.
std::vector<std::string> select_topk(const std::vector<std::pair<std::string, double>>& scores,
                                     std::size_t q);

// Greedy k-center selection: q times, take the unlabeled point whose minimum
// distance to the labeled set plus everything already picked is largest;
// ties resolve to the lowest id.
std::vector<std::string> coreset_select(
    const std::vector<std::vector<double>>& labeled_features,
    const std::vector<std::pair<std::string, std::vector<double>>>& unlabeled_features,
    std::size_t q);

// Pool-based loop: class-stratified initial pool, bootstrap training, then
// per cycle: score the unlabeled pool with the previous model, move the top
// q picks into the labeled pool, retrain from scratch (fresh seeded init),
// record test accuracy. Deterministic for a fixed config.
ALRun run_cycles(const Dataset& train, const Dataset& test, const ALConfig& config);

std::string curve_to_csv(const ALRun& run, Strategy strategy, std::uint64_t seed);

} // namespace sisom
