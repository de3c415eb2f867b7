#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sisom/comparison_set.hpp"

namespace sisom {

enum class ScoreMode { Sisom, Sisome, Energy };

// Which class the STORED samples are grouped by when answering same-class /
// other-class queries. The query side always uses its predicted pseudo-class.
enum class StoredClassMode { TrueLabel, PseudoClass };

ScoreMode parse_score_mode(const std::string& name);
std::string score_mode_name(ScoreMode mode);

struct ClassDistances {
    double d_in = 0.0;
    double d_out = 0.0;
};

// Exact brute-force nearest distances from the query's enhanced feature to
// stored samples of the query's pseudo-class (d_in) and of any other class
// (d_out). An excluded id is invisible to both searches; a sample is never
// compared with itself.
ClassDistances class_distances(const EnhancedFeature& query, const ComparisonSet& set,
                               std::optional<std::string> exclude_id = std::nullopt,
                               StoredClassMode stored = StoredClassMode::TrueLabel);

// d_in / (d_out + eps); exactly 0 when d_in is 0.
double sisom_score(double d_in, double d_out);

// Strictly decreasing map of the ratio into (0, 0.25]; higher means more
// in-distribution.
double ood_score(double r);

// -log sum exp(logits), max-shifted. Higher means less confident.
double energy_score(std::span<const double> logits);

// min(r_avg,1) * energy + max(1 - r_avg, 0) * r.
double fuse(double r, double energy, double r_avg);

struct SeparabilityReport {
    double r_avg = 0.0;
    std::vector<double> per_sample_ratios;
    // Entries whose own stored copy sat in the same-class candidate set and
    // therefore had to be skipped.
    std::size_t excluded_self_matches = 0;
};

// Mean distance ratio over the stored entries, each scored against the set
// with itself excluded. Lower means better class separation. Requires at
// least two classes and two entries per class.
SeparabilityReport separability(const ComparisonSet& set,
                                StoredClassMode stored = StoredClassMode::TrueLabel);

struct ScoreBundle {
    std::string sample_id;
    int pseudo_class = 0;
    double d_in = 0.0;
    double d_out = 0.0;
    double r = 0.0;
    double r_ood = 0.0;
    double energy = 0.0;
    double fused = 0.0;
};

struct BatchScores {
    std::vector<ScoreBundle> bundles;
    // Value used (or computed as a diagnostic); NaN when unavailable.
    double r_avg_used = 0.0;
};

// Full pipeline per query: forward, gradient, enhance, distances, scores.
// `fused` is the mode's selection score: r for sisom, the energy/ratio fusion
// for sisome, raw energy for energy. With `standardize_fusion` the fusion
// uses z-standardized r and energy (per batch) instead of the raw values;
// off by default. Order-preserving and pure.
BatchScores score_batch(const MlpModel& model, const SteepnessConfig& steepness,
                        const ComparisonSet& set, const Dataset& queries, ScoreMode mode,
                        std::optional<double> r_avg_override = std::nullopt,
                        StoredClassMode stored = StoredClassMode::TrueLabel,
                        bool standardize_fusion = false);

// In-distribution confidence used for OOD decisions: r_ood for sisom, -fused
// for sisome, -energy for energy. Higher always means more in-distribution.
double ind_score(const ScoreBundle& bundle, ScoreMode mode);

std::string scores_to_csv(const std::vector<ScoreBundle>& bundles);

} // namespace sisom
