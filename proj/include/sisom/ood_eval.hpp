#pragma once

#include <span>
#include <string>
#include <vector>

#include "sisom/scoring.hpp"

namespace sisom {

enum class Verdict { InD, OOD };

// Threshold rule: in-distribution iff score >= lambda (boundary inclusive).
inline Verdict decide(double score, double lambda) {
    return score >= lambda ? Verdict::InD : Verdict::OOD;
}

// Probability that a random in-distribution score exceeds a random OOD score,
// ties half-weighted. Rank-sum implementation, exact under ties.
double auroc(std::span<const double> ind_scores, std::span<const double> ood_scores);

// Smallest false-positive rate over thresholds reaching TPR >= 0.95, with
// in-distribution as the positive class; thresholds sweep the score values.
double fpr_at_95tpr(std::span<const double> ind_scores, std::span<const double> ood_scores);

struct OodSet {
    std::string name;
    std::string tag;    // "near" or "far"
    Dataset data;
};

struct CheckpointInput {
    std::string name;
    MlpModel model;
    Dataset labeled;    // comparison pool for this checkpoint
};

struct ScorerSetup {
    ScoreMode mode = ScoreMode::Sisom;
    SteepnessConfig steepness;
    SubsetPolicy subset;
    std::optional<double> r_avg_override;
    StoredClassMode stored_class = StoredClassMode::TrueLabel;
    bool standardize_fusion = false;
};

struct MetricsRow {
    std::string scorer;
    std::string checkpoint;
    std::string set;
    std::string tag;
    double auroc = 0.0;
    double fpr95 = 0.0;
    std::size_t n_ind = 0;
    std::size_t n_ood = 0;
    std::string error;   // nonempty when this pair failed; metrics then unset
};

struct HistBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t ind_count = 0;
    std::size_t ood_count = 0;
};

struct SetHistogram {
    std::string checkpoint;
    std::string set;
    std::vector<HistBin> bins;
};

struct BenchmarkResult {
    std::vector<MetricsRow> rows;
    std::vector<SetHistogram> histograms;
    double r_avg_used = 0.0;   // from the last checkpoint scored
};

// Evaluates every (checkpoint, ood set) pair for the configured scorer and
// the energy baseline, appends near-mean/far-mean aggregate rows, and builds
// a 50-bin score histogram per pair for the configured scorer. Failures are
// recorded in the row and the run continues.
BenchmarkResult run_benchmark(const std::vector<CheckpointInput>& checkpoints,
                              const Dataset& ind_eval, const std::vector<OodSet>& ood_sets,
                              const ScorerSetup& setup);

std::string histogram_to_csv(const SetHistogram& hist);

} // namespace sisom
