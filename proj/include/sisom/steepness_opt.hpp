#pragma once

#include <string>
#include <vector>

#include "sisom/scoring.hpp"

namespace sisom {

// Per-layer candidate lists for the sigmoid steepness. With `monotone` set,
// combinations where a deeper layer's value falls below a shallower layer's
// are filtered out before evaluation.
struct SteepnessSearchSpace {
    std::vector<std::vector<double>> candidates;
    bool monotone = false;

    void validate(std::size_t n_capture_layers) const;
};

struct SteepnessEvaluation {
    std::vector<double> alpha;
    double r_avg = 0.0;
};

struct SteepnessResult {
    SteepnessConfig best;
    double best_r_avg = 0.0;
    // Every evaluated combination, in canonical enumeration order.
    std::vector<SteepnessEvaluation> table;
};

// Exhaustive grid search for the steepness set minimizing the mean distance
// ratio of the labeled pool. Gradients are computed once per sample and
// reused across candidates (steepness only enters the sigmoid). Ties resolve
// to the lexicographically smallest tuple.
SteepnessResult optimize_steepness(const MlpModel& model, const Dataset& labeled,
                                   const SteepnessSearchSpace& space,
                                   StoredClassMode stored = StoredClassMode::TrueLabel);

std::string steepness_table_to_csv(const std::vector<SteepnessEvaluation>& table);

} // namespace sisom
