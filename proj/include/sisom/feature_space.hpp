#pragma once

#include <span>
#include <string>
#include <vector>

#include "sisom/mlp.hpp"

namespace sisom {

// Per-capture-layer sigmoid steepness. One positive value per captured layer.
struct SteepnessConfig {
    std::vector<double> alpha;

    static SteepnessConfig uniform(std::size_t n_layers, double value = 1.0) {
        return SteepnessConfig{std::vector<double>(n_layers, value)};
    }
    void validate(std::size_t n_capture_layers) const;
};

// Gradient-weighted, sigmoid-squashed feature vector of one sample, plus the
// class the model predicts for it. Every component produced by enhance() lies
// strictly inside (0, 1).
struct EnhancedFeature {
    std::vector<double> values;
    int pseudo_class = 0;
    std::string source_id;
};

// Logistic sigmoid, computed on the non-overflowing branch and clamped so the
// result stays strictly inside (0, 1) even when the argument saturates.
double stable_sigmoid(double x);

// Index of the largest element; ties resolve to the lowest index.
int argmax_lowest_tie(std::span<const double> values);

// Concatenation of the captured activations, in capture order.
std::vector<double> concat_features(const ForwardTrace& trace);

// Per layer j and unit i: sigmoid(alpha_j * h_{j,i} * g_{j,i}), concatenated
// in capture order. grads must align with trace.captured.
EnhancedFeature enhance(const ForwardTrace& trace,
                        const std::vector<std::vector<double>>& grads,
                        const SteepnessConfig& steepness,
                        std::string source_id = {});

} // namespace sisom
