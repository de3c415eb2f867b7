#include "sisom/feature_space.hpp"

#include <cmath>
#include <limits>

#include "sisom/errors.hpp"

namespace sisom {

void SteepnessConfig::validate(std::size_t n_capture_layers) const {
    if (alpha.size() != n_capture_layers)
        throw ConfigError("steepness: need one alpha per captured layer (" +
                          std::to_string(n_capture_layers) + "), got " +
                          std::to_string(alpha.size()));
    for (const double a : alpha)
        if (!(a > 0.0)) throw ConfigError("steepness: alpha values must be positive");
}

double stable_sigmoid(double x) {
    double v;
    if (x >= 0.0) {
        v = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        v = e / (1.0 + e);
    }
    // exp underflow at |x| > ~745 would otherwise yield exactly 0 or 1.
    const double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    return v;
}

int argmax_lowest_tie(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return static_cast<int>(best);
}

std::vector<double> concat_features(const ForwardTrace& trace) {
    std::vector<double> z;
    for (const std::vector<double>& layer : trace.captured)
        z.insert(z.end(), layer.begin(), layer.end());
    return z;
}

EnhancedFeature enhance(const ForwardTrace& trace,
                        const std::vector<std::vector<double>>& grads,
                        const SteepnessConfig& steepness,
                        std::string source_id) {
    if (grads.size() != trace.captured.size())
        throw ConfigError("enhance: gradients not aligned with captured layers");
    steepness.validate(trace.captured.size());

    EnhancedFeature out;
    out.source_id = std::move(source_id);
    for (std::size_t j = 0; j < trace.captured.size(); ++j) {
        const std::vector<double>& h = trace.captured[j];
        const std::vector<double>& g = grads[j];
        if (g.size() != h.size())
            throw ConfigError("enhance: gradient width mismatch at captured layer " +
                              std::to_string(j));
        for (std::size_t i = 0; i < h.size(); ++i)
            out.values.push_back(stable_sigmoid(steepness.alpha[j] * h[i] * g[i]));
    }
    out.pseudo_class = argmax_lowest_tie(trace.logits);
    return out;
}

} // namespace sisom
