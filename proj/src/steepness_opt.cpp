#include "sisom/steepness_opt.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sisom {

void SteepnessSearchSpace::validate(std::size_t n_capture_layers) const {
    if (candidates.size() != n_capture_layers)
        throw ConfigError("steepness search: need one candidate list per captured layer");
    for (const std::vector<double>& layer : candidates) {
        if (layer.empty()) throw ConfigError("steepness search: empty candidate list");
        for (const double a : layer)
            if (!(a > 0.0)) throw ConfigError("steepness search: candidates must be positive");
    }
}

namespace {

bool is_monotone(const std::vector<double>& alpha) {
    for (std::size_t i = 1; i < alpha.size(); ++i)
        if (alpha[i] < alpha[i - 1]) return false;
    return true;
}

} // namespace

SteepnessResult optimize_steepness(const MlpModel& model, const Dataset& labeled,
                                   const SteepnessSearchSpace& space,
                                   StoredClassMode stored) {
    space.validate(model.capture_layers().size());
    const std::vector<SampleDerivatives> derivs = precompute_derivatives(model, labeled);
    const int num_classes = static_cast<int>(model.num_classes());

    SteepnessResult result;
    bool have_best = false;

    // Odometer over candidate indices, first layer slowest.
    std::vector<std::size_t> cursor(space.candidates.size(), 0);
    while (true) {
        std::vector<double> alpha(cursor.size());
        for (std::size_t l = 0; l < cursor.size(); ++l)
            alpha[l] = space.candidates[l][cursor[l]];

        if (!space.monotone || is_monotone(alpha)) {
            const ComparisonSet set = ComparisonSet::build_from_derivatives(
                derivs, SteepnessConfig{alpha}, num_classes);
            const double r_avg = separability(set, stored).r_avg;
            result.table.push_back({alpha, r_avg});
            if (!have_best || r_avg < result.best_r_avg ||
                (r_avg == result.best_r_avg && alpha < result.best.alpha)) {
                result.best = SteepnessConfig{alpha};
                result.best_r_avg = r_avg;
                have_best = true;
            }
        }

        std::size_t l = cursor.size();
        while (l-- > 0) {
            if (++cursor[l] < space.candidates[l].size()) break;
            cursor[l] = 0;
            if (l == 0) {
                if (!have_best)
                    throw ConfigError("steepness search: monotone constraint filtered out "
                                      "every combination");
                return result;
            }
        }
    }
}

std::string steepness_table_to_csv(const std::vector<SteepnessEvaluation>& table) {
    std::ostringstream out;
    if (table.empty()) return "r_avg\n";
    for (std::size_t l = 0; l < table.front().alpha.size(); ++l) out << "alpha_" << l + 1 << ',';
    out << "r_avg\n";
    char buf[64];
    for (const SteepnessEvaluation& row : table) {
        for (const double a : row.alpha) {
            std::snprintf(buf, sizeof(buf), "%.17g", a);
            out << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", row.r_avg);
        out << buf << '\n';
    }
    return out.str();
}

} // namespace sisom
