#include "sisom/comparison_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sisom {

std::vector<SampleDerivatives> precompute_derivatives(const MlpModel& model,
                                                      const Dataset& labeled) {
    if (!labeled.labeled()) throw ConfigError("comparison set needs a labeled dataset");
    if (labeled.size() == 0) throw ConfigError("comparison set: empty labeled pool");
    std::vector<SampleDerivatives> out;
    out.reserve(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        SampleDerivatives d;
        d.trace = model.forward(labeled.sample(i));
        d.grads = model.grad_wrt_captured(d.trace);
        d.id = labeled.ids[i];
        d.label = (*labeled.labels)[i];
        out.push_back(std::move(d));
    }
    return out;
}

ComparisonSet ComparisonSet::build(const MlpModel& model, const Dataset& labeled,
                                   const SteepnessConfig& steepness) {
    return build_from_derivatives(precompute_derivatives(model, labeled), steepness,
                                  static_cast<int>(model.num_classes()));
}

ComparisonSet ComparisonSet::build_from_derivatives(const std::vector<SampleDerivatives>& derivs,
                                                    const SteepnessConfig& steepness,
                                                    int num_classes) {
    std::vector<LabeledFeature> entries;
    entries.reserve(derivs.size());
    for (const SampleDerivatives& d : derivs) {
        if (d.label < 0 || d.label >= num_classes)
            throw ConfigError("comparison set: label out of range for sample " + d.id);
        entries.push_back({enhance(d.trace, d.grads, steepness, d.id), d.label});
    }
    ComparisonSet set = from_entries(std::move(entries), num_classes);
    for (int c = 0; c < num_classes; ++c)
        if (set.by_class_[static_cast<std::size_t>(c)].empty())
            throw ConfigError("comparison set: class " + std::to_string(c) + " has no samples");
    return set;
}

ComparisonSet ComparisonSet::from_entries(std::vector<LabeledFeature> entries, int num_classes) {
    ComparisonSet set;
    set.entries_ = std::move(entries);
    set.num_classes_ = num_classes;
    set.rebuild_index();
    return set;
}

void ComparisonSet::rebuild_index() {
    by_class_.assign(static_cast<std::size_t>(num_classes_), {});
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const int c = entries_[i].true_class;
        if (c < 0 || c >= num_classes_)
            throw ConfigError("comparison set: entry class out of range");
        by_class_[static_cast<std::size_t>(c)].push_back(i);
    }
}

std::size_t ComparisonSet::feature_dim() const {
    return entries_.empty() ? 0 : entries_.front().feature.values.size();
}

std::size_t coverage_budget(double fraction, std::size_t class_size) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("subset fraction must be in (0, 1]");
    const double target = fraction * static_cast<double>(class_size);
    const std::size_t b = static_cast<std::size_t>(std::ceil(target - 1e-9));
    return std::min(class_size, std::max<std::size_t>(1, b));
}

CoverageSelection greedy_coverage_select(const std::vector<std::vector<double>>& points,
                                         double radius, std::size_t budget) {
    if (!(radius > 0.0)) throw ConfigError("coverage radius must be positive");
    const std::size_t n = points.size();
    CoverageSelection result;
    if (n == 0 || budget == 0) return result;

    const double r2 = radius * radius;
    std::vector<bool> covered(n, false);
    std::vector<bool> selected(n, false);
    std::size_t n_covered = 0;

    while (result.selected.size() < budget && n_covered < n) {
        std::size_t best = n;
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (selected[i]) continue;
            std::size_t gain = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (!covered[j] && squared_distance(points[i], points[j]) <= r2) ++gain;
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        if (best == n) break; // every candidate has zero gain
        selected[best] = true;
        result.selected.push_back(best);
        result.marginal_coverage.push_back(best_gain);
        for (std::size_t j = 0; j < n; ++j)
            if (!covered[j] && squared_distance(points[best], points[j]) <= r2) {
                covered[j] = true;
                ++n_covered;
            }
    }

    // Spend leftover budget on diversity: repeatedly take the point farthest
    // from everything selected so far.
    if (result.selected.size() < budget) {
        std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i)
            for (const std::size_t s : result.selected)
                min_d2[i] = std::min(min_d2[i], squared_distance(points[i], points[s]));
        while (result.selected.size() < budget) {
            std::size_t best = n;
            double best_d2 = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (selected[i]) continue;
                if (min_d2[i] > best_d2) {
                    best_d2 = min_d2[i];
                    best = i;
                }
            }
            if (best == n) break;
            selected[best] = true;
            result.selected.push_back(best);
            result.marginal_coverage.push_back(0);
            for (std::size_t i = 0; i < n; ++i)
                min_d2[i] = std::min(min_d2[i], squared_distance(points[i], points[best]));
        }
    }
    return result;
}

namespace {

// Median nearest-neighbor distance within one point set; fallback for
// degenerate classes where all pairwise distances vanish.
double median_nn_distance(const std::vector<std::vector<double>>& points) {
    std::vector<double> nn;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, squared_distance(points[i], points[j]));
        }
        if (std::isfinite(best)) nn.push_back(std::sqrt(best));
    }
    if (nn.empty()) return 1.0;
    std::sort(nn.begin(), nn.end());
    const double median = nn[nn.size() / 2];
    return median > 0.0 ? median : 1.0;
}

} // namespace

ComparisonSet ComparisonSet::reduce(double fraction, std::optional<double> radius) const {
    if (radius && !(*radius > 0.0)) throw ConfigError("coverage radius must be positive");

    std::vector<std::size_t> kept;
    for (const std::vector<std::size_t>& members : by_class_) {
        if (members.empty()) continue;
        std::vector<std::vector<double>> points;
        points.reserve(members.size());
        for (const std::size_t idx : members) points.push_back(entries_[idx].feature.values);

        const double r = radius ? *radius : median_nn_distance(points);
        const std::size_t budget = coverage_budget(fraction, members.size());
        const CoverageSelection sel = greedy_coverage_select(points, r, budget);
        for (const std::size_t local : sel.selected) kept.push_back(members[local]);
    }
    std::sort(kept.begin(), kept.end());

    std::vector<LabeledFeature> reduced_entries;
    reduced_entries.reserve(kept.size());
    for (const std::size_t idx : kept) reduced_entries.push_back(entries_[idx]);

    ComparisonSet out = from_entries(std::move(reduced_entries), num_classes_);
    out.reduced_ = true;
    out.fraction_ = fraction;
    return out;
}

std::string ComparisonSet::to_csv() const {
    std::ostringstream out;
    out << "source_id,true_class,pseudo_class";
    for (std::size_t d = 0; d < feature_dim(); ++d) out << ",z" << d;
    out << '\n';
    char buf[64];
    for (const LabeledFeature& e : entries_) {
        out << e.feature.source_id << ',' << e.true_class << ',' << e.feature.pseudo_class;
        for (const double v : e.feature.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace sisom
