#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sisom/dataset.hpp"
#include "sisom/feature_space.hpp"

namespace sisom {

struct LabeledFeature {
    EnhancedFeature feature;
    int true_class = 0;
};

struct SubsetPolicy {
    bool enabled = false;
    double fraction = 0.10;
    std::optional<double> radius;   // nullopt: per-class median nearest-neighbor distance
};

// Precomputed forward/backward state of one labeled sample, so steepness
// candidates can be evaluated without redoing gradients (the gradient does
// not depend on the sigmoid steepness).
struct SampleDerivatives {
    ForwardTrace trace;
    std::vector<std::vector<double>> grads;
    std::string id;
    int label = 0;
};

std::vector<SampleDerivatives> precompute_derivatives(const MlpModel& model,
                                                      const Dataset& labeled);

// Greedy fixed-radius max coverage over one point set: each step selects the
// point covering (within `radius`, itself included) the most not-yet-covered
// points, lowest index on ties, until `budget` points are selected or
// everything is covered. Leftover budget is spent by farthest-point
// traversal from the selected set. Returns selected indices in pick order
// alongside each greedy step's marginal coverage (0 for fill picks).
struct CoverageSelection {
    std::vector<std::size_t> selected;
    std::vector<std::size_t> marginal_coverage;
};
CoverageSelection greedy_coverage_select(const std::vector<std::vector<double>>& points,
                                         double radius, std::size_t budget);

// Per-class budget: max(1, ceil(fraction * class_size)), with a small slack
// so binary fractions like 0.10 * 30 do not round up to 4.
std::size_t coverage_budget(double fraction, std::size_t class_size);

// Immutable store of enhanced labeled samples, indexed by their true class.
// All distance queries in scoring run against one of these.
class ComparisonSet {
public:
    static ComparisonSet build(const MlpModel& model, const Dataset& labeled,
                               const SteepnessConfig& steepness);
    static ComparisonSet build_from_derivatives(const std::vector<SampleDerivatives>& derivs,
                                                const SteepnessConfig& steepness,
                                                int num_classes);
    // For tests and CSV-loaded sets; entries keep the given order.
    static ComparisonSet from_entries(std::vector<LabeledFeature> entries, int num_classes);

    // Class-wise greedy coverage reduction to max(1, ceil(fraction * size))
    // entries per class. With no fixed radius, each class uses the median of
    // its nearest-neighbor distances. Output entries are ordered by
    // (class, original index).
    ComparisonSet reduce(double fraction, std::optional<double> radius) const;

    const std::vector<LabeledFeature>& entries() const { return entries_; }
    const std::vector<std::vector<std::size_t>>& class_index() const { return by_class_; }
    int num_classes() const { return num_classes_; }
    bool reduced() const { return reduced_; }
    double fraction() const { return fraction_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t feature_dim() const;

    std::string to_csv() const;

private:
    void rebuild_index();

    std::vector<LabeledFeature> entries_;
    std::vector<std::vector<std::size_t>> by_class_;
    int num_classes_ = 0;
    bool reduced_ = false;
    double fraction_ = 1.0;
};

} // namespace sisom
