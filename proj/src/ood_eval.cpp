#include "sisom/ood_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sisom {

double auroc(std::span<const double> ind_scores, std::span<const double> ood_scores) {
    if (ind_scores.empty() || ood_scores.empty())
        throw ConfigError("auroc undefined: empty score list");

    struct Tagged {
        double value;
        bool ind;
    };
    std::vector<Tagged> pooled;
    pooled.reserve(ind_scores.size() + ood_scores.size());
    for (const double v : ind_scores) pooled.push_back({v, true});
    for (const double v : ood_scores) pooled.push_back({v, false});
    std::sort(pooled.begin(), pooled.end(),
              [](const Tagged& a, const Tagged& b) { return a.value < b.value; });

    // Sum of in-distribution ranks with average ranks across tie groups.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].ind) rank_sum += avg_rank;
        i = j;
    }
    const double n = static_cast<double>(ind_scores.size());
    const double m = static_cast<double>(ood_scores.size());
    return (rank_sum - n * (n + 1.0) / 2.0) / (n * m);
}

double fpr_at_95tpr(std::span<const double> ind_scores, std::span<const double> ood_scores) {
    if (ind_scores.empty() || ood_scores.empty())
        throw ConfigError("fpr@95tpr undefined: empty score list");

    std::vector<double> ind(ind_scores.begin(), ind_scores.end());
    std::vector<double> ood(ood_scores.begin(), ood_scores.end());
    std::sort(ind.begin(), ind.end());
    std::sort(ood.begin(), ood.end());

    std::vector<double> thresholds = ind;
    thresholds.insert(thresholds.end(), ood.begin(), ood.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const double n = static_cast<double>(ind.size());
    const double m = static_cast<double>(ood.size());
    double best = 1.0;
    for (const double lambda : thresholds) {
        const double tpr =
            static_cast<double>(ind.end() - std::lower_bound(ind.begin(), ind.end(), lambda)) / n;
        if (tpr < 0.95) continue;
        const double fpr =
            static_cast<double>(ood.end() - std::lower_bound(ood.begin(), ood.end(), lambda)) / m;
        best = std::min(best, fpr);
    }
    return best;
}

namespace {

std::vector<double> ind_scores_of(const std::vector<ScoreBundle>& bundles, ScoreMode mode) {
    std::vector<double> out;
    out.reserve(bundles.size());
    for (const ScoreBundle& b : bundles) out.push_back(ind_score(b, mode));
    return out;
}

SetHistogram make_histogram(const std::string& checkpoint, const std::string& set,
                            std::span<const double> ind, std::span<const double> ood) {
    constexpr std::size_t kBins = 50;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const double v : ind) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const double v : ood) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    SetHistogram hist;
    hist.checkpoint = checkpoint;
    hist.set = set;
    const double width = (hi - lo) / static_cast<double>(kBins);
    hist.bins.resize(kBins);
    for (std::size_t b = 0; b < kBins; ++b) {
        hist.bins[b].lo = lo + width * static_cast<double>(b);
        hist.bins[b].hi = b + 1 == kBins ? hi : lo + width * static_cast<double>(b + 1);
    }
    const auto bin_of = [&](double v) -> std::size_t {
        if (width <= 0.0) return 0;
        const double t = (v - lo) / width;
        const auto b = static_cast<std::size_t>(std::max(0.0, t));
        return std::min(b, kBins - 1);
    };
    for (const double v : ind) ++hist.bins[bin_of(v)].ind_count;
    for (const double v : ood) ++hist.bins[bin_of(v)].ood_count;
    return hist;
}

} // namespace

BenchmarkResult run_benchmark(const std::vector<CheckpointInput>& checkpoints,
                              const Dataset& ind_eval, const std::vector<OodSet>& ood_sets,
                              const ScorerSetup& setup) {
    if (checkpoints.empty()) throw ConfigError("ood-eval: no checkpoints");
    if (ood_sets.empty()) throw ConfigError("ood-eval: no ood sets");

    BenchmarkResult result;
    std::vector<ScoreMode> scorers = {setup.mode};
    if (setup.mode != ScoreMode::Energy) scorers.push_back(ScoreMode::Energy);

    for (const CheckpointInput& cp : checkpoints) {
        SteepnessConfig steepness = setup.steepness;
        if (steepness.alpha.empty())
            steepness = SteepnessConfig::uniform(cp.model.capture_layers().size(), 1.0);

        ComparisonSet set = ComparisonSet::build(cp.model, cp.labeled, steepness);
        if (setup.subset.enabled)
            set = set.reduce(setup.subset.fraction, setup.subset.radius);

        const BatchScores ind_batch = score_batch(cp.model, steepness, set, ind_eval,
                                                  setup.mode, setup.r_avg_override,
                                                  setup.stored_class,
                                                  setup.standardize_fusion);
        result.r_avg_used = ind_batch.r_avg_used;

        struct PairMetrics {
            std::string tag;
            double auroc = 0.0;
            double fpr95 = 0.0;
            bool ok = false;
        };
        std::vector<std::vector<PairMetrics>> per_scorer(scorers.size());

        for (const OodSet& ood : ood_sets) {
            std::vector<ScoreBundle> ood_bundles;
            std::string error;
            try {
                ood_bundles = score_batch(cp.model, steepness, set, ood.data, setup.mode,
                                          setup.r_avg_override, setup.stored_class,
                                          setup.standardize_fusion)
                                  .bundles;
            } catch (const std::exception& e) {
                error = e.what();
            }

            for (std::size_t s = 0; s < scorers.size(); ++s) {
                MetricsRow row;
                row.scorer = score_mode_name(scorers[s]);
                row.checkpoint = cp.name;
                row.set = ood.name;
                row.tag = ood.tag;
                row.n_ind = ind_eval.size();
                row.n_ood = ood.data.size();
                if (error.empty()) {
                    const std::vector<double> ind = ind_scores_of(ind_batch.bundles, scorers[s]);
                    const std::vector<double> oods = ind_scores_of(ood_bundles, scorers[s]);
                    row.auroc = auroc(ind, oods);
                    row.fpr95 = fpr_at_95tpr(ind, oods);
                    per_scorer[s].push_back({ood.tag, row.auroc, row.fpr95, true});
                    if (s == 0)
                        result.histograms.push_back(
                            make_histogram(cp.name, ood.name, ind, oods));
                } else {
                    row.error = error;
                }
                result.rows.push_back(std::move(row));
            }
        }

        // Aggregate rows per scorer and tag.
        for (std::size_t s = 0; s < scorers.size(); ++s) {
            for (const std::string tag : {"near", "far"}) {
                double auroc_sum = 0.0, fpr_sum = 0.0;
                std::size_t count = 0;
                for (const PairMetrics& pm : per_scorer[s]) {
                    if (!pm.ok || pm.tag != tag) continue;
                    auroc_sum += pm.auroc;
                    fpr_sum += pm.fpr95;
                    ++count;
                }
                if (count == 0) continue;
                MetricsRow row;
                row.scorer = score_mode_name(scorers[s]);
                row.checkpoint = cp.name;
                row.set = std::string(tag) + "-mean";
                row.tag = tag;
                row.auroc = auroc_sum / static_cast<double>(count);
                row.fpr95 = fpr_sum / static_cast<double>(count);
                row.n_ind = ind_eval.size();
                result.rows.push_back(std::move(row));
            }
        }
    }
    return result;
}

std::string histogram_to_csv(const SetHistogram& hist) {
    std::ostringstream out;
    out << "checkpoint,set,bin,lo,hi,ind_count,ood_count\n";
    char buf[64];
    for (std::size_t b = 0; b < hist.bins.size(); ++b) {
        out << hist.checkpoint << ',' << hist.set << ',' << b << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", hist.bins[b].lo);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", hist.bins[b].hi);
        out << buf << ',' << hist.bins[b].ind_count << ',' << hist.bins[b].ood_count << '\n';
    }
    return out.str();
}

} // namespace sisom
