#include "sisom/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sisom {

namespace {
constexpr double kRatioEps = 1e-12;
} // namespace

ScoreMode parse_score_mode(const std::string& name) {
    if (name == "sisom") return ScoreMode::Sisom;
    if (name == "sisome") return ScoreMode::Sisome;
    if (name == "energy") return ScoreMode::Energy;
    throw ConfigError("unknown scorer mode '" + name + "' (expected sisom, sisome or energy)");
}

std::string score_mode_name(ScoreMode mode) {
    switch (mode) {
        case ScoreMode::Sisom: return "sisom";
        case ScoreMode::Sisome: return "sisome";
        case ScoreMode::Energy: return "energy";
    }
    return "?";
}

namespace {

int stored_class_of(const LabeledFeature& entry, StoredClassMode stored) {
    return stored == StoredClassMode::TrueLabel ? entry.true_class
                                                : entry.feature.pseudo_class;
}

ClassDistances distances_impl(std::span<const double> query_values, int query_class,
                              const ComparisonSet& set,
                              std::optional<std::size_t> exclude_index,
                              StoredClassMode stored, const std::string& query_name) {
    double best_in = std::numeric_limits<double>::infinity();
    double best_out = std::numeric_limits<double>::infinity();
    const std::vector<LabeledFeature>& entries = set.entries();
    if (entries.empty()) throw ConfigError("class_distances: empty comparison set");

    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (exclude_index && *exclude_index == i) continue;
        const LabeledFeature& e = entries[i];
        if (e.feature.values.size() != query_values.size())
            throw ConfigError("class_distances: feature width mismatch");
        const double d2 = squared_distance(query_values, e.feature.values);
        if (stored_class_of(e, stored) == query_class) {
            best_in = std::min(best_in, d2);
        } else {
            best_out = std::min(best_out, d2);
        }
    }
    if (!std::isfinite(best_in))
        throw ConfigError("class_distances: no stored sample of class " +
                          std::to_string(query_class) + " for query " + query_name);
    if (!std::isfinite(best_out))
        throw ConfigError("class_distances: no stored sample outside class " +
                          std::to_string(query_class) + " for query " + query_name);
    return {std::sqrt(best_in), std::sqrt(best_out)};
}

} // namespace

ClassDistances class_distances(const EnhancedFeature& query, const ComparisonSet& set,
                               std::optional<std::string> exclude_id,
                               StoredClassMode stored) {
    std::optional<std::size_t> exclude_index;
    if (exclude_id) {
        const std::vector<LabeledFeature>& entries = set.entries();
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].feature.source_id == *exclude_id) {
                exclude_index = i;
                break;
            }
    }
    return distances_impl(query.values, query.pseudo_class, set, exclude_index, stored,
                          query.source_id.empty() ? std::string("<query>") : query.source_id);
}

double sisom_score(double d_in, double d_out) {
    if (d_in < 0.0 || d_out < 0.0) throw ConfigError("sisom_score: negative distance");
    if (d_in == 0.0) return 0.0;
    return d_in / (d_out + kRatioEps);
}

double ood_score(double r) {
    if (r < 0.0) throw ConfigError("ood_score: negative ratio");
    // 1 - (sigmoid(r) + 1) / 2 == sigmoid(-r) / 2, which does not cancel to
    // zero for large ratios.
    return stable_sigmoid(-r) / 2.0;
}

double energy_score(std::span<const double> logits) {
    if (logits.empty()) throw ConfigError("energy_score: empty logits");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (const double v : logits) max_logit = std::max(max_logit, v);
    double sum = 0.0;
    for (const double v : logits) sum += std::exp(v - max_logit);
    return -(max_logit + std::log(sum));
}

double fuse(double r, double energy, double r_avg) {
    return std::min(r_avg, 1.0) * energy + std::max(1.0 - r_avg, 0.0) * r;
}

SeparabilityReport separability(const ComparisonSet& set, StoredClassMode stored) {
    if (set.num_classes() < 2 || set.class_index().size() < 2)
        throw ConfigError("separability undefined: need at least two classes");
    std::size_t present = 0;
    for (const std::vector<std::size_t>& members : set.class_index()) {
        if (members.empty()) continue;
        ++present;
        if (members.size() < 2)
            throw ConfigError("separability undefined: a class has a single entry");
    }
    if (present < 2)
        throw ConfigError("separability undefined: need at least two populated classes");

    SeparabilityReport report;
    const std::vector<LabeledFeature>& entries = set.entries();
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const LabeledFeature& e = entries[i];
        if (stored_class_of(e, stored) == e.feature.pseudo_class)
            ++report.excluded_self_matches;
        const ClassDistances d = distances_impl(e.feature.values, e.feature.pseudo_class, set,
                                                i, stored, e.feature.source_id);
        const double r = sisom_score(d.d_in, d.d_out);
        report.per_sample_ratios.push_back(r);
        total += r;
    }
    report.r_avg = total / static_cast<double>(entries.size());
    return report;
}

namespace {

// In-place z-standardization; a constant column keeps scale 1.
void standardize(std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    const double scale = sd > 0.0 ? sd : 1.0;
    for (double& v : values) v = (v - mean) / scale;
}

} // namespace

BatchScores score_batch(const MlpModel& model, const SteepnessConfig& steepness,
                        const ComparisonSet& set, const Dataset& queries, ScoreMode mode,
                        std::optional<double> r_avg_override, StoredClassMode stored,
                        bool standardize_fusion) {
    BatchScores out;
    if (r_avg_override) {
        out.r_avg_used = *r_avg_override;
    } else {
        try {
            out.r_avg_used = separability(set, stored).r_avg;
        } catch (const ConfigError&) {
            if (mode == ScoreMode::Sisome) throw;
            out.r_avg_used = std::numeric_limits<double>::quiet_NaN();
        }
    }

    out.bundles.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const ForwardTrace trace = model.forward(queries.sample(i));
        const auto grads = model.grad_wrt_captured(trace);
        const EnhancedFeature feature = enhance(trace, grads, steepness, queries.ids[i]);

        ScoreBundle b;
        b.sample_id = queries.ids[i];
        b.pseudo_class = feature.pseudo_class;
        try {
            const ClassDistances d = class_distances(feature, set, std::nullopt, stored);
            b.d_in = d.d_in;
            b.d_out = d.d_out;
        } catch (const ConfigError& e) {
            throw ConfigError("scoring sample " + queries.ids[i] + ": " + e.what());
        }
        b.r = sisom_score(b.d_in, b.d_out);
        b.r_ood = ood_score(b.r);
        b.energy = energy_score(trace.logits);
        switch (mode) {
            case ScoreMode::Sisom: b.fused = b.r; break;
            case ScoreMode::Sisome: b.fused = fuse(b.r, b.energy, out.r_avg_used); break;
            case ScoreMode::Energy: b.fused = b.energy; break;
        }
        out.bundles.push_back(std::move(b));
    }

    if (mode == ScoreMode::Sisome && standardize_fusion && !out.bundles.empty()) {
        std::vector<double> ratios, energies;
        for (const ScoreBundle& b : out.bundles) {
            ratios.push_back(b.r);
            energies.push_back(b.energy);
        }
        standardize(ratios);
        standardize(energies);
        for (std::size_t i = 0; i < out.bundles.size(); ++i)
            out.bundles[i].fused = fuse(ratios[i], energies[i], out.r_avg_used);
    }
    return out;
}

double ind_score(const ScoreBundle& bundle, ScoreMode mode) {
    switch (mode) {
        case ScoreMode::Sisom: return bundle.r_ood;
        case ScoreMode::Sisome: return -bundle.fused;
        case ScoreMode::Energy: return -bundle.energy;
    }
    return 0.0;
}

std::string scores_to_csv(const std::vector<ScoreBundle>& bundles) {
    std::ostringstream out;
    out << "sample_id,pseudo_class,d_in,d_out,r,r_ood,energy,fused\n";
    char buf[64];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (const ScoreBundle& b : bundles) {
        out << b.sample_id << ',' << b.pseudo_class;
        put(b.d_in);
        put(b.d_out);
        put(b.r);
        put(b.r_ood);
        put(b.energy);
        put(b.fused);
        out << '\n';
    }
    return out.str();
}

} // namespace sisom
