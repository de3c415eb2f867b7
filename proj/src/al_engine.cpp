#include "sisom/al_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "sisom/rng.hpp"

namespace sisom {

Strategy parse_strategy(const std::string& name) {
    if (name == "sisom") return Strategy::Sisom;
    if (name == "sisome") return Strategy::Sisome;
    if (name == "random") return Strategy::Random;
    if (name == "energy") return Strategy::Energy;
    if (name == "coreset") return Strategy::Coreset;
    throw ConfigError("unknown strategy '" + name +
                      "' (expected sisom, sisome, random, energy or coreset)");
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Sisom: return "sisom";
        case Strategy::Sisome: return "sisome";
        case Strategy::Random: return "random";
        case Strategy::Energy: return "energy";
        case Strategy::Coreset: return "coreset";
    }
    return "?";
}

std::vector<std::string> select_topk(const std::vector<std::pair<std::string, double>>& scores,
                                     std::size_t q) {
    if (q > scores.size())
        throw ConfigError("select_topk: q (" + std::to_string(q) + ") exceeds pool size (" +
                          std::to_string(scores.size()) + ")");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].second != scores[b].second) return scores[a].second > scores[b].second;
        return scores[a].first < scores[b].first;
    });
    std::vector<std::string> picked;
    picked.reserve(q);
    for (std::size_t i = 0; i < q; ++i) picked.push_back(scores[order[i]].first);
    return picked;
}

std::vector<std::string> coreset_select(
    const std::vector<std::vector<double>>& labeled_features,
    const std::vector<std::pair<std::string, std::vector<double>>>& unlabeled_features,
    std::size_t q) {
    if (q > unlabeled_features.size())
        throw ConfigError("coreset_select: q exceeds pool size");
    if (labeled_features.empty())
        throw ConfigError("coreset_select: empty labeled set");

    const std::size_t n = unlabeled_features.size();
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (const std::vector<double>& l : labeled_features)
            min_d2[i] = std::min(min_d2[i], squared_distance(unlabeled_features[i].second, l));

    std::vector<bool> picked(n, false);
    std::vector<std::string> out;
    out.reserve(q);
    for (std::size_t step = 0; step < q; ++step) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (picked[i]) continue;
            if (best == n || min_d2[i] > min_d2[best] ||
                (min_d2[i] == min_d2[best] &&
                 unlabeled_features[i].first < unlabeled_features[best].first))
                best = i;
        }
        picked[best] = true;
        out.push_back(unlabeled_features[best].first);
        for (std::size_t i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], squared_distance(unlabeled_features[i].second,
                                                             unlabeled_features[best].second));
    }
    return out;
}

namespace {

std::vector<std::size_t> stratified_initial(const Dataset& train, std::size_t initial_size,
                                            int num_classes, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < train.size(); ++i)
        by_class[static_cast<std::size_t>((*train.labels)[i])].push_back(i);
    for (const auto& members : by_class)
        if (members.empty())
            throw ConfigError("al-run: a class has no training samples");

    // Quotas: floor share per class, remainder to the lowest class indices;
    // overflow beyond a class's size spills to the next classes.
    const std::size_t c = by_class.size();
    std::vector<std::size_t> quota(c, initial_size / c);
    for (std::size_t i = 0; i < initial_size % c; ++i) ++quota[i];
    std::size_t spill = 0;
    for (std::size_t pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < c; ++i) {
            quota[i] += spill;
            spill = 0;
            if (quota[i] > by_class[i].size()) {
                spill = quota[i] - by_class[i].size();
                quota[i] = by_class[i].size();
            }
        }
    }
    if (spill > 0) throw ConfigError("al-run: initial_size exceeds training pool");

    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < c; ++i) {
        Rng class_rng = rng.fork("pool-init", i);
        for (const std::size_t k :
             class_rng.sample_without_replacement(by_class[i].size(), quota[i]))
            picked.push_back(by_class[i][k]);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::vector<double> last_captured_activation(const MlpModel& model,
                                             std::span<const double> x) {
    return model.forward(x).captured.back();
}

} // namespace

ALRun run_cycles(const Dataset& train, const Dataset& test, const ALConfig& config) {
    if (!train.labeled() || !test.labeled())
        throw ConfigError("al-run: train and test sets must be labeled");
    if (config.cycles < 1) throw ConfigError("al-run: cycles must be >= 1");
    if (config.query_size < 1) throw ConfigError("al-run: query_size must be >= 1");
    const int num_classes = train.num_classes();
    if (config.initial_size < static_cast<std::size_t>(num_classes))
        throw ConfigError("al-run: initial_size must cover every class");
    if (config.initial_size + config.cycles * config.query_size > train.size())
        throw ConfigError("al-run: schedule needs more samples than the training pool has");

    SteepnessConfig steepness = config.steepness;
    if (steepness.alpha.empty())
        steepness = SteepnessConfig::uniform(config.capture.size(), 1.0);

    std::map<std::string, std::size_t> index_of_id;
    for (std::size_t i = 0; i < train.size(); ++i) index_of_id[train.ids[i]] = i;

    Rng root(config.seed);

    // Labeled/unlabeled pools as dataset indices, kept sorted.
    std::vector<std::size_t> labeled;
    if (config.initial_ids) {
        std::set<std::size_t> seen;
        for (const std::string& id : *config.initial_ids) {
            const auto it = index_of_id.find(id);
            if (it == index_of_id.end())
                throw ConfigError("al-run: initial id '" + id + "' not in the training set");
            if (!seen.insert(it->second).second)
                throw ConfigError("al-run: duplicate initial id '" + id + "'");
        }
        labeled.assign(seen.begin(), seen.end());
    } else {
        labeled = stratified_initial(train, config.initial_size, num_classes, root);
    }
    std::vector<bool> is_labeled(train.size(), false);
    for (const std::size_t i : labeled) is_labeled[i] = true;
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = 0; i < train.size(); ++i)
        if (!is_labeled[i]) unlabeled.push_back(i);

    std::vector<std::size_t> dims;
    dims.push_back(train.dim());
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(static_cast<std::size_t>(num_classes));

    const auto train_fresh = [&](std::size_t cycle) {
        MlpModel model = MlpModel::init(dims, config.capture, root.fork("init", cycle).seed());
        TrainOptions opts = config.train;
        opts.seed = root.fork("train", cycle).seed();
        const Dataset pool = train.subset(labeled);
        model.train(pool.features, *pool.labels, opts);
        return model;
    };

    const auto snapshot_ids = [&](const std::vector<std::size_t>& idxs) {
        std::vector<std::string> ids;
        ids.reserve(idxs.size());
        for (const std::size_t i : idxs) ids.push_back(train.ids[i]);
        return ids;
    };

    using clock = std::chrono::steady_clock;
    ALRun run;

    auto t0 = clock::now();
    MlpModel model = train_fresh(0);
    run.initial_model = model;
    {
        CycleRecord row;
        row.cycle = 0;
        row.labeled_size = labeled.size();
        row.test_accuracy = accuracy(model, test.features, *test.labels);
        row.r_avg = std::numeric_limits<double>::quiet_NaN();
        row.wall_clock_s = std::chrono::duration<double>(clock::now() - t0).count();
        run.rows.push_back(std::move(row));
        run.labeled_ids_per_cycle.push_back(snapshot_ids(labeled));
    }

    for (std::size_t cycle = 1; cycle <= config.cycles; ++cycle) {
        t0 = clock::now();
        double r_avg = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::string> queried;

        const Dataset pool_u = train.subset(unlabeled);
        switch (config.strategy) {
            case Strategy::Sisom:
            case Strategy::Sisome: {
                const Dataset pool_l = train.subset(labeled);
                ComparisonSet set = ComparisonSet::build(model, pool_l, steepness);
                if (config.subset.enabled)
                    set = set.reduce(config.subset.fraction, config.subset.radius);
                const ScoreMode mode = config.strategy == Strategy::Sisom ? ScoreMode::Sisom
                                                                          : ScoreMode::Sisome;
                const BatchScores scores = score_batch(model, steepness, set, pool_u, mode,
                                                       config.r_avg_override,
                                                       config.stored_class,
                                                       config.standardize_fusion);
                r_avg = scores.r_avg_used;
                std::vector<std::pair<std::string, double>> ranked;
                ranked.reserve(scores.bundles.size());
                for (const ScoreBundle& b : scores.bundles)
                    ranked.emplace_back(b.sample_id, b.fused);
                queried = select_topk(ranked, config.query_size);
                break;
            }
            case Strategy::Energy: {
                std::vector<std::pair<std::string, double>> ranked;
                ranked.reserve(pool_u.size());
                for (std::size_t i = 0; i < pool_u.size(); ++i)
                    ranked.emplace_back(pool_u.ids[i],
                                        energy_score(model.forward(pool_u.sample(i)).logits));
                queried = select_topk(ranked, config.query_size);
                break;
            }
            case Strategy::Coreset: {
                std::vector<std::vector<double>> labeled_feats;
                labeled_feats.reserve(labeled.size());
                for (const std::size_t i : labeled)
                    labeled_feats.push_back(last_captured_activation(model, train.sample(i)));
                std::vector<std::pair<std::string, std::vector<double>>> unlabeled_feats;
                unlabeled_feats.reserve(unlabeled.size());
                for (const std::size_t i : unlabeled)
                    unlabeled_feats.emplace_back(
                        train.ids[i], last_captured_activation(model, train.sample(i)));
                queried = coreset_select(labeled_feats, unlabeled_feats, config.query_size);
                break;
            }
            case Strategy::Random: {
                Rng pick = root.fork("select", cycle);
                for (const std::size_t k :
                     pick.sample_without_replacement(unlabeled.size(), config.query_size))
                    queried.push_back(train.ids[unlabeled[k]]);
                break;
            }
        }
        std::sort(queried.begin(), queried.end());

        for (const std::string& id : queried) {
            const std::size_t idx = index_of_id.at(id);
            is_labeled[idx] = true;
        }
        labeled.clear();
        unlabeled.clear();
        for (std::size_t i = 0; i < train.size(); ++i)
            (is_labeled[i] ? labeled : unlabeled).push_back(i);

        model = train_fresh(cycle);
        run.checkpoints.push_back(model);

        CycleRecord row;
        row.cycle = cycle;
        row.labeled_size = labeled.size();
        row.test_accuracy = accuracy(model, test.features, *test.labels);
        row.r_avg = r_avg;
        row.wall_clock_s = std::chrono::duration<double>(clock::now() - t0).count();
        row.queried_ids = std::move(queried);
        run.rows.push_back(std::move(row));
        run.labeled_ids_per_cycle.push_back(snapshot_ids(labeled));
    }
    run.final_unlabeled_ids = snapshot_ids(unlabeled);
    return run;
}

std::string curve_to_csv(const ALRun& run, Strategy strategy, std::uint64_t seed) {
    std::ostringstream out;
    out << "cycle,labeled_size,strategy,seed,test_accuracy,r_avg,wall_clock_s\n";
    char buf[64];
    for (const CycleRecord& row : run.rows) {
        out << row.cycle << ',' << row.labeled_size << ',' << strategy_name(strategy) << ','
            << seed << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row.test_accuracy);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row.r_avg);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.3f", row.wall_clock_s);
        out << buf << '\n';
    }
    return out.str();
}

} // namespace sisom
