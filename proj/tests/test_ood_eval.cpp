#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "sisom/ood_eval.hpp"
#include "sisom/rng.hpp"

using namespace sisom;

TEST_CASE("threshold decision is boundary inclusive and monotone") {
    CHECK(decide(0.5, 0.5) == Verdict::InD);
    CHECK(decide(0.5 - 1e-12, 0.5) == Verdict::OOD);
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const double s = rng.uniform(-1, 1);
        const double lo = rng.uniform(-1, 1);
        const double hi = lo + rng.uniform(0.0, 1.0);
        if (decide(s, lo) == Verdict::OOD) CHECK(decide(s, hi) == Verdict::OOD);
    }
}

TEST_CASE("auroc hand cases") {
    CHECK(auroc(std::vector<double>{0.9, 0.8}, std::vector<double>{0.3, 0.7}) == 1.0);
    CHECK(auroc(std::vector<double>{0.9, 0.8}, std::vector<double>{0.85, 0.3}) == 0.75);
    CHECK(auroc(std::vector<double>{0.5}, std::vector<double>{0.5}) == 0.5);
}

TEST_CASE("auroc equals the pairwise-count oracle exactly") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.next_below(200);
        const std::size_t m = 1 + rng.next_below(200);
        std::vector<double> ind(n), ood(m);
        // coarse grid so ties actually occur
        for (double& v : ind) v = static_cast<double>(rng.next_below(40)) / 10.0;
        for (double& v : ood) v = static_cast<double>(rng.next_below(40)) / 10.0;
        CHECK(auroc(ind, ood) == oracle::pairwise_auroc(ind, ood));
    }
}

TEST_CASE("auroc is antisymmetric for tie-free inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(30), b(40);
        for (double& v : a) v = rng.uniform(0, 1);
        for (double& v : b) v = rng.uniform(0, 1);
        CHECK(auroc(a, b) + auroc(b, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("auroc rejects empty inputs") {
    CHECK_THROWS_AS((void)auroc({}, std::vector<double>{1.0}), ConfigError);
    CHECK_THROWS_AS((void)auroc(std::vector<double>{1.0}, {}), ConfigError);
}

TEST_CASE("fpr at 95 tpr hand cases") {
    // perfectly separated
    CHECK(fpr_at_95tpr(std::vector<double>{2.0, 3.0, 4.0}, std::vector<double>{0.0, 1.0}) == 0.0);
    // single in-distribution score above everything
    CHECK(fpr_at_95tpr(std::vector<double>{5.0}, std::vector<double>{1.0, 2.0}) == 0.0);
    // identical distributions of 100 points each
    std::vector<double> scores(100);
    for (std::size_t i = 0; i < 100; ++i) scores[i] = static_cast<double>(i);
    const double fpr = fpr_at_95tpr(scores, scores);
    CHECK(std::abs(fpr - 0.95) <= 0.01 + 1e-12);
}

TEST_CASE("threshold decisions are consistent with the 95 percent target") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 20 + rng.next_below(180);
        std::vector<double> ind(n);
        for (double& v : ind) v = rng.uniform(0, 1);
        // the largest threshold still reaching 95% true-positive rate
        std::vector<double> sorted = ind;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const std::size_t k = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(n) - 1e-9));
        const double lambda = sorted[k - 1];
        std::size_t classified_ind = 0;
        for (const double v : ind)
            if (decide(v, lambda) == Verdict::InD) ++classified_ind;
        const double tpr = static_cast<double>(classified_ind) / static_cast<double>(n);
        CHECK(tpr >= 0.95);
        CHECK(tpr - 0.95 <= 1.0 / static_cast<double>(n) + 1e-12);
    }
}

TEST_CASE("fpr at 95 tpr equals the sweep oracle") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.next_below(120);
        const std::size_t m = 1 + rng.next_below(120);
        std::vector<double> ind(n), ood(m);
        for (double& v : ind) v = static_cast<double>(rng.next_below(25));
        for (double& v : ood) v = static_cast<double>(rng.next_below(25));
        CHECK(fpr_at_95tpr(ind, ood) == oracle::sweep_fpr_at_95tpr(ind, ood));
    }
}

namespace {

struct BenchFixture {
    std::vector<CheckpointInput> checkpoints;
    Dataset ind_eval;
    std::vector<OodSet> ood_sets;
    ScorerSetup setup;
};

BenchFixture small_benchmark(std::uint64_t seed, std::size_t n_checkpoints = 1) {
    BenchFixture f;
    BlobsParams params;
    params.n = 80;
    params.dim = 3;
    params.sigma = 0.4;
    params.centers = {{3.0, 0.0, 0.0}, {-3.0, 0.0, 0.0}, {0.0, 3.0, 0.0}};
    params.center_class = {0, 1, 2};
    Rng rng = Rng(seed).fork("data-gen");
    Rng train_rng = rng.fork("train");
    Dataset train = gen_blobs(params, train_rng, "tr-");
    BlobsParams test_params = params;
    test_params.n = 40;
    Rng test_rng = rng.fork("test");
    f.ind_eval = gen_blobs(test_params, test_rng, "te-");
    f.ind_eval.labels.reset();

    for (std::size_t c = 0; c < n_checkpoints; ++c) {
        MlpModel model = MlpModel::init({3, 12, 3}, {0}, seed + c);
        TrainOptions opts;
        opts.learning_rate = 0.1;
        opts.epochs = 40 + 5 * static_cast<int>(c);
        opts.batch_size = 10;
        opts.seed = seed + c;
        model.train(train.features, *train.labels, opts);
        f.checkpoints.push_back({"cycle_" + std::to_string(c + 1), model, train});
    }

    Rng near_rng = rng.fork("near");
    OodSet near;
    near.name = "near_mid";
    near.tag = "near";
    near.data = gen_shifted_blobs(params, 40, near_rng, "od-n-");
    f.ood_sets.push_back(near);

    Rng far_rng = rng.fork("far");
    OodSet far;
    far.name = "far_uniform";
    far.tag = "far";
    far.data = gen_uniform_far(40, 3, 5.0 * data_radius(train), far_rng, "od-f-");
    f.ood_sets.push_back(far);

    f.setup.mode = ScoreMode::Sisom;
    f.setup.steepness = SteepnessConfig::uniform(1);
    return f;
}

} // namespace

TEST_CASE("benchmark reports scorer plus energy baseline with aggregate rows") {
    const BenchFixture f = small_benchmark(881);
    const BenchmarkResult result =
        run_benchmark(f.checkpoints, f.ind_eval, f.ood_sets, f.setup);
    // 2 scorers x 2 sets + 2 scorers x 2 aggregates
    CHECK(result.rows.size() == 8);
    std::size_t sisom_rows = 0, energy_rows = 0, aggregates = 0;
    for (const MetricsRow& row : result.rows) {
        CHECK(row.error.empty());
        CHECK(row.auroc >= 0.0);
        CHECK(row.auroc <= 1.0);
        if (row.scorer == "sisom") ++sisom_rows;
        if (row.scorer == "energy") ++energy_rows;
        if (row.set.find("-mean") != std::string::npos) ++aggregates;
    }
    CHECK(sisom_rows == 4);
    CHECK(energy_rows == 4);
    CHECK(aggregates == 4);
    CHECK(result.histograms.size() == 2);
    for (const SetHistogram& hist : result.histograms) CHECK(hist.bins.size() == 50);
}

TEST_CASE("identical ood sets give identical metric rows") {
    BenchFixture f = small_benchmark(882);
    OodSet copy = f.ood_sets[0];
    copy.name = "near_copy";
    f.ood_sets.push_back(copy);
    const BenchmarkResult result =
        run_benchmark(f.checkpoints, f.ind_eval, f.ood_sets, f.setup);
    const MetricsRow* first = nullptr;
    const MetricsRow* second = nullptr;
    for (const MetricsRow& row : result.rows) {
        if (row.scorer != "sisom") continue;
        if (row.set == "near_mid") first = &row;
        if (row.set == "near_copy") second = &row;
    }
    REQUIRE(first != nullptr);
    REQUIRE(second != nullptr);
    CHECK(first->auroc == second->auroc);
    CHECK(first->fpr95 == second->fpr95);
}

TEST_CASE("three checkpoints produce three result blocks in order") {
    const BenchFixture f = small_benchmark(883, 3);
    const BenchmarkResult result =
        run_benchmark(f.checkpoints, f.ind_eval, f.ood_sets, f.setup);
    std::vector<std::string> seen;
    for (const MetricsRow& row : result.rows)
        if (seen.empty() || seen.back() != row.checkpoint) seen.push_back(row.checkpoint);
    CHECK(seen == std::vector<std::string>{"cycle_1", "cycle_2", "cycle_3"});
}

TEST_CASE("in-distribution samples out-score the ood sets under the ratio scorer") {
    const BenchFixture f = small_benchmark(884);
    const MlpModel& model = f.checkpoints[0].model;
    const ComparisonSet set =
        ComparisonSet::build(model, f.checkpoints[0].labeled, f.setup.steepness);

    const auto mean_r_ood = [&](const Dataset& data) {
        const BatchScores scores =
            score_batch(model, f.setup.steepness, set, data, ScoreMode::Sisom);
        double total = 0.0;
        for (const ScoreBundle& b : scores.bundles) total += b.r_ood;
        return total / static_cast<double>(scores.bundles.size());
    };
    const double ind_mean = mean_r_ood(f.ind_eval);
    CHECK(ind_mean > mean_r_ood(f.ood_sets[0].data));
    CHECK(ind_mean > mean_r_ood(f.ood_sets[1].data));
}

TEST_CASE("histogram csv is well formed") {
    SetHistogram hist;
    hist.checkpoint = "model";
    hist.set = "near";
    hist.bins = {{0.0, 0.5, 3, 1}, {0.5, 1.0, 2, 4}};
    const std::string csv = histogram_to_csv(hist);
    CHECK(csv.find("checkpoint,set,bin,lo,hi,ind_count,ood_count\n") == 0);
    CHECK(csv.find("model,near,0,0,0.5,3,1") != std::string::npos);
    CHECK(csv.find("model,near,1,0.5,1,2,4") != std::string::npos);
}
