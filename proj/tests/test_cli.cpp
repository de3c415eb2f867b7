#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "sisom/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cli(std::initializer_list<std::string> args) {
    std::vector<std::string> storage{"sisom"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const std::string& s : storage) argv.push_back(s.c_str());
    return sisom::run_cli(static_cast<int>(argv.size()), argv.data());
}

struct TempTree {
    fs::path root;
    TempTree() {
        root = fs::temp_directory_path() /
               ("sisom_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path path = dir / "config.json";
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

json basic_config() {
    return {{"seed", 5},
            {"dataset",
             {{"kind", "blobs"},
              {"n", 60},
              {"test_n", 30},
              {"dim", 3},
              {"classes", 3},
              {"sigma", 0.4},
              {"centers", {{3.0, 0, 0}, {-3.0, 0, 0}, {0, 3.0, 0}}}}},
            {"model", {{"hidden", {10, 6}}, {"capture", {0, 1}}}},
            {"train", {{"lr", 0.1}, {"epochs", 30}, {"batch_size", 10}}}};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("unknown subcommands and missing flags exit with code 1") {
    CHECK(cli({"frobnicate"}) == 1);
    CHECK(cli({"train"}) == 1);  // --config/--out-dir missing
}

TEST_CASE("bad config exits with code 1") {
    TempTree tmp;
    json doc = basic_config();
    doc["dataset"]["classes"] = 0;
    const fs::path cfg = write_config(tmp.root, doc);
    CHECK(cli({"train", "--config", cfg.string(), "--out-dir",
               (tmp.root / "out").string()}) == 1);
}

TEST_CASE("runtime failures exit with code 2") {
    TempTree tmp;
    const fs::path cfg = write_config(tmp.root, basic_config());
    // a learning rate that overflows on the first update makes training diverge
    CHECK(cli({"train", "--config", cfg.string(), "--out-dir", (tmp.root / "out").string(),
               "--override", "train.lr=1e154"}) == 2);
}

TEST_CASE("gen-data writes csvs and a complete manifest") {
    TempTree tmp;
    json doc = basic_config();
    doc["ood"] = {{"sets",
                   {{{"name", "near"}, {"tag", "near"}, {"kind", "shifted-blobs"}, {"n", 20}},
                    {{"name", "far"}, {"tag", "far"}, {"kind", "uniform-far"}, {"n", 20}}}}};
    const fs::path cfg = write_config(tmp.root, doc);
    const fs::path out = tmp.root / "run";
    REQUIRE(cli({"gen-data", "--config", cfg.string(), "--out-dir", out.string()}) == 0);

    CHECK(fs::exists(out / "data/train.csv"));
    CHECK(fs::exists(out / "data/test.csv"));
    CHECK(fs::exists(out / "data/ood_near.csv"));
    CHECK(fs::exists(out / "data/ood_far.csv"));
    CHECK(fs::exists(out / "config.snapshot"));

    const json manifest = json::parse(slurp(out / "manifest.json"));
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest["seed"] == 5);

    // every file in the run dir except the manifest itself is listed with a hash
    std::set<std::string> listed;
    for (const json& f : manifest["files"]) {
        CHECK(f["hash"].get<std::string>().size() == 16);
        listed.insert(f["path"].get<std::string>());
    }
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), out).string();
        if (rel == "manifest.json") continue;
        CHECK(listed.count(rel) == 1);
    }
}

TEST_CASE("train then score against a saved checkpoint") {
    TempTree tmp;
    const fs::path cfg = write_config(tmp.root, basic_config());
    const fs::path train_out = tmp.root / "train_run";
    REQUIRE(cli({"train", "--config", cfg.string(), "--out-dir", train_out.string()}) == 0);
    const fs::path model_file = train_out / "checkpoints/model.txt";
    REQUIRE(fs::exists(model_file));
    const json train_metrics = json::parse(slurp(train_out / "metrics/train.json"));
    CHECK(train_metrics["train_accuracy"].get<double>() > 0.9);

    json doc = basic_config();
    doc["model"]["model_file"] = model_file.string();
    const fs::path cfg2 = write_config(tmp.root / "", doc);
    const fs::path score_out = tmp.root / "score_run";
    REQUIRE(cli({"score", "--config", cfg2.string(), "--out-dir", score_out.string()}) == 0);
    const std::string scores = slurp(score_out / "metrics/scores.csv");
    CHECK(scores.find("sample_id,pseudo_class,d_in,d_out,r,r_ood,energy,fused") == 0);
    const json meta = json::parse(slurp(score_out / "metrics/scores_meta.json"));
    CHECK(meta["scorer_mode"] == "sisom");
    CHECK(meta["r_avg"].is_number());
}

TEST_CASE("al-run produces one checkpoint per cycle plus the curve") {
    TempTree tmp;
    json doc = basic_config();
    doc["al"] = {{"initial_size", 12}, {"query_size", 6}, {"cycles", 2},
                 {"strategy", "random"}};
    const fs::path cfg = write_config(tmp.root, doc);
    const fs::path out = tmp.root / "al";
    REQUIRE(cli({"al-run", "--config", cfg.string(), "--out-dir", out.string()}) == 0);
    CHECK(fs::exists(out / "checkpoints/cycle_1.model"));
    CHECK(fs::exists(out / "checkpoints/cycle_2.model"));
    CHECK_FALSE(fs::exists(out / "checkpoints/cycle_3.model"));
    const std::string curve = slurp(out / "curves/curve.csv");
    CHECK(curve.find("cycle,labeled_size,strategy,seed,test_accuracy,r_avg,wall_clock_s") == 0);
    std::size_t lines = 0;
    for (const char c : curve)
        if (c == '\n') ++lines;
    CHECK(lines == 4);  // header + bootstrap row + 2 cycles
}

TEST_CASE("ood-eval metrics are byte-identical across reruns") {
    TempTree tmp;
    json doc = basic_config();
    doc["ood"] = {{"sets",
                   {{{"name", "near"}, {"tag", "near"}, {"kind", "shifted-blobs"}, {"n", 30}},
                    {{"name", "far"}, {"tag", "far"}, {"kind", "uniform-far"}, {"n", 30}}}}};
    const fs::path cfg = write_config(tmp.root, doc);
    const fs::path out1 = tmp.root / "run1";
    const fs::path out2 = tmp.root / "run2";
    REQUIRE(cli({"ood-eval", "--config", cfg.string(), "--out-dir", out1.string()}) == 0);
    REQUIRE(cli({"ood-eval", "--config", cfg.string(), "--out-dir", out2.string()}) == 0);
    CHECK(slurp(out1 / "metrics/ood_metrics.json") == slurp(out2 / "metrics/ood_metrics.json"));
    CHECK(slurp(out1 / "metrics/hist_near.csv") == slurp(out2 / "metrics/hist_near.csv"));
    CHECK(slurp(out1 / "metrics/hist_far.csv") == slurp(out2 / "metrics/hist_far.csv"));
}

TEST_CASE("optimize-steepness emits one audit row per combination") {
    TempTree tmp;
    json doc = basic_config();
    doc["steepness"] = {{"search", {{"layers", {{1.0, 10.0}, {1.0, 10.0}}}}}};
    const fs::path cfg = write_config(tmp.root, doc);
    const fs::path out = tmp.root / "os";
    REQUIRE(cli({"optimize-steepness", "--config", cfg.string(), "--out-dir", out.string()}) ==
            0);
    const std::string table = slurp(out / "metrics/steepness_table.csv");
    CHECK(table.find("alpha_1,alpha_2,r_avg\n") == 0);
    std::size_t lines = 0;
    for (const char c : table)
        if (c == '\n') ++lines;
    CHECK(lines == 5);  // header + 4 combinations
    const json best = json::parse(slurp(out / "metrics/steepness_best.json"));
    CHECK(best["alpha"].size() == 2);
    CHECK(best["evaluated"] == 4);
}

TEST_CASE("subset reduces per-class counts to the configured fraction") {
    TempTree tmp;
    json doc = basic_config();
    doc["subset"] = {{"enabled", true}, {"fraction", 0.10}};
    const fs::path cfg = write_config(tmp.root, doc);
    const fs::path out = tmp.root / "rs";
    REQUIRE(cli({"subset", "--config", cfg.string(), "--out-dir", out.string()}) == 0);
    const json meta = json::parse(slurp(out / "metrics/subset_meta.json"));
    CHECK(meta["full_size"] == 60);
    CHECK(meta["reduced_size"] == 6);  // ceil(0.1 * 20) per class, 3 classes
    for (const json& s : meta["per_class_sizes"]) CHECK(s == 2);
    const std::string csv = slurp(out / "metrics/subset.csv");
    CHECK(csv.find("source_id,true_class,pseudo_class") == 0);
}

TEST_CASE("overrides reach the effective config snapshot") {
    TempTree tmp;
    const fs::path cfg = write_config(tmp.root, basic_config());
    const fs::path out = tmp.root / "o";
    REQUIRE(cli({"train", "--config", cfg.string(), "--out-dir", out.string(), "--override",
                 "train.epochs=3", "--seed", "99"}) == 0);
    const json snapshot = json::parse(slurp(out / "config.snapshot"));
    CHECK(snapshot["train"]["epochs"] == 3);
    CHECK(snapshot["seed"] == 99);
}
