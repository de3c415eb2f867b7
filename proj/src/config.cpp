#include "sisom/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace sisom {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& context,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + context + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + key + "' in " + context);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key))
        throw ConfigError("config: missing key '" + key + "' in " + context);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "' in " + context);
    }
}

DatasetSpec parse_dataset(const json& j) {
    check_keys(j, "dataset",
               {"kind", "n", "test_n", "dim", "classes", "sigma", "center_radius", "centers",
                "center_class", "noise", "r_inner", "r_outer", "train_csv", "test_csv"});
    DatasetSpec spec;
    spec.kind = require<std::string>(j, "kind", "dataset");
    if (spec.kind == "csv") {
        spec.train_csv = require<std::string>(j, "train_csv", "dataset");
        spec.test_csv = get_or<std::string>(j, "test_csv", "");
        return spec;
    }
    if (spec.kind != "blobs" && spec.kind != "moons" && spec.kind != "rings")
        throw ConfigError("config: dataset kind must be blobs, moons, rings or csv");
    spec.n = require<std::size_t>(j, "n", "dataset");
    spec.test_n = get_or<std::size_t>(j, "test_n", spec.n / 2);
    if (spec.kind == "blobs") {
        spec.dim = require<std::size_t>(j, "dim", "dataset");
        spec.classes = require<std::size_t>(j, "classes", "dataset");
        if (spec.classes < 2) throw ConfigError("config: blobs need classes >= 2");
        spec.sigma = get_or<double>(j, "sigma", 1.0);
        spec.center_radius = get_or<double>(j, "center_radius", 3.0);
        if (j.contains("centers")) {
            spec.centers = require<std::vector<std::vector<double>>>(j, "centers", "dataset");
            for (const auto& c : spec.centers)
                if (c.size() != spec.dim)
                    throw ConfigError("config: blob center dimension mismatch");
            spec.center_class = get_or<std::vector<int>>(j, "center_class", {});
            if (spec.center_class.empty())
                for (std::size_t i = 0; i < spec.centers.size(); ++i)
                    spec.center_class.push_back(static_cast<int>(i % spec.classes));
            if (spec.center_class.size() != spec.centers.size())
                throw ConfigError("config: need one center_class entry per center");
        } else if (j.contains("center_class")) {
            throw ConfigError("config: center_class requires explicit centers");
        }
    } else {
        spec.dim = 2;
        spec.classes = 2;
        spec.noise = get_or<double>(j, "noise", 0.1);
        if (spec.kind == "rings") {
            spec.r_inner = get_or<double>(j, "r_inner", 1.0);
            spec.r_outer = get_or<double>(j, "r_outer", 2.0);
        }
    }
    return spec;
}

ModelSpec parse_model(const json& j) {
    check_keys(j, "model", {"hidden", "capture", "model_file"});
    ModelSpec spec;
    spec.hidden = get_or<std::vector<std::size_t>>(j, "hidden", {64, 32});
    if (j.contains("capture")) {
        spec.capture = require<std::vector<std::size_t>>(j, "capture", "model");
    } else {
        spec.capture.clear();
        for (std::size_t i = 0; i < spec.hidden.size(); ++i) spec.capture.push_back(i);
    }
    spec.model_file = get_or<std::string>(j, "model_file", "");
    if (spec.hidden.empty()) throw ConfigError("config: model needs at least one hidden layer");
    if (spec.capture.empty()) throw ConfigError("config: capture set must be nonempty");
    for (std::size_t i = 0; i < spec.capture.size(); ++i) {
        if (spec.capture[i] >= spec.hidden.size())
            throw ConfigError("config: capture layer index out of range");
        if (i > 0 && spec.capture[i] <= spec.capture[i - 1])
            throw ConfigError("config: capture layers must be strictly increasing");
    }
    return spec;
}

TrainOptions parse_train(const json& j) {
    check_keys(j, "train", {"lr", "epochs", "batch_size"});
    TrainOptions opts;
    opts.learning_rate = get_or<double>(j, "lr", 0.05);
    opts.epochs = get_or<int>(j, "epochs", 100);
    opts.batch_size = get_or<int>(j, "batch_size", 32);
    if (!(opts.learning_rate > 0.0)) throw ConfigError("config: lr must be positive");
    if (opts.epochs < 0) throw ConfigError("config: epochs must be >= 0");
    if (opts.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    return opts;
}

SubsetPolicy parse_subset(const json& j) {
    check_keys(j, "subset", {"enabled", "fraction", "radius"});
    SubsetPolicy policy;
    policy.enabled = get_or<bool>(j, "enabled", true);
    policy.fraction = get_or<double>(j, "fraction", 0.10);
    if (!(policy.fraction > 0.0 && policy.fraction <= 1.0))
        throw ConfigError("config: subset fraction must be in (0, 1]");
    if (j.contains("radius")) {
        if (j.at("radius").is_string()) {
            if (j.at("radius").get<std::string>() != "auto-median-nn")
                throw ConfigError("config: subset radius must be a number or 'auto-median-nn'");
        } else {
            const double r = require<double>(j, "radius", "subset");
            if (!(r > 0.0)) throw ConfigError("config: subset radius must be positive");
            policy.radius = r;
        }
    }
    return policy;
}

ScorerSpec parse_scorer(const json& j) {
    check_keys(j, "scorer", {"mode", "r_avg_override", "stored_class", "standardize"});
    ScorerSpec spec;
    spec.mode = parse_score_mode(get_or<std::string>(j, "mode", "sisom"));
    if (j.contains("r_avg_override")) {
        const double v = require<double>(j, "r_avg_override", "scorer");
        if (v < 0.0) throw ConfigError("config: r_avg_override must be >= 0");
        spec.r_avg_override = v;
    }
    spec.standardize_fusion = get_or<bool>(j, "standardize", false);
    const std::string stored = get_or<std::string>(j, "stored_class", "true_label");
    if (stored == "true_label") {
        spec.stored_class = StoredClassMode::TrueLabel;
    } else if (stored == "pseudo_class") {
        spec.stored_class = StoredClassMode::PseudoClass;
    } else {
        throw ConfigError("config: stored_class must be true_label or pseudo_class");
    }
    return spec;
}

AlSpec parse_al(const json& j) {
    check_keys(j, "al", {"initial_size", "query_size", "cycles", "strategy"});
    AlSpec spec;
    spec.initial_size = get_or<std::size_t>(j, "initial_size", 20);
    spec.query_size = get_or<std::size_t>(j, "query_size", 20);
    spec.cycles = get_or<std::size_t>(j, "cycles", 5);
    spec.strategy = parse_strategy(get_or<std::string>(j, "strategy", "sisom"));
    if (spec.query_size < 1) throw ConfigError("config: query_size must be >= 1");
    if (spec.cycles < 1) throw ConfigError("config: cycles must be >= 1");
    return spec;
}

std::vector<OodSetSpec> parse_ood(const json& j) {
    check_keys(j, "ood", {"sets"});
    const json sets = require<json>(j, "sets", "ood");
    if (!sets.is_array() || sets.empty())
        throw ConfigError("config: ood.sets must be a nonempty array");
    std::vector<OodSetSpec> out;
    std::set<std::string> names;
    for (const json& s : sets) {
        check_keys(s, "ood set", {"name", "tag", "kind", "n", "radius_factor", "path"});
        OodSetSpec spec;
        spec.name = require<std::string>(s, "name", "ood set");
        spec.tag = require<std::string>(s, "tag", "ood set");
        if (spec.tag != "near" && spec.tag != "far")
            throw ConfigError("config: ood set tag must be near or far");
        spec.kind = require<std::string>(s, "kind", "ood set");
        if (spec.kind == "csv") {
            spec.path = require<std::string>(s, "path", "ood set");
        } else if (spec.kind == "shifted-blobs" || spec.kind == "uniform-far") {
            spec.n = require<std::size_t>(s, "n", "ood set");
            if (spec.n < 1) throw ConfigError("config: ood set n must be >= 1");
            spec.radius_factor = get_or<double>(s, "radius_factor", 5.0);
            if (!(spec.radius_factor > 0.0))
                throw ConfigError("config: radius_factor must be positive");
        } else {
            throw ConfigError("config: ood set kind must be shifted-blobs, uniform-far or csv");
        }
        if (!names.insert(spec.name).second)
            throw ConfigError("config: duplicate ood set name '" + spec.name + "'");
        out.push_back(std::move(spec));
    }
    return out;
}

} // namespace

SteepnessConfig ExperimentConfig::steepness_or_default(std::size_t n_layers) const {
    if (steepness_values) {
        SteepnessConfig cfg{*steepness_values};
        cfg.validate(n_layers);
        return cfg;
    }
    return SteepnessConfig::uniform(n_layers, 1.0);
}

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "config root",
               {"seed", "dataset", "model", "train", "steepness", "subset", "scorer", "al",
                "ood"});
    ExperimentConfig config;
    config.seed = get_or<std::uint64_t>(doc, "seed", 0);
    if (!doc.contains("dataset")) throw ConfigError("config: missing 'dataset' section");
    config.dataset = parse_dataset(doc.at("dataset"));
    config.model = doc.contains("model") ? parse_model(doc.at("model")) : ModelSpec{};
    config.train = doc.contains("train") ? parse_train(doc.at("train")) : TrainOptions{};

    if (doc.contains("steepness")) {
        const json& st = doc.at("steepness");
        check_keys(st, "steepness", {"values", "search"});
        if (st.contains("values") && st.contains("search"))
            throw ConfigError("config: steepness takes either values or search, not both");
        if (st.contains("values")) {
            config.steepness_values = require<std::vector<double>>(st, "values", "steepness");
            SteepnessConfig probe{*config.steepness_values};
            probe.validate(config.model.capture.size());
        } else if (st.contains("search")) {
            const json& sp = st.at("search");
            check_keys(sp, "steepness.search", {"layers", "monotone"});
            SteepnessSearchSpace space;
            space.candidates =
                require<std::vector<std::vector<double>>>(sp, "layers", "steepness.search");
            space.monotone = get_or<bool>(sp, "monotone", false);
            space.validate(config.model.capture.size());
            config.steepness_search = std::move(space);
        } else {
            throw ConfigError("config: steepness needs values or search");
        }
    }

    if (doc.contains("subset")) config.subset = parse_subset(doc.at("subset"));
    if (doc.contains("scorer")) config.scorer = parse_scorer(doc.at("scorer"));
    if (doc.contains("al")) config.al = parse_al(doc.at("al"));
    if (doc.contains("ood")) config.ood_sets = parse_ood(doc.at("ood"));
    return config;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config parse error in " + path + ": " + e.what());
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // plain string
    }

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("override has an empty path segment: " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

GeneratedData generate_datasets(const ExperimentConfig& config) {
    const DatasetSpec& spec = config.dataset;
    if (spec.kind == "csv") {
        GeneratedData out;
        out.train = load_csv(spec.train_csv);
        if (!out.train.labeled()) throw ConfigError("config: train_csv must be labeled");
        if (!spec.test_csv.empty()) {
            out.test = load_csv(spec.test_csv);
            if (!out.test.labeled()) throw ConfigError("config: test_csv must be labeled");
        }
        return out;
    }

    Rng data_rng = Rng(config.seed).fork("data-gen");
    GeneratedData out;
    if (spec.kind == "blobs") {
        BlobsParams params;
        params.n = spec.n;
        params.dim = spec.dim;
        params.sigma = spec.sigma;
        if (!spec.centers.empty()) {
            params.centers = spec.centers;
            params.center_class = spec.center_class;
        } else {
            Rng center_rng = data_rng.fork("centers");
            params.centers =
                default_blob_centers(spec.classes, spec.dim, spec.center_radius, center_rng);
            for (std::size_t i = 0; i < params.centers.size(); ++i)
                params.center_class.push_back(static_cast<int>(i));
        }
        Rng train_rng = data_rng.fork("train");
        out.train = gen_blobs(params, train_rng, "tr-");
        BlobsParams test_params = params;
        test_params.n = spec.test_n;
        Rng test_rng = data_rng.fork("test");
        out.test = gen_blobs(test_params, test_rng, "te-");
    } else if (spec.kind == "moons") {
        Rng train_rng = data_rng.fork("train");
        out.train = gen_moons(spec.n, spec.noise, train_rng, "tr-");
        Rng test_rng = data_rng.fork("test");
        out.test = gen_moons(spec.test_n, spec.noise, test_rng, "te-");
    } else if (spec.kind == "rings") {
        Rng train_rng = data_rng.fork("train");
        out.train = gen_rings(spec.n, spec.noise, spec.r_inner, spec.r_outer, train_rng, "tr-");
        Rng test_rng = data_rng.fork("test");
        out.test = gen_rings(spec.test_n, spec.noise, spec.r_inner, spec.r_outer, test_rng, "te-");
    } else {
        throw ConfigError("config: unknown dataset kind '" + spec.kind + "'");
    }
    return out;
}

std::vector<OodSet> generate_ood_sets(const ExperimentConfig& config, const Dataset& train) {
    Rng data_rng = Rng(config.seed).fork("data-gen");
    std::vector<OodSet> out;
    for (const OodSetSpec& spec : config.ood_sets) {
        OodSet set;
        set.name = spec.name;
        set.tag = spec.tag;
        if (spec.kind == "csv") {
            set.data = load_csv(spec.path);
        } else if (spec.kind == "shifted-blobs") {
            if (config.dataset.kind != "blobs")
                throw ConfigError("config: shifted-blobs ood sets need a blobs dataset");
            BlobsParams base;
            base.dim = config.dataset.dim;
            base.sigma = config.dataset.sigma;
            if (!config.dataset.centers.empty()) {
                base.centers = config.dataset.centers;
            } else {
                Rng center_rng = data_rng.fork("centers");
                base.centers = default_blob_centers(config.dataset.classes, config.dataset.dim,
                                                    config.dataset.center_radius, center_rng);
            }
            Rng set_rng = data_rng.fork("ood-" + spec.name);
            set.data = gen_shifted_blobs(base, spec.n, set_rng, "od-" + spec.name + "-");
        } else if (spec.kind == "uniform-far") {
            const double half_width = spec.radius_factor * data_radius(train);
            Rng set_rng = data_rng.fork("ood-" + spec.name);
            set.data = gen_uniform_far(spec.n, train.dim(), half_width, set_rng,
                                       "od-" + spec.name + "-");
        } else {
            throw ConfigError("config: unknown ood set kind '" + spec.kind + "'");
        }
        out.push_back(std::move(set));
    }
    return out;
}

MlpModel train_fresh_model(const ExperimentConfig& config, const Dataset& train) {
    std::vector<std::size_t> dims;
    dims.push_back(train.dim());
    dims.insert(dims.end(), config.model.hidden.begin(), config.model.hidden.end());
    dims.push_back(static_cast<std::size_t>(train.num_classes()));
    Rng root(config.seed);
    MlpModel model = MlpModel::init(dims, config.model.capture, root.fork("init", 0).seed());
    TrainOptions opts = config.train;
    opts.seed = root.fork("train", 0).seed();
    model.train(train.features, *train.labels, opts);
    return model;
}

MlpModel obtain_model(const ExperimentConfig& config, const Dataset& train) {
    if (!config.model.model_file.empty()) return load_model(config.model.model_file);
    return train_fresh_model(config, train);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& doc) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(doc.dump())));
    return buf;
}

} // namespace sisom
