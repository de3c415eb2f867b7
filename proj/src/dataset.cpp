#include "sisom/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sisom {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string padded_id(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", i);
    return prefix + buf;
}

constexpr double kPi = 3.14159265358979323846;

} // namespace

int Dataset::num_classes() const {
    if (!labels) throw ConfigError("dataset has no labels");
    int max_label = -1;
    for (const int y : *labels) max_label = std::max(max_label, y);
    return max_label + 1;
}

void Dataset::validate() const {
    if (ids.size() != features.rows)
        throw ConfigError("dataset: id count does not match row count");
    if (labels && labels->size() != features.rows)
        throw ConfigError("dataset: label count does not match row count");
    std::set<std::string> seen;
    for (const std::string& id : ids)
        if (!seen.insert(id).second)
            throw ConfigError("dataset: duplicate id '" + id + "'");
    if (!features.all_finite()) throw ConfigError("dataset: non-finite feature value");
    if (labels)
        for (const int y : *labels)
            if (y < 0) throw ConfigError("dataset: negative label");
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.features = Matrix(indices.size(), features.cols);
    if (labels) out.labels.emplace();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        out.ids.push_back(ids[i]);
        std::copy(features.row(i).begin(), features.row(i).end(), out.features.row(k).begin());
        if (labels) out.labels->push_back((*labels)[i]);
    }
    return out;
}

std::vector<std::vector<double>> default_blob_centers(std::size_t k, std::size_t dim,
                                                      double radius, Rng& rng) {
    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> dir(dim);
        double norm = 0.0;
        for (double& v : dir) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(std::max(norm, 1e-12));
        for (double& v : dir) v = v / norm * radius;
        centers.push_back(std::move(dir));
    }
    return centers;
}

Dataset gen_blobs(const BlobsParams& params, Rng& rng, const std::string& id_prefix) {
    if (params.n < 1 || params.dim < 2) throw ConfigError("blobs: need n >= 1 and dim >= 2");
    if (params.centers.size() < 2) throw ConfigError("blobs: need at least 2 clusters");
    if (params.center_class.size() != params.centers.size())
        throw ConfigError("blobs: need one class label per center");
    for (const auto& c : params.centers)
        if (c.size() != params.dim) throw ConfigError("blobs: center dimension mismatch");

    Dataset out;
    out.features = Matrix(params.n, params.dim);
    out.labels.emplace();
    const std::size_t k = params.centers.size();
    for (std::size_t i = 0; i < params.n; ++i) {
        const std::size_t cluster = i % k;
        for (std::size_t d = 0; d < params.dim; ++d)
            out.features.at(i, d) = params.centers[cluster][d] + rng.normal(0.0, params.sigma);
        out.labels->push_back(params.center_class[cluster]);
        out.ids.push_back(padded_id(id_prefix, i));
    }
    out.validate();
    return out;
}

Dataset gen_shifted_blobs(const BlobsParams& base, std::size_t n, Rng& rng,
                          const std::string& id_prefix) {
    if (base.centers.size() < 2) throw ConfigError("shifted-blobs: need at least 2 base centers");
    std::vector<std::vector<double>> midpoints;
    for (std::size_t i = 0; i < base.centers.size(); ++i)
        for (std::size_t j = i + 1; j < base.centers.size(); ++j) {
            std::vector<double> mid(base.dim);
            for (std::size_t d = 0; d < base.dim; ++d)
                mid[d] = 0.5 * (base.centers[i][d] + base.centers[j][d]);
            midpoints.push_back(std::move(mid));
        }

    Dataset out;
    out.features = Matrix(n, base.dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double>& mid = midpoints[i % midpoints.size()];
        for (std::size_t d = 0; d < base.dim; ++d)
            out.features.at(i, d) = mid[d] + rng.normal(0.0, base.sigma);
        out.ids.push_back(padded_id(id_prefix, i));
    }
    out.validate();
    return out;
}

Dataset gen_uniform_far(std::size_t n, std::size_t dim, double half_width, Rng& rng,
                        const std::string& id_prefix) {
    if (n < 1 || dim < 2) throw ConfigError("uniform-far: need n >= 1 and dim >= 2");
    if (!(half_width > 0.0)) throw ConfigError("uniform-far: half width must be positive");
    Dataset out;
    out.features = Matrix(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d)
            out.features.at(i, d) = rng.uniform(-half_width, half_width);
        out.ids.push_back(padded_id(id_prefix, i));
    }
    out.validate();
    return out;
}

Dataset gen_moons(std::size_t n, double noise, Rng& rng, const std::string& id_prefix) {
    if (n < 2) throw ConfigError("moons: need n >= 2");
    Dataset out;
    out.features = Matrix(n, 2);
    out.labels.emplace();
    const std::size_t n_upper = n / 2 + (n % 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, kPi);
        double x, y;
        int label;
        if (i < n_upper) {
            x = std::cos(t);
            y = std::sin(t);
            label = 0;
        } else {
            x = 1.0 - std::cos(t);
            y = 0.5 - std::sin(t);
            label = 1;
        }
        out.features.at(i, 0) = x + rng.normal(0.0, noise);
        out.features.at(i, 1) = y + rng.normal(0.0, noise);
        out.labels->push_back(label);
        out.ids.push_back(padded_id(id_prefix, i));
    }
    out.validate();
    return out;
}

Dataset gen_rings(std::size_t n, double noise, double r_inner, double r_outer, Rng& rng,
                  const std::string& id_prefix) {
    if (n < 2) throw ConfigError("rings: need n >= 2");
    if (!(0.0 < r_inner && r_inner < r_outer)) throw ConfigError("rings: need 0 < r_inner < r_outer");
    Dataset out;
    out.features = Matrix(n, 2);
    out.labels.emplace();
    const std::size_t n_inner = n / 2 + (n % 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = i < n_inner ? r_inner : r_outer;
        const int label = i < n_inner ? 0 : 1;
        const double t = rng.uniform(0.0, 2.0 * kPi);
        out.features.at(i, 0) = r * std::cos(t) + rng.normal(0.0, noise);
        out.features.at(i, 1) = r * std::sin(t) + rng.normal(0.0, noise);
        out.labels->push_back(label);
        out.ids.push_back(padded_id(id_prefix, i));
    }
    out.validate();
    return out;
}

double data_radius(const Dataset& data) {
    double best = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double norm = 0.0;
        for (const double v : data.sample(i)) norm += v * v;
        best = std::max(best, norm);
    }
    return std::sqrt(best);
}

std::string to_csv(const Dataset& data) {
    std::ostringstream out;
    out << "id";
    if (data.labeled()) out << ",label";
    for (std::size_t d = 0; d < data.dim(); ++d) out << ",f" << d;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.ids[i];
        if (data.labeled()) out << ',' << (*data.labels)[i];
        for (const double v : data.sample(i)) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void row_fail(std::size_t row, const std::string& what) {
    throw ParseError("csv parse error at row " + std::to_string(row) + ": " + what);
}

} // namespace

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv parse error at row 1: empty file");

    const std::vector<std::string> header = split_csv_row(line);
    if (header.empty() || header[0] != "id") row_fail(1, "first column must be 'id'");
    const bool has_label = header.size() > 1 && header[1] == "label";
    const std::size_t feature_start = has_label ? 2 : 1;
    if (header.size() <= feature_start) row_fail(1, "no feature columns");
    const std::size_t dim = header.size() - feature_start;

    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<double> values;
    bool any_label = false;
    std::size_t row = 1;
    std::set<std::string> seen;

    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_row(line);
        if (fields.size() != header.size())
            row_fail(row, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        if (!seen.insert(fields[0]).second)
            row_fail(row, "duplicate id '" + fields[0] + "'");
        ids.push_back(fields[0]);
        if (has_label) {
            if (fields[1].empty()) {
                labels.push_back(-1);
            } else {
                try {
                    std::size_t pos = 0;
                    const int y = std::stoi(fields[1], &pos);
                    if (pos != fields[1].size() || y < 0) throw std::invalid_argument("label");
                    labels.push_back(y);
                    any_label = true;
                } catch (const std::exception&) {
                    row_fail(row, "bad label '" + fields[1] + "'");
                }
            }
        }
        for (std::size_t f = 0; f < dim; ++f) {
            const std::string& s = fields[feature_start + f];
            try {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument("feature");
                values.push_back(v);
            } catch (const std::exception&) {
                row_fail(row, "bad feature value '" + s + "'");
            }
        }
    }

    Dataset out;
    out.ids = std::move(ids);
    out.features = Matrix(out.ids.size(), dim);
    out.features.data = std::move(values);
    if (has_label && any_label) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 0)
                throw ParseError("csv parse error at row " + std::to_string(i + 2) +
                                 ": missing label in labeled file");
        out.labels = std::move(labels);
    }
    out.validate();
    return out;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open csv file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return dataset_from_csv(ss.str());
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << to_csv(data);
}

} // namespace sisom
