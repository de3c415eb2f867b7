#include "sisom/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "sisom/rng.hpp"

namespace sisom {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

} // namespace

std::vector<double> softmax_stable(std::span<const double> logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (const double v : logits) max_logit = std::max(max_logit, v);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - max_logit);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

void MlpModel::validate() const {
    if (layer_dims_.size() < 3) throw ConfigError("model needs at least one hidden layer");
    if (layer_dims_.back() < 2) throw ConfigError("model needs at least 2 classes");
    for (const std::size_t d : layer_dims_)
        if (d == 0) throw ConfigError("zero-width layer");
    if (capture_layers_.empty()) throw ConfigError("capture set must be nonempty");
    for (std::size_t i = 0; i < capture_layers_.size(); ++i) {
        if (capture_layers_[i] >= num_hidden_layers())
            throw ConfigError("capture layer index out of range");
        if (i > 0 && capture_layers_[i] <= capture_layers_[i - 1])
            throw ConfigError("capture layers must be strictly increasing");
    }
}

MlpModel MlpModel::init(const std::vector<std::size_t>& layer_dims,
                        std::vector<std::size_t> capture_layers,
                        std::uint64_t seed) {
    MlpModel m;
    m.layer_dims_ = layer_dims;
    m.capture_layers_ = std::move(capture_layers);
    m.validate();
    Rng rng = Rng(seed).fork("init");
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        Matrix w(layer_dims[l + 1], layer_dims[l]);
        const double scale = std::sqrt(2.0 / static_cast<double>(layer_dims[l]));
        for (double& v : w.data) v = rng.normal(0.0, scale);
        m.weights_.push_back(std::move(w));
        m.biases_.emplace_back(layer_dims[l + 1], 0.0);
    }
    return m;
}

std::size_t MlpModel::feature_dim() const {
    std::size_t total = 0;
    for (const std::size_t l : capture_layers_) total += layer_dims_[l + 1];
    return total;
}

ForwardTrace MlpModel::forward(std::span<const double> x) const {
    if (x.size() != input_dim()) throw ConfigError("forward: input has wrong dimension");
    for (const double v : x)
        if (!std::isfinite(v)) throw ConfigError("forward: non-finite input");

    ForwardTrace trace;
    trace.input.assign(x.begin(), x.end());
    trace.capture_layers = capture_layers_;

    std::vector<double> cur(trace.input);
    for (std::size_t l = 0; l < num_hidden_layers(); ++l) {
        std::vector<double> pre = matvec(weights_[l], cur);
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += biases_[l][i];
        std::vector<double> post(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) post[i] = relu(pre[i]);
        trace.hidden_pre.push_back(std::move(pre));
        trace.hidden.push_back(post);
        cur = std::move(post);
    }
    const std::size_t out = num_hidden_layers();
    trace.logits = matvec(weights_[out], cur);
    for (std::size_t i = 0; i < trace.logits.size(); ++i) trace.logits[i] += biases_[out][i];
    trace.softmax = softmax_stable(trace.logits);
    for (const std::size_t l : capture_layers_) trace.captured.push_back(trace.hidden[l]);
    return trace;
}

std::vector<std::vector<double>> MlpModel::grad_wrt_captured(const ForwardTrace& trace) const {
    if (trace.hidden.size() != num_hidden_layers() || trace.logits.size() != num_classes())
        throw ConfigError("grad_wrt_captured: trace does not match this model");

    // d KL(u || p) / d logits = p - u.
    const double u = 1.0 / static_cast<double>(num_classes());
    std::vector<double> delta(num_classes());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = trace.softmax[i] - u;

    // Walk down through the hidden layers; at each layer apply the forward
    // ReLU mask before recording or propagating further.
    std::vector<std::vector<double>> masked_by_layer(num_hidden_layers());
    for (std::size_t l = num_hidden_layers(); l-- > 0;) {
        std::vector<double> grad_h = matvec_transposed(weights_[l + 1], delta);
        for (std::size_t i = 0; i < grad_h.size(); ++i)
            if (!(trace.hidden[l][i] > 0.0)) grad_h[i] = 0.0;
        masked_by_layer[l] = grad_h;
        delta = std::move(grad_h);
    }

    std::vector<std::vector<double>> grads;
    grads.reserve(capture_layers_.size());
    for (const std::size_t l : capture_layers_) grads.push_back(masked_by_layer[l]);
    return grads;
}

double MlpModel::cross_entropy(const Matrix& features, const std::vector<int>& labels) const {
    double total = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const ForwardTrace t = forward(features.row(i));
        const double p = t.softmax[static_cast<std::size_t>(labels[i])];
        total += -std::log(std::max(p, 1e-300));
    }
    return total / static_cast<double>(features.rows);
}

TrainReport MlpModel::train(const Matrix& features, const std::vector<int>& labels,
                            const TrainOptions& opts) {
    if (features.rows == 0) throw ConfigError("train: empty pool");
    if (features.rows != labels.size()) throw ConfigError("train: feature/label count mismatch");
    if (features.cols != input_dim()) throw ConfigError("train: input dimension mismatch");
    std::vector<std::size_t> seen(num_classes(), 0);
    for (const int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes())
            throw ConfigError("train: label out of range");
        ++seen[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < seen.size(); ++c)
        if (seen[c] == 0)
            throw ConfigError("train: class " + std::to_string(c) + " has no samples");

    TrainReport report;
    Rng shuffle_rng = Rng(opts.seed).fork("shuffle");
    std::vector<std::size_t> order(features.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t batch = std::max(1, opts.batch_size);
    const std::size_t n_layers = weights_.size();

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(start + batch, order.size());
            const double inv = 1.0 / static_cast<double>(end - start);

            std::vector<Matrix> grad_w;
            std::vector<std::vector<double>> grad_b;
            for (std::size_t l = 0; l < n_layers; ++l) {
                grad_w.emplace_back(weights_[l].rows, weights_[l].cols);
                grad_b.emplace_back(biases_[l].size(), 0.0);
            }

            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                const ForwardTrace t = forward(features.row(idx));

                // d CE / d logits = softmax - onehot(y)
                std::vector<double> delta = t.softmax;
                delta[static_cast<std::size_t>(labels[idx])] -= 1.0;

                for (std::size_t l = n_layers; l-- > 0;) {
                    const std::vector<double>& below =
                        l == 0 ? t.input : t.hidden[l - 1];
                    for (std::size_t r = 0; r < weights_[l].rows; ++r) {
                        const double d = delta[r];
                        double* gw = grad_w[l].data.data() + r * weights_[l].cols;
                        for (std::size_t c = 0; c < weights_[l].cols; ++c)
                            gw[c] += d * below[c];
                        grad_b[l][r] += d;
                    }
                    if (l == 0) break;
                    std::vector<double> next = matvec_transposed(weights_[l], delta);
                    for (std::size_t i = 0; i < next.size(); ++i)
                        if (!(t.hidden[l - 1][i] > 0.0)) next[i] = 0.0;
                    delta = std::move(next);
                }
            }

            for (std::size_t l = 0; l < n_layers; ++l) {
                for (std::size_t i = 0; i < weights_[l].data.size(); ++i)
                    weights_[l].data[i] -= opts.learning_rate * inv * grad_w[l].data[i];
                for (std::size_t i = 0; i < biases_[l].size(); ++i)
                    biases_[l][i] -= opts.learning_rate * inv * grad_b[l][i];
            }
        }

        const double loss = cross_entropy(features, labels);
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch + 1));
        report.epoch_losses.push_back(loss);
    }
    return report;
}

double accuracy(const MlpModel& model, const Matrix& features, const std::vector<int>& labels) {
    if (features.rows == 0) throw ConfigError("accuracy: empty set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const ForwardTrace t = model.forward(features.row(i));
        std::size_t best = 0;
        for (std::size_t c = 1; c < t.logits.size(); ++c)
            if (t.logits[c] > t.logits[best]) best = c;
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(features.rows);
}

std::string model_to_text(const MlpModel& model) {
    std::ostringstream out;
    out << "mlpmodel v1\n";
    out << "dims";
    for (const std::size_t d : model.layer_dims()) out << ' ' << d;
    out << "\ncapture";
    for (const std::size_t c : model.capture_layers()) out << ' ' << c;
    out << '\n';
    for (std::size_t l = 0; l < model.weights().size(); ++l) {
        const Matrix& w = model.weights()[l];
        out << "W " << l << ' ' << w.rows << ' ' << w.cols << '\n';
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < w.cols; ++c) {
                if (c) out << ' ';
                out << format_double(w.at(r, c));
            }
            out << '\n';
        }
        out << "b " << l << ' ' << model.biases()[l].size() << '\n';
        for (std::size_t i = 0; i < model.biases()[l].size(); ++i) {
            if (i) out << ' ';
            out << format_double(model.biases()[l][i]);
        }
        out << '\n';
    }
    out << "end\n";
    return out.str();
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << model_to_text(model);
}

namespace {

class LineReader {
public:
    explicit LineReader(const std::string& text) : in_(text) {}

    // Next nonempty line; throws naming the line number at EOF.
    std::string next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            if (!line.empty()) return line;
        }
        throw ParseError("model parse error at line " + std::to_string(lineno_ + 1) +
                         ": unexpected end of file");
    }

    int lineno() const { return lineno_; }

private:
    std::istringstream in_;
    int lineno_ = 0;
};

[[noreturn]] void parse_fail(const LineReader& reader, const std::string& what) {
    throw ParseError("model parse error at line " + std::to_string(reader.lineno()) +
                     ": " + what);
}

std::vector<double> parse_doubles(LineReader& reader, const std::string& line,
                                  std::size_t expected) {
    std::istringstream ss(line);
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (!ss.eof()) parse_fail(reader, "non-numeric value");
    if (vals.size() != expected)
        parse_fail(reader, "expected " + std::to_string(expected) + " values, got " +
                               std::to_string(vals.size()));
    return vals;
}

} // namespace

MlpModel model_from_text(const std::string& text) {
    LineReader reader(text);
    if (reader.next() != "mlpmodel v1") parse_fail(reader, "bad magic line");

    MlpModel model;
    {
        std::istringstream ss(reader.next());
        std::string tag;
        ss >> tag;
        if (tag != "dims") parse_fail(reader, "expected dims");
        std::size_t d;
        while (ss >> d) model.layer_dims_.push_back(d);
        if (!ss.eof()) parse_fail(reader, "non-numeric dim");
    }
    {
        std::istringstream ss(reader.next());
        std::string tag;
        ss >> tag;
        if (tag != "capture") parse_fail(reader, "expected capture");
        long long c;
        while (ss >> c) {
            if (c < 0) throw ConfigError("model schema error: negative capture index");
            model.capture_layers_.push_back(static_cast<std::size_t>(c));
        }
        if (!ss.eof()) parse_fail(reader, "non-numeric capture index");
    }
    try {
        model.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("model schema error: ") + e.what());
    }

    for (std::size_t l = 0; l + 1 < model.layer_dims_.size(); ++l) {
        std::istringstream ss(reader.next());
        std::string tag;
        std::size_t idx, rows, cols;
        if (!(ss >> tag >> idx >> rows >> cols) || tag != "W")
            parse_fail(reader, "expected W block header");
        if (idx != l) parse_fail(reader, "W block out of order");
        if (rows != model.layer_dims_[l + 1] || cols != model.layer_dims_[l])
            throw ConfigError("model schema error: W" + std::to_string(l) +
                              " shape does not match dims");
        Matrix w(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::vector<double> vals = parse_doubles(reader, reader.next(), cols);
            std::copy(vals.begin(), vals.end(), w.data.begin() + r * cols);
        }
        model.weights_.push_back(std::move(w));

        std::istringstream bs(reader.next());
        std::size_t bidx, blen;
        if (!(bs >> tag >> bidx >> blen) || tag != "b")
            parse_fail(reader, "expected b block header");
        if (bidx != l) parse_fail(reader, "b block out of order");
        if (blen != model.layer_dims_[l + 1])
            throw ConfigError("model schema error: b" + std::to_string(l) +
                              " length does not match dims");
        model.biases_.push_back(parse_doubles(reader, reader.next(), blen));
    }
    if (reader.next() != "end") parse_fail(reader, "missing end marker");
    return model;
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_text(ss.str());
}

} // namespace sisom
