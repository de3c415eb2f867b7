#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sisom/matrix.hpp"

namespace sisom {

// One forward pass. Keeps every hidden activation (pre and post ReLU) so the
// backward pass can reuse the exact masks seen going forward; `captured`
// holds the post-activation vectors of the designated capture layers only.
struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> hidden_pre;
    std::vector<std::vector<double>> hidden;
    std::vector<std::vector<double>> captured;
    std::vector<std::size_t> capture_layers;
    std::vector<double> logits;
    std::vector<double> softmax;
};

struct TrainOptions {
    double learning_rate = 0.05;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainReport {
    // Full-data cross-entropy evaluated after each epoch.
    std::vector<double> epoch_losses;
};

// Feed-forward classifier: ReLU hidden layers, identity output. A subset of
// hidden layers (the capture set, indices into the hidden layers, strictly
// increasing) is exposed through ForwardTrace for feature extraction.
class MlpModel {
public:
    MlpModel() = default;

    // He-style random init: weights ~ N(0, sqrt(2 / fan_in)), biases zero.
    // layer_dims = {input, hidden..., classes}; classes >= 2, >= 1 hidden.
    static MlpModel init(const std::vector<std::size_t>& layer_dims,
                         std::vector<std::size_t> capture_layers,
                         std::uint64_t seed);

    ForwardTrace forward(std::span<const double> x) const;

    // Gradient of KL(uniform || softmax(f(x))) with respect to each captured
    // layer, one vector per capture layer in capture order. The gradient is
    // chained through the ReLU mask recorded at the captured layer itself, so
    // dead units report exactly zero.
    std::vector<std::vector<double>> grad_wrt_captured(const ForwardTrace& trace) const;

    // Plain SGD on cross-entropy, in place. Deterministic for a fixed seed:
    // seeded shuffle each epoch, sequential batches, no parallel reductions.
    // epochs == 0 leaves the weights untouched. Throws on divergence (NaN
    // loss), naming the epoch.
    TrainReport train(const Matrix& features, const std::vector<int>& labels,
                      const TrainOptions& opts);

    double cross_entropy(const Matrix& features, const std::vector<int>& labels) const;

    std::size_t input_dim() const { return layer_dims_.front(); }
    std::size_t num_classes() const { return layer_dims_.back(); }
    std::size_t num_hidden_layers() const { return layer_dims_.size() - 2; }
    const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
    const std::vector<std::size_t>& capture_layers() const { return capture_layers_; }

    // Total width of the captured feature vector.
    std::size_t feature_dim() const;

    const std::vector<Matrix>& weights() const { return weights_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }
    std::vector<Matrix>& mutable_weights() { return weights_; }
    std::vector<std::vector<double>>& mutable_biases() { return biases_; }

    bool operator==(const MlpModel& other) const = default;

private:
    void validate() const;

    std::vector<std::size_t> layer_dims_;
    std::vector<std::size_t> capture_layers_;
    std::vector<Matrix> weights_;          // weights_[l]: dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases_;

    friend MlpModel model_from_text(const std::string&);
};

// Text format with base-10 floats at 17 significant digits; round trips are
// bit exact. See README for the schema.
void save_model(const MlpModel& model, const std::filesystem::path& path);
std::string model_to_text(const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);
MlpModel model_from_text(const std::string& text);

double accuracy(const MlpModel& model, const Matrix& features, const std::vector<int>& labels);

std::vector<double> softmax_stable(std::span<const double> logits);

} // namespace sisom
