#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sisom/matrix.hpp"
#include "sisom/rng.hpp"

namespace sisom {

// A set of samples belonging to one split (train, test, or an OOD set).
// Labels are optional; unlabeled sets can only be scored, not trained on.
struct Dataset {
    std::vector<std::string> ids;
    Matrix features;
    std::optional<std::vector<int>> labels;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    bool labeled() const { return labels.has_value(); }
    std::span<const double> sample(std::size_t i) const { return features.row(i); }

    int num_classes() const;
    void validate() const;

    // Rows picked by position, in the given order.
    Dataset subset(const std::vector<std::size_t>& indices) const;
};

struct BlobsParams {
    std::size_t n = 100;
    std::size_t dim = 2;
    double sigma = 1.0;
    std::vector<std::vector<double>> centers;   // one per cluster
    std::vector<int> center_class;              // class label per cluster
};

// k cluster centers spread on a sphere of the given radius (seeded).
std::vector<std::vector<double>> default_blob_centers(std::size_t k, std::size_t dim,
                                                      double radius, Rng& rng);

// Isotropic Gaussian clusters. Samples are dealt to clusters round-robin so
// counts differ by at most one; ids are zero-padded under the given prefix.
Dataset gen_blobs(const BlobsParams& params, Rng& rng, const std::string& id_prefix);

// Unlabeled Gaussian clusters at the midpoints of all unordered pairs of the
// base centers; same sigma as the base.
Dataset gen_shifted_blobs(const BlobsParams& base, std::size_t n, Rng& rng,
                          const std::string& id_prefix);

// Unlabeled uniform samples in the hypercube [-half_width, half_width]^dim.
Dataset gen_uniform_far(std::size_t n, std::size_t dim, double half_width, Rng& rng,
                        const std::string& id_prefix);

// Two interleaved half-circles, labels split as evenly as n allows.
Dataset gen_moons(std::size_t n, double noise, Rng& rng, const std::string& id_prefix);

// Two concentric rings (class 0 inner, class 1 outer).
Dataset gen_rings(std::size_t n, double noise, double r_inner, double r_outer, Rng& rng,
                  const std::string& id_prefix);

// Largest distance of any sample from the origin.
double data_radius(const Dataset& data);

// CSV header: id,label,f0..f{d-1} when labeled, id,f0..f{d-1} otherwise.
// Floats are written at 17 significant digits so round trips are bit exact.
std::string to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const Dataset& data);

} // namespace sisom
