#ifndef PARNN_DATA_HPP
#define PARNN_DATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parnn/matrix.hpp"
#include "parnn/network.hpp"
#include "parnn/rng.hpp"

namespace parnn {

/// Labeled classification dataset. Immutable once built; shared
/// read-only across workers.
struct Dataset {
    Matrix features; // N x D
    Labels labels;   // class indices, one per row
    std::size_t num_classes = 0;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    Dataset select(const std::vector<std::size_t>& indices) const;
};

struct SplitSpec {
    double cv_fraction = 0.10;
    std::uint64_t seed = 0;
};

/// Parses "label,f1,...,fD" lines. '#' starts a comment line. Errors
/// carry the 1-based line number.
Dataset load_csv(const std::string& path);

void save_csv(const std::string& path, const Dataset& dataset);

/// K Gaussian clusters with unit covariance, means drawn uniformly on a
/// sphere of radius separation. Exactly per_class examples per class.
Dataset generate_synthetic(std::size_t classes, std::size_t dim,
                           std::size_t per_class, double separation,
                           std::uint64_t seed);

/// Seeded shuffle, first ceil(cv_fraction*N) rows to CV, rest to train.
std::pair<Dataset, Dataset> split_cv(const Dataset& dataset, const SplitSpec& spec);

struct Minibatch {
    Matrix features;
    Labels labels;
};

/// The canonical shuffle used by minibatching and sharding: identity
/// permutation of n indices, Fisher-Yates shuffled by a fresh Rng(seed).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// Seeded per-epoch shuffle, then floor(N/B) full batches in order; the
/// remainder is dropped.
std::vector<Minibatch> minibatches(const Dataset& dataset, std::size_t batch_size,
                                   std::uint64_t epoch_seed);

/// Per-dimension standardization statistics estimated from a training split.
struct FeatureStats {
    Vector mean;
    Vector stddev; // floored at 1e-12
};

FeatureStats feature_stats(const Dataset& dataset);
void standardize_in_place(Dataset& dataset, const FeatureStats& stats);

} // namespace parnn

#endif
