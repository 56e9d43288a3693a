#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlsq/numkit.hpp"

namespace nlsq::data {

// Immutable after construction; features and targets are sample-major.
struct Dataset {
    numkit::Matrix features;
    numkit::Matrix targets;   // one-hot rows for classification, pixels for autoencoding
    std::string name;
    std::vector<std::string> class_names; // classification only, first-seen order

    std::size_t sample_count() const { return features.rows(); }
    std::size_t feature_dim() const { return features.cols(); }
    std::size_t target_dim() const { return targets.cols(); }
};

// 4 numeric columns + class label per row; optional header auto-detected
// (first row non-numeric). By default features are standardized per column
// to zero mean and unit variance over the whole file; pass standardize=false
// to keep the raw measurement scales. Targets one-hot in first-seen class
// order. Malformed rows throw ParseError with the 1-based line number.
Dataset load_iris_csv(const std::string& path, bool standardize = true);

// Classic big-endian IDX files. images_path must carry magic 0x00000803.
// Pixels are scaled to [0,1]. Without labels_path the dataset targets are the
// features themselves (autoencoding); with it, labels (magic 0x00000801) are
// one-hot encoded. Truncation or a bad magic throws FormatError.
Dataset load_idx(const std::string& images_path, const std::string& labels_path = "");

// Writers for the same formats; used to build fixtures and round-trip checks.
void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels,
                      std::size_t count, std::size_t rows, std::size_t cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

// Seeded low-rank random images: each side x side image is a sum of two outer
// products of smooth nonnegative vectors, entries in [0,1], numerical rank
// <= 2. Targets are the features (autoencoding).
Dataset synth_autoencoder(std::size_t n_samples, std::size_t side, std::uint64_t seed);

// Shuffles sample order with `seed` and splits off the first `head_count`
// samples. Used for the train/holdout split.
std::pair<Dataset, Dataset> shuffle_split(const Dataset& ds, std::size_t head_count,
                                          std::uint64_t seed);

struct BatchPlan {
    std::vector<std::vector<std::size_t>> batches; // B lists of sample indices
    std::size_t L = 0;        // residual components per batch = samples_per_batch * output_dim
    std::size_t B = 0;
    std::size_t dropped = 0;  // remainder samples not assigned this epoch
};

// Seeded shuffle then contiguous slicing into equal batches; the remainder is
// dropped and recorded. samples_per_batch larger than the sample count throws
// DimensionError.
BatchPlan make_batches(const Dataset& ds, std::size_t samples_per_batch,
                       std::size_t output_dim, std::uint64_t epoch_seed);

// Rows of the dataset selected by `indices`, as (features, targets).
std::pair<numkit::Matrix, numkit::Matrix> gather(const Dataset& ds,
                                                 const std::vector<std::size_t>& indices);

} // namespace nlsq::data
