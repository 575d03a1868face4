#pragma once

// Class-folder datasets: <root>/{glioma,meningioma,notumor,pituitary}/*.{jpg,png}

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lwcnn/image.hpp"
#include "lwcnn/preprocess.hpp"
#include "lwcnn/tensor.hpp"

namespace lwcnn {

inline constexpr std::size_t kNumClasses = 4;

/// Alphabetical directory order; also the row order of every report.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames{"glioma", "meningioma", "notumor", "pituitary"};

std::optional<int> class_index(std::string_view name);

struct Sample {
    std::filesystem::path path;
    int label = 0;

    bool operator==(const Sample &) const = default;
};

struct DatasetIndex {
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    std::array<std::size_t, kNumClasses> counts() const;
    /// Positions of the samples with this label, in index order.
    std::vector<std::size_t> positions_of(int label) const;
    DatasetIndex subset(const std::vector<std::size_t> &positions) const;
};

/// Indexes every decodable file below the four class directories, ordered by
/// (label, path). Undecodable files are skipped with a line on `warnings`.
/// Throws std::runtime_error on a missing or extra directory or an empty class.
DatasetIndex scan_dataset(const std::filesystem::path &root, std::ostream &warnings);

using PositionSplit = std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;

/// Per class: shuffle, first round(frac * n_c) go to train (halves round up).
/// Both halves keep index order. Throws if a present class has fewer than 2 samples.
PositionSplit stratified_split_positions(const DatasetIndex &index, double frac, std::uint64_t seed);
std::pair<DatasetIndex, DatasetIndex> stratified_split(const DatasetIndex &index, double frac, std::uint64_t seed);

struct FoldAssignment {
    std::size_t k = 5;
    std::vector<std::size_t> fold;  // fold id per index position

    /// (train = every other fold, validation = fold f), as index positions.
    PositionSplit split(std::size_t f) const;

    bool operator==(const FoldAssignment &) const = default;
};

/// Per class: shuffle, then deal positions round-robin into k folds.
/// Throws if a present class has fewer than k samples.
FoldAssignment stratified_kfold(const DatasetIndex &index, std::size_t k, std::uint64_t seed);

struct LoadOptions {
    bool crop = false;  // run crop_pipeline on each image (otherwise resize only)
    CropParams crop_params;
    std::size_t size = 150;
};

/// Decode one file and bring it to size x size.
Rgb8 load_image(const std::filesystem::path &path, const LoadOptions &options);

/// Decoded images plus labels, ready for augment_batch.
struct ImageSet {
    std::vector<Rgb8> images;
    std::vector<int> labels;

    std::size_t size() const { return images.size(); }
    ImageSet subset(const std::vector<std::size_t> &positions) const;
};

/// Parallel decode; a failure throws std::runtime_error naming the file.
ImageSet load_image_set(const DatasetIndex &index, const LoadOptions &options);

/// (N, 4) rows with a single 1 at each label.
Tensor onehot(const std::vector<int> &labels);

struct Batch {
    Tensor images;  // (N, size, size, 3), raw 8-bit values
    Tensor labels;  // (N, 4) one-hot
};

Batch load_batch(const std::vector<Sample> &samples, const LoadOptions &options);

}  // namespace lwcnn
