#include "lwcnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "lwcnn/rng.hpp"

namespace fs = std::filesystem;

namespace lwcnn {

std::optional<int> class_index(std::string_view name) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (kClassNames[i] == name) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

std::array<std::size_t, kNumClasses> DatasetIndex::counts() const {
    std::array<std::size_t, kNumClasses> c{};
    for (const auto &s : samples) {
        ++c.at(static_cast<std::size_t>(s.label));
    }
    return c;
}

std::vector<std::size_t> DatasetIndex::positions_of(int label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label == label) {
            out.push_back(i);
        }
    }
    return out;
}

DatasetIndex DatasetIndex::subset(const std::vector<std::size_t> &positions) const {
    DatasetIndex out;
    out.samples.reserve(positions.size());
    for (auto p : positions) {
        out.samples.push_back(samples.at(p));
    }
    return out;
}

DatasetIndex scan_dataset(const fs::path &root, std::ostream &warnings) {
    if (!fs::is_directory(root)) {
        throw std::runtime_error("dataset root " + root.string() + " is not a directory");
    }
    std::set<std::string> seen;
    for (const auto &entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || name.starts_with('.')) {
            continue;
        }
        if (!class_index(name)) {
            throw std::runtime_error("unexpected class directory " + entry.path().string());
        }
        seen.insert(name);
    }

    DatasetIndex index;
    for (std::size_t label = 0; label < kNumClasses; ++label) {
        const std::string name(kClassNames[label]);
        if (!seen.count(name)) {
            throw std::runtime_error("missing class directory " + (root / name).string());
        }
        std::vector<fs::path> files;
        for (const auto &entry : fs::directory_iterator(root / name)) {
            if (entry.is_regular_file() && !entry.path().filename().string().starts_with('.')) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());

        std::vector<char> ok(files.size(), 0);
#pragma omp parallel for schedule(dynamic, 8)
        for (std::size_t i = 0; i < files.size(); ++i) {
            try {
                read_image(files[i]);
                ok[i] = 1;
            } catch (const std::exception &) {
                ok[i] = 0;
            }
        }
        std::size_t kept = 0;
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (!ok[i]) {
                warnings << "warning: skipping undecodable file " << files[i].string() << '\n';
                continue;
            }
            index.samples.push_back({files[i], static_cast<int>(label)});
            ++kept;
        }
        if (kept == 0) {
            throw std::runtime_error("class directory " + (root / name).string() + " has no images");
        }
    }
    return index;
}

namespace {

std::vector<std::size_t> shuffled_class(const DatasetIndex &index, int label, std::uint64_t seed, std::uint64_t salt) {
    auto pos = index.positions_of(label);
    Rng rng(hash64({seed, salt, static_cast<std::uint64_t>(label)}));
    rng.shuffle(std::span<std::size_t>(pos));
    return pos;
}

}  // namespace

PositionSplit stratified_split_positions(const DatasetIndex &index, double frac, std::uint64_t seed) {
    if (!(frac > 0.0 && frac < 1.0)) {
        throw std::invalid_argument("split fraction must be in (0,1)");
    }
    PositionSplit out;
    for (std::size_t label = 0; label < kNumClasses; ++label) {
        const auto pos = shuffled_class(index, static_cast<int>(label), seed, 0x5EED);
        if (pos.empty()) {
            continue;
        }
        if (pos.size() < 2) {
            throw std::invalid_argument("class " + std::string(kClassNames[label]) + " has " +
                                        std::to_string(pos.size()) + " samples; a split needs at least 2");
        }
        const auto n_train = static_cast<std::size_t>(std::floor(frac * static_cast<double>(pos.size()) + 0.5));
        out.first.insert(out.first.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.second.insert(out.second.end(), pos.begin() + static_cast<std::ptrdiff_t>(n_train), pos.end());
    }
    std::sort(out.first.begin(), out.first.end());
    std::sort(out.second.begin(), out.second.end());
    return out;
}

std::pair<DatasetIndex, DatasetIndex> stratified_split(const DatasetIndex &index, double frac, std::uint64_t seed) {
    const auto [train, val] = stratified_split_positions(index, frac, seed);
    return {index.subset(train), index.subset(val)};
}

PositionSplit FoldAssignment::split(std::size_t f) const {
    if (f >= k) {
        throw std::invalid_argument("fold " + std::to_string(f) + " out of range for k=" + std::to_string(k));
    }
    PositionSplit out;
    for (std::size_t i = 0; i < fold.size(); ++i) {
        (fold[i] == f ? out.second : out.first).push_back(i);
    }
    return out;
}

FoldAssignment stratified_kfold(const DatasetIndex &index, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw std::invalid_argument("k-fold needs k >= 2");
    }
    FoldAssignment folds;
    folds.k = k;
    folds.fold.assign(index.size(), 0);
    for (std::size_t label = 0; label < kNumClasses; ++label) {
        const auto pos = shuffled_class(index, static_cast<int>(label), seed, 0xF01D);
        if (!pos.empty() && pos.size() < k) {
            throw std::invalid_argument("class " + std::string(kClassNames[label]) + " has " +
                                        std::to_string(pos.size()) + " samples, fewer than k=" + std::to_string(k));
        }
        for (std::size_t i = 0; i < pos.size(); ++i) {
            folds.fold[pos[i]] = i % k;
        }
    }
    return folds;
}

Rgb8 load_image(const fs::path &path, const LoadOptions &options) {
    Rgb8 img = read_image(path);
    if (options.crop) {
        CropParams params = options.crop_params;
        params.output_size = options.size;
        return crop_pipeline(img, params).image;
    }
    if (img.height != options.size || img.width != options.size) {
        return resize_bilinear(img, options.size, options.size);
    }
    return img;
}

ImageSet ImageSet::subset(const std::vector<std::size_t> &positions) const {
    ImageSet out;
    out.images.reserve(positions.size());
    out.labels.reserve(positions.size());
    for (auto p : positions) {
        out.images.push_back(images.at(p));
        out.labels.push_back(labels.at(p));
    }
    return out;
}

ImageSet load_image_set(const DatasetIndex &index, const LoadOptions &options) {
    ImageSet set;
    set.images.resize(index.size());
    set.labels.resize(index.size());
    std::vector<std::string> errors(index.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < index.size(); ++i) {
        try {
            set.images[i] = load_image(index.samples[i].path, options);
            set.labels[i] = index.samples[i].label;
        } catch (const std::exception &e) {
            errors[i] = e.what();
        }
    }
    for (const auto &e : errors) {
        if (!e.empty()) {
            throw std::runtime_error(e);
        }
    }
    return set;
}

Tensor onehot(const std::vector<int> &labels) {
    if (labels.empty()) {
        throw std::invalid_argument("onehot: no labels");
    }
    Tensor t({labels.size(), kNumClasses});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= kNumClasses) {
            throw std::invalid_argument("label " + std::to_string(labels[i]) + " out of range");
        }
        t[i * kNumClasses + static_cast<std::size_t>(labels[i])] = 1.0f;
    }
    return t;
}

Batch load_batch(const std::vector<Sample> &samples, const LoadOptions &options) {
    DatasetIndex index{samples};
    const ImageSet set = load_image_set(index, options);
    const std::size_t stride = options.size * options.size * 3;
    Tensor images({samples.size(), options.size, options.size, 3});
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::copy(set.images[i].pixels.begin(), set.images[i].pixels.end(), images.data() + i * stride);
    }
    return {std::move(images), onehot(set.labels)};
}

}  // namespace lwcnn
