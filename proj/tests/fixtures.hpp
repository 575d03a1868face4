#pragma once

// On-disk dataset fixtures built from synthetic geometric patterns.

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "lwcnn/dataset.hpp"
#include "lwcnn/image.hpp"
#include "lwcnn/rng.hpp"

namespace lwcnn::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("lwcnn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }

private:
    static int &counter() {
        static int n = 0;
        return n;
    }
    std::filesystem::path path_;
};

/// One class per pattern, with random placement, size and intensity:
/// 0 disc, 1 rectangle outline, 2 horizontal bars, 3 cross.
inline Rgb8 pattern_image(int label, Rng &rng, std::size_t size = 150) {
    Rgb8 img(size, size);
    const double s = static_cast<double>(size);
    const auto v = static_cast<std::uint8_t>(150 + rng.below(100));
    auto paint = [&](std::size_t y, std::size_t x) {
        for (int c = 0; c < 3; ++c) {
            img.at(y, x, c) = v;
        }
    };
    const double cy = s * rng.uniform(0.35, 0.65), cx = s * rng.uniform(0.35, 0.65);
    const double r = s * rng.uniform(0.15, 0.28);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
            bool on = false;
            switch (label) {
            case 0:
                on = dy * dy + dx * dx <= r * r;
                break;
            case 1:
                on = std::abs(dy) <= r && std::abs(dx) <= r && (std::abs(dy) >= r - s * 0.05 || std::abs(dx) >= r - s * 0.05);
                break;
            case 2:
                on = std::abs(dy) <= r && std::abs(dx) <= r && static_cast<long>((dy + r) / (s * 0.06)) % 2 == 0;
                break;
            default:
                on = (std::abs(dy) <= s * 0.04 && std::abs(dx) <= r) || (std::abs(dx) <= s * 0.04 && std::abs(dy) <= r);
                break;
            }
            if (on) {
                paint(y, x);
            }
        }
    }
    return img;
}

/// Writes <root>/<class>/img_NNN.png for the given per-class counts.
inline void write_class_tree(const std::filesystem::path &root, const std::array<std::size_t, kNumClasses> &counts,
                             std::uint64_t seed, std::size_t size = 150) {
    Rng rng(seed);
    for (std::size_t label = 0; label < kNumClasses; ++label) {
        const auto dir = root / std::string(kClassNames[label]);
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < counts[label]; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "img_%03zu.png", i);
            write_png(dir / name, pattern_image(static_cast<int>(label), rng, size));
        }
    }
}

/// An index of fake paths with the given per-class counts.
inline DatasetIndex fake_index(const std::array<std::size_t, kNumClasses> &counts) {
    DatasetIndex index;
    for (std::size_t label = 0; label < kNumClasses; ++label) {
        for (std::size_t i = 0; i < counts[label]; ++i) {
            index.samples.push_back({std::filesystem::path(std::string(kClassNames[label])) /
                                         ("f" + std::to_string(i)),
                                     static_cast<int>(label)});
        }
    }
    return index;
}

}  // namespace lwcnn::testing
