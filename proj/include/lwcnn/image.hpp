#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace lwcnn {

struct Grayscale8 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;

    Grayscale8() = default;
    Grayscale8(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), pixels(h * w, fill) {}

    std::uint8_t &at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
    std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

    bool operator==(const Grayscale8 &) const = default;
};

/// Interleaved RGB, row-major.
struct Rgb8 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;

    Rgb8() = default;
    Rgb8(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), pixels(3 * h * w, fill) {}

    std::uint8_t &at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

    bool operator==(const Rgb8 &) const = default;
};

/// Foreground = 1, background = 0.
struct BinaryMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), bits(h * w, 0) {}

    std::uint8_t &at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
    std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
    std::size_t count() const;

    bool operator==(const BinaryMask &) const = default;
};

/// Inclusive pixel bounds.
struct BoundingBox {
    std::size_t top = 0;
    std::size_t bottom = 0;
    std::size_t left = 0;
    std::size_t right = 0;

    std::size_t height() const { return bottom - top + 1; }
    std::size_t width() const { return right - left + 1; }
    std::size_t area() const { return height() * width(); }

    bool operator==(const BoundingBox &) const = default;
};

// Codec boundary. Any decodable JPEG/PNG (gray or color) loads as RGB.
Rgb8 read_image(const std::filesystem::path &path);
void write_png(const std::filesystem::path &path, const Rgb8 &image);
void write_png(const std::filesystem::path &path, const Grayscale8 &image);
void write_pgm(const std::filesystem::path &path, const Grayscale8 &image);

}  // namespace lwcnn
