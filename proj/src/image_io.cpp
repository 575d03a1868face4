#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "lwcnn/image.hpp"

namespace lwcnn {

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Rgb8 read_image(const std::filesystem::path &path) {
    cv::Mat bgr;
    try {
        bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    } catch (const cv::Exception &e) {
        throw std::runtime_error("cannot decode image " + path.string() + ": " + e.what());
    }
    if (bgr.empty() || bgr.type() != CV_8UC3) {
        throw std::runtime_error("cannot decode image " + path.string());
    }
    Rgb8 image(static_cast<std::size_t>(bgr.rows), static_cast<std::size_t>(bgr.cols));
    for (int y = 0; y < bgr.rows; ++y) {
        const auto *row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            for (int c = 0; c < 3; ++c) {
                image.at(y, x, c) = row[x][2 - c];
            }
        }
    }
    return image;
}

namespace {

// Fixed compression settings so reruns produce byte-identical files.
const std::vector<int> kPngParams{cv::IMWRITE_PNG_COMPRESSION, 6};

void write_mat(const std::filesystem::path &path, const cv::Mat &mat) {
    if (!cv::imwrite(path.string(), mat, kPngParams)) {
        throw std::runtime_error("cannot write image " + path.string());
    }
}

}  // namespace

void write_png(const std::filesystem::path &path, const Rgb8 &image) {
    cv::Mat bgr(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC3);
    for (std::size_t y = 0; y < image.height; ++y) {
        auto *row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
        for (std::size_t x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                row[x][2 - c] = image.at(y, x, c);
            }
        }
    }
    write_mat(path, bgr);
}

void write_png(const std::filesystem::path &path, const Grayscale8 &image) {
    cv::Mat gray(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC1,
                 const_cast<std::uint8_t *>(image.pixels.data()));
    write_mat(path, gray);
}

void write_pgm(const std::filesystem::path &path, const Grayscale8 &image) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write image " + path.string());
    }
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char *>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace lwcnn
