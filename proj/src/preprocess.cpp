#include "lwcnn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lwcnn {

void CropParams::validate() const {
    if (threshold < 0 || threshold > 255) {
        throw std::invalid_argument("crop threshold must be in [0,255], got " + std::to_string(threshold));
    }
    if (!(blur_sigma > 0.0)) {
        throw std::invalid_argument("blur sigma must be positive");
    }
    if (erode_iterations < 0 || dilate_iterations < 0) {
        throw std::invalid_argument("morphology iterations must be >= 0");
    }
    if (output_size < 1) {
        throw std::invalid_argument("crop output size must be >= 1");
    }
}

namespace {

std::uint8_t round_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

std::size_t reflect101(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) {
        return 0;
    }
    const auto len = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= len) {
        i = i < 0 ? -i : 2 * len - 2 - i;
    }
    return static_cast<std::size_t>(i);
}

}  // namespace

Grayscale8 to_grayscale(const Rgb8 &image) {
    Grayscale8 gray(image.height, image.width);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const unsigned r = image.pixels[3 * i], g = image.pixels[3 * i + 1], b = image.pixels[3 * i + 2];
        gray.pixels[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
    }
    return gray;
}

std::array<double, 5> gaussian_kernel5(double sigma) {
    std::array<double, 5> k{};
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double d = i - 2;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto &v : k) {
        v /= sum;
    }
    return k;
}

Grayscale8 gaussian_blur5(const Grayscale8 &image, double sigma) {
    const auto k = gaussian_kernel5(sigma);
    const std::size_t h = image.height, w = image.width;
    std::vector<double> horizontal(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -2; t <= 2; ++t) {
                s += k[t + 2] * image.at(y, reflect101(static_cast<std::ptrdiff_t>(x) + t, w));
            }
            horizontal[y * w + x] = s;
        }
    }
    Grayscale8 out(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -2; t <= 2; ++t) {
                s += k[t + 2] * horizontal[reflect101(static_cast<std::ptrdiff_t>(y) + t, h) * w + x];
            }
            out.at(y, x) = round_u8(s);
        }
    }
    return out;
}

BinaryMask threshold(const Grayscale8 &image, int t) {
    BinaryMask mask(image.height, image.width);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        mask.bits[i] = image.pixels[i] > t ? 1 : 0;
    }
    return mask;
}

namespace {

// One pass of a 3x3 min (erode) or max (dilate) filter, done separably.
// Out-of-range neighbours read as 0.
BinaryMask morph3(const BinaryMask &mask, bool take_min) {
    const std::size_t h = mask.height, w = mask.width;
    auto combine = [take_min](std::uint8_t a, std::uint8_t b) { return take_min ? std::min(a, b) : std::max(a, b); };
    auto sample = [](const std::vector<std::uint8_t> &bits, std::size_t w_, std::size_t h_, std::ptrdiff_t y,
                     std::ptrdiff_t x) -> std::uint8_t {
        if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h_) || x >= static_cast<std::ptrdiff_t>(w_)) {
            return 0;
        }
        return bits[static_cast<std::size_t>(y) * w_ + static_cast<std::size_t>(x)];
    };
    std::vector<std::uint8_t> rows(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto yi = static_cast<std::ptrdiff_t>(y), xi = static_cast<std::ptrdiff_t>(x);
            rows[y * w + x] = combine(combine(sample(mask.bits, w, h, yi, xi - 1), sample(mask.bits, w, h, yi, xi)),
                                      sample(mask.bits, w, h, yi, xi + 1));
        }
    }
    BinaryMask out(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto yi = static_cast<std::ptrdiff_t>(y), xi = static_cast<std::ptrdiff_t>(x);
            out.bits[y * w + x] = combine(combine(sample(rows, w, h, yi - 1, xi), sample(rows, w, h, yi, xi)),
                                          sample(rows, w, h, yi + 1, xi));
        }
    }
    return out;
}

}  // namespace

BinaryMask erode(const BinaryMask &mask, int iterations) {
    if (iterations < 0) {
        throw std::invalid_argument("erode: iterations must be >= 0");
    }
    BinaryMask out = mask;
    for (int i = 0; i < iterations; ++i) {
        out = morph3(out, true);
    }
    return out;
}

BinaryMask dilate(const BinaryMask &mask, int iterations) {
    if (iterations < 0) {
        throw std::invalid_argument("dilate: iterations must be >= 0");
    }
    BinaryMask out = mask;
    for (int i = 0; i < iterations; ++i) {
        out = morph3(out, false);
    }
    return out;
}

ComponentBox largest_component_bbox(const BinaryMask &mask) {
    const std::size_t h = mask.height, w = mask.width;
    ComponentBox best;
    best.box = {0, h == 0 ? 0 : h - 1, 0, w == 0 ? 0 : w - 1};
    best.empty_fallback = true;

    std::vector<std::uint8_t> seen(h * w, 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (!mask.bits[start] || seen[start]) {
            continue;
        }
        BoundingBox box{start / w, start / w, start % w, start % w};
        std::size_t area = 0;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++area;
            const std::size_t y = p / w, x = p % w;
            box.top = std::min(box.top, y);
            box.bottom = std::max(box.bottom, y);
            box.left = std::min(box.left, x);
            box.right = std::max(box.right, x);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto ny = static_cast<std::ptrdiff_t>(y) + dy;
                    const auto nx = static_cast<std::ptrdiff_t>(x) + dx;
                    if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) || nx >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const std::size_t q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
                    if (mask.bits[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        if (area > best.area) {
            best = {box, area, false};
        }
    }
    return best;
}

Rgb8 resize_bilinear(const Rgb8 &image, std::size_t out_height, std::size_t out_width) {
    if (image.height == 0 || image.width == 0) {
        throw std::invalid_argument("resize: empty source image");
    }
    struct Tap {
        std::size_t lo, hi;
        double frac;
    };
    auto taps = [](std::size_t in, std::size_t out) {
        std::vector<Tap> t(out);
        const double scale = static_cast<double>(in) / static_cast<double>(out);
        for (std::size_t i = 0; i < out; ++i) {
            const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
            const auto lo = static_cast<std::size_t>(std::floor(src));
            t[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
        }
        return t;
    };
    const auto ty = taps(image.height, out_height);
    const auto tx = taps(image.width, out_width);
    Rgb8 out(out_height, out_width);
    for (std::size_t y = 0; y < out_height; ++y) {
        for (std::size_t x = 0; x < out_width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = image.at(ty[y].lo, tx[x].lo, c) * (1.0 - tx[x].frac) +
                                   image.at(ty[y].lo, tx[x].hi, c) * tx[x].frac;
                const double bottom = image.at(ty[y].hi, tx[x].lo, c) * (1.0 - tx[x].frac) +
                                      image.at(ty[y].hi, tx[x].hi, c) * tx[x].frac;
                out.at(y, x, c) = round_u8(top * (1.0 - ty[y].frac) + bottom * ty[y].frac);
            }
        }
    }
    return out;
}

Rgb8 crop_resize(const Rgb8 &image, const BoundingBox &box, std::size_t size) {
    if (box.top > box.bottom || box.left > box.right || box.bottom >= image.height || box.right >= image.width) {
        throw std::invalid_argument("crop box (" + std::to_string(box.top) + "," + std::to_string(box.bottom) + "," +
                                    std::to_string(box.left) + "," + std::to_string(box.right) +
                                    ") outside a " + std::to_string(image.height) + "x" +
                                    std::to_string(image.width) + " image");
    }
    Rgb8 crop(box.height(), box.width());
    for (std::size_t y = 0; y < crop.height; ++y) {
        const auto *src = image.pixels.data() + ((box.top + y) * image.width + box.left) * 3;
        std::copy_n(src, crop.width * 3, crop.pixels.data() + y * crop.width * 3);
    }
    return resize_bilinear(crop, size, size);
}

CropResult crop_pipeline(const Rgb8 &image, const CropParams &params) {
    params.validate();
    const BinaryMask mask = dilate(
        erode(threshold(gaussian_blur5(to_grayscale(image), params.blur_sigma), params.threshold),
              params.erode_iterations),
        params.dilate_iterations);
    const ComponentBox component = largest_component_bbox(mask);
    return {crop_resize(image, component.box, params.output_size), component.box, component.empty_fallback};
}

}  // namespace lwcnn
