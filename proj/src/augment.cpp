#include "lwcnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lwcnn {

void AugmentConfig::validate() const {
    if (rotation_max_deg < 0 || brightness_delta < 0 || shear_max < 0 || shift_frac < 0) {
        throw std::invalid_argument("augment ranges must be non-negative");
    }
    if (brightness_delta >= 1.0) {
        throw std::invalid_argument("augment brightness_delta must be < 1, got " + std::to_string(brightness_delta));
    }
    if (!(rescale > 0.0)) {
        throw std::invalid_argument("augment rescale must be positive");
    }
}

AugmentConfig AugmentConfig::none() {
    AugmentConfig c;
    c.rotation_max_deg = 0;
    c.brightness_delta = 0;
    c.shear_max = 0;
    c.shift_frac = 0;
    c.hflip_enabled = false;
    return c;
}

void to_json(nlohmann::json &j, const AugmentConfig &c) {
    j = nlohmann::json{{"rotation_max_deg", c.rotation_max_deg}, {"brightness_delta", c.brightness_delta},
                       {"shear_max", c.shear_max},               {"shift_frac", c.shift_frac},
                       {"hflip_enabled", c.hflip_enabled},       {"rescale", c.rescale}};
}

void from_json(const nlohmann::json &j, AugmentConfig &c) {
    AugmentConfig d;
    c.rotation_max_deg = j.value("rotation_max_deg", d.rotation_max_deg);
    c.brightness_delta = j.value("brightness_delta", d.brightness_delta);
    c.shear_max = j.value("shear_max", d.shear_max);
    c.shift_frac = j.value("shift_frac", d.shift_frac);
    c.hflip_enabled = j.value("hflip_enabled", d.hflip_enabled);
    c.rescale = j.value("rescale", d.rescale);
}

bool AugmentParams::is_identity() const {
    return angle_deg == 0.0 && brightness == 1.0 && shear == 0.0 && dx == 0.0 && dy == 0.0 && !flip;
}

AugmentParams sample_params(const AugmentConfig &cfg, std::size_t height, std::size_t width, Rng &rng) {
    AugmentParams p;
    p.angle_deg = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
    p.brightness = rng.uniform(1.0 - cfg.brightness_delta, 1.0 + cfg.brightness_delta);
    p.shear = rng.uniform(-cfg.shear_max, cfg.shear_max);
    const double max_dx = cfg.shift_frac * static_cast<double>(width);
    const double max_dy = cfg.shift_frac * static_cast<double>(height);
    p.dx = rng.uniform(-max_dx, max_dx);
    p.dy = rng.uniform(-max_dy, max_dy);
    const bool coin = rng.bernoulli(0.5);
    p.flip = cfg.hflip_enabled && coin;
    return p;
}

namespace {

struct Affine2 {
    double a, b, c, d;  // [[a, b], [c, d]] acting on (x, y)
};

Affine2 forward_matrix(const AugmentParams &p) {
    const double t = p.angle_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(t), sn = std::sin(t);
    const double f = p.flip ? -1.0 : 1.0;
    // Shear * Rot * Flip
    const double r00 = cs * f, r01 = sn, r10 = -sn * f, r11 = cs;
    return {r00 + p.shear * r10, r01 + p.shear * r11, r10, r11};
}

std::uint8_t round_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

void affine_forward_point(const AugmentParams &p, std::size_t height, std::size_t width, double x, double y,
                          double &out_x, double &out_y) {
    const Affine2 m = forward_matrix(p);
    const double cx = (static_cast<double>(width) - 1.0) / 2.0, cy = (static_cast<double>(height) - 1.0) / 2.0;
    const double rx = x - cx, ry = y - cy;
    out_x = cx + p.dx + m.a * rx + m.b * ry;
    out_y = cy + p.dy + m.c * rx + m.d * ry;
}

Rgb8 apply_affine(const Rgb8 &image, const AugmentParams &p) {
    if (p.angle_deg == 0.0 && p.shear == 0.0 && p.dx == 0.0 && p.dy == 0.0 && !p.flip) {
        return image;
    }
    const std::size_t h = image.height, w = image.width;
    const Affine2 m = forward_matrix(p);
    const double det = m.a * m.d - m.b * m.c;
    const Affine2 inv{m.d / det, -m.b / det, -m.c / det, m.a / det};
    const double cx = (static_cast<double>(w) - 1.0) / 2.0, cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double max_x = static_cast<double>(w) - 1.0, max_y = static_cast<double>(h) - 1.0;

    Rgb8 out(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double qx = static_cast<double>(x) - cx - p.dx, qy = static_cast<double>(y) - cy - p.dy;
            const double sx = std::clamp(cx + inv.a * qx + inv.b * qy, 0.0, max_x);
            const double sy = std::clamp(cy + inv.c * qx + inv.d * qy, 0.0, max_y);
            const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
            const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = image.at(y0, x0, c) * (1.0 - fx) + image.at(y0, x1, c) * fx;
                const double bottom = image.at(y1, x0, c) * (1.0 - fx) + image.at(y1, x1, c) * fx;
                out.at(y, x, c) = round_u8(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    return out;
}

Rgb8 apply_brightness(const Rgb8 &image, double factor) {
    if (!(factor > 0.0)) {
        throw std::invalid_argument("brightness factor must be positive");
    }
    Rgb8 out = image;
    if (factor == 1.0) {
        return out;
    }
    for (auto &v : out.pixels) {
        v = round_u8(v * factor);
    }
    return out;
}

void normalize_into(const Rgb8 &image, std::size_t size, float *out, double rescale) {
    if (image.height != size || image.width != size) {
        throw std::invalid_argument("normalize expects a " + std::to_string(size) + "x" + std::to_string(size) +
                                    " image, got " + std::to_string(image.height) + "x" +
                                    std::to_string(image.width));
    }
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        out[i] = static_cast<float>(image.pixels[i] * rescale);
    }
}

Tensor normalize(const Rgb8 &image, std::size_t size, double rescale) {
    Tensor t({size, size, 3});
    normalize_into(image, size, t.data(), rescale);
    return t;
}

Tensor augment_batch(std::span<const Rgb8 *const> images, std::span<const std::size_t> sample_indices,
                     const AugmentConfig &cfg, std::uint64_t global_seed, std::uint64_t epoch, bool training,
                     std::size_t size) {
    if (images.size() != sample_indices.size()) {
        throw std::invalid_argument("augment_batch: image and index counts differ");
    }
    if (images.empty()) {
        throw std::invalid_argument("augment_batch: empty batch");
    }
    cfg.validate();
    const std::size_t n = images.size(), stride = size * size * 3;
    Tensor batch({n, size, size, 3});
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            float *dst = batch.data() + i * stride;
            if (!training) {
                normalize_into(*images[i], size, dst, cfg.rescale);
                continue;
            }
            Rng rng(hash64({global_seed, epoch, sample_indices[i]}));
            const AugmentParams p = sample_params(cfg, images[i]->height, images[i]->width, rng);
            normalize_into(apply_brightness(apply_affine(*images[i], p), p.brightness), size, dst, cfg.rescale);
        } catch (const std::exception &e) {
            errors[i] = e.what();
        }
    }
    for (const auto &e : errors) {
        if (!e.empty()) {
            throw std::invalid_argument(e);
        }
    }
    return batch;
}

}  // namespace lwcnn
