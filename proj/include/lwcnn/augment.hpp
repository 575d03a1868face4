#pragma once

// Seeded training-time augmentation: flip, rotate, shear, shift, brightness,
// then rescale to [0,1]. Each sample draws from its own stream
// hash64(global_seed, epoch, sample_index), so results do not depend on how
// samples are spread across threads.

#include <cstddef>
#include <cstdint>
#include <span>

#include "json.hpp"
#include "lwcnn/image.hpp"
#include "lwcnn/rng.hpp"
#include "lwcnn/tensor.hpp"

namespace lwcnn {

struct AugmentConfig {
    double rotation_max_deg = 10.0;
    double brightness_delta = 0.15;
    double shear_max = 0.125;    // affine shear factor
    double shift_frac = 0.002;   // fraction of each dimension
    bool hflip_enabled = true;
    double rescale = 1.0 / 255.0;

    void validate() const;

    /// All ranges zero and flip off: augmentation is the identity.
    static AugmentConfig none();

    bool operator==(const AugmentConfig &) const = default;
};

void to_json(nlohmann::json &j, const AugmentConfig &c);
void from_json(const nlohmann::json &j, AugmentConfig &c);

struct AugmentParams {
    double angle_deg = 0.0;
    double brightness = 1.0;
    double shear = 0.0;
    double dx = 0.0;  // pixels, positive moves content right
    double dy = 0.0;  // pixels, positive moves content down
    bool flip = false;

    bool is_identity() const;
};

/// Draw order: angle, brightness, shear, dx, dy, flip. The flip coin is always
/// drawn so the stream advances the same way whether or not flips are enabled.
AugmentParams sample_params(const AugmentConfig &cfg, std::size_t height, std::size_t width, Rng &rng);

/// Forward map about the center c = ((w-1)/2, (h-1)/2):
///   q = c + t + Shear * Rot * Flip * (p - c)
/// with Flip = diag(-1, 1) when flipping, Rot = [[cos, sin], [-sin, cos]]
/// (counter-clockwise on screen, y pointing down) and Shear = [[1, s], [0, 1]].
/// Output pixels are pulled back through the inverse and sampled bilinearly;
/// coordinates outside the frame are clamped to the nearest edge.
Rgb8 apply_affine(const Rgb8 &image, const AugmentParams &p);

/// Where a source point lands under apply_affine's forward map.
void affine_forward_point(const AugmentParams &p, std::size_t height, std::size_t width, double x, double y,
                          double &out_x, double &out_y);

/// round(v * factor), clamped to [0, 255].
Rgb8 apply_brightness(const Rgb8 &image, double factor);

/// v * rescale as float, shape (size, size, 3).
Tensor normalize(const Rgb8 &image, std::size_t size = 150, double rescale = 1.0 / 255.0);

/// Same as normalize, written into `out` (size*size*3 floats).
void normalize_into(const Rgb8 &image, std::size_t size, float *out, double rescale = 1.0 / 255.0);

/// Returns (N, size, size, 3). `sample_indices[i]` is the dataset position of
/// images[i], used only to derive its stream. Evaluation mode normalizes only.
Tensor augment_batch(std::span<const Rgb8 *const> images, std::span<const std::size_t> sample_indices,
                     const AugmentConfig &cfg, std::uint64_t global_seed, std::uint64_t epoch, bool training,
                     std::size_t size = 150);

}  // namespace lwcnn
