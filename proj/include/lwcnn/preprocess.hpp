#pragma once

// Contour crop: isolate the brain region of an MRI slice and resize it to the
// network input size.
//
//   to_grayscale -> gaussian_blur5 -> threshold -> erode -> dilate
//     -> largest_component_bbox -> crop_resize
//
// The extreme points of the largest external contour are exactly the row and
// column extremes of the largest 8-connected foreground component, so the
// bounding box is taken from component labeling.

#include <array>
#include <cstddef>

#include "lwcnn/image.hpp"

namespace lwcnn {

struct CropParams {
    int threshold = 45;
    double blur_sigma = 1.1;
    int erode_iterations = 2;
    int dilate_iterations = 2;
    std::size_t output_size = 150;

    void validate() const;
};

/// y = round(0.299 r + 0.587 g + 0.114 b), halves rounded up.
Grayscale8 to_grayscale(const Rgb8 &image);

/// Normalized 5-tap Gaussian weights.
std::array<double, 5> gaussian_kernel5(double sigma);

/// Separable 5x5 Gaussian with reflect-101 borders, rounded back to 8 bits.
Grayscale8 gaussian_blur5(const Grayscale8 &image, double sigma = 1.1);

/// pixel > t
BinaryMask threshold(const Grayscale8 &image, int t);

// 3x3 square structuring element; pixels outside the image count as background.
BinaryMask erode(const BinaryMask &mask, int iterations);
BinaryMask dilate(const BinaryMask &mask, int iterations);

struct ComponentBox {
    BoundingBox box;
    std::size_t area = 0;
    bool empty_fallback = false;  // mask had no foreground; box is the whole image
};

/// Bounding box of the largest 8-connected component. Equal areas go to the
/// component whose first pixel comes first in row-major order.
ComponentBox largest_component_bbox(const BinaryMask &mask);

/// Bilinear resize with pixel-center alignment and edge clamping.
Rgb8 resize_bilinear(const Rgb8 &image, std::size_t out_height, std::size_t out_width);

/// Crop the inclusive box, then resize to size x size (aspect ratio not kept).
Rgb8 crop_resize(const Rgb8 &image, const BoundingBox &box, std::size_t size = 150);

struct CropResult {
    Rgb8 image;
    BoundingBox box;  // in source coordinates, before resize
    bool empty_fallback = false;
};

CropResult crop_pipeline(const Rgb8 &image, const CropParams &params = {});

}  // namespace lwcnn
