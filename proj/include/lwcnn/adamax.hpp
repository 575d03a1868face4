#pragma once

#include <cstdint>
#include <vector>

#include "lwcnn/tensor.hpp"

namespace lwcnn {

/// Adamax optimizer state: first moment m and infinity-norm accumulator u per
/// parameter element.
struct AdamaxState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> u;
    std::int64_t t = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;

    AdamaxState() = default;
    AdamaxState(const std::vector<Tensor *> &params, double lr);
};

/// t += 1; m = b1 m + (1-b1) g; u = max(b2 u, |g|); p -= lr/(1-b1^t) * m/(u+eps)
void adamax_step(const std::vector<Tensor *> &params, const std::vector<Tensor> &grads, AdamaxState &state);

}  // namespace lwcnn
