#pragma once

// Central finite-difference oracle shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <span>

#include "lwcnn/rng.hpp"
#include "lwcnn/tensor.hpp"

namespace lwcnn::testing {

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// |a - n| / max(|a|, |n|, 1e-6); the floor keeps exact-zero gradients from dividing by zero.
inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Perturbs each entry of `x` by +-h and compares (L(x+h) - L(x-h)) / 2h with `analytic`.
template <typename Loss>
double max_gradient_error(std::span<double> x, std::span<const double> analytic, Loss &&loss,
                          double h = kFiniteDifferenceStep) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double plus = loss();
        x[i] = saved - h;
        const double minus = loss();
        x[i] = saved;
        worst = std::max(worst, relative_error(analytic[i], (plus - minus) / (2.0 * h)));
    }
    return worst;
}

template <typename T>
BasicTensor<T> random_tensor(Shape shape, Rng &rng, double lo = -1.0, double hi = 1.0) {
    BasicTensor<T> t(std::move(shape));
    for (auto &v : t.values()) {
        v = static_cast<T>(rng.uniform(lo, hi));
    }
    return t;
}

/// Scalar probe loss sum(w * y) whose gradient with respect to y is w.
template <typename T>
double weighted_sum(const BasicTensor<T> &y, const BasicTensor<T> &w) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += static_cast<double>(y[i]) * static_cast<double>(w[i]);
    }
    return s;
}

}  // namespace lwcnn::testing
