#include "lwcnn/reference.hpp"

#include <algorithm>
#include <stdexcept>

namespace lwcnn::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T> &input, const BasicTensor<T> &kernel, const BasicTensor<T> &bias) {
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
    const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
    if (kernel.dim(2) != cin) {
        throw std::invalid_argument("reference conv2d: channel mismatch");
    }
    const auto pad = static_cast<std::ptrdiff_t>(kernels::same_padding(k).before);
    BasicTensor<T> out({n, h, w, cout});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t f = 0; f < cout; ++f) {
                    T sum = bias[f];
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) - pad;
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                                ix >= static_cast<std::ptrdiff_t>(w)) {
                                continue;
                            }
                            for (std::size_t c = 0; c < cin; ++c) {
                                sum += input.at(b, iy, ix, c) * kernel.at(ky, kx, c, f);
                            }
                        }
                    }
                    out.at(b, y, x, f) = sum;
                }
            }
        }
    }
    return out;
}

template <typename T>
kernels::ConvGrads<T> conv2d_backward(const BasicTensor<T> &input, const BasicTensor<T> &kernel,
                                      const BasicTensor<T> &grad_out) {
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
    const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
    const auto pad = static_cast<std::ptrdiff_t>(kernels::same_padding(k).before);
    kernels::ConvGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(kernel.shape()), BasicTensor<T>({cout})};
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t f = 0; f < cout; ++f) {
                    const T go = grad_out.at(b, y, x, f);
                    g.bias[f] += go;
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) - pad;
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                                ix >= static_cast<std::ptrdiff_t>(w)) {
                                continue;
                            }
                            for (std::size_t c = 0; c < cin; ++c) {
                                g.kernel.at(ky, kx, c, f) += input.at(b, iy, ix, c) * go;
                                g.input.at(b, iy, ix, c) += kernel.at(ky, kx, c, f) * go;
                            }
                        }
                    }
                }
            }
        }
    }
    return g;
}

template <typename T>
BasicTensor<T> maxpool2_forward(const BasicTensor<T> &input) {
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    BasicTensor<T> out({n, h / 2, w / 2, c});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t y = 0; y < h / 2; ++y) {
            for (std::size_t x = 0; x < w / 2; ++x) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    out.at(b, y, x, ch) = std::max({input.at(b, 2 * y, 2 * x, ch), input.at(b, 2 * y, 2 * x + 1, ch),
                                                    input.at(b, 2 * y + 1, 2 * x, ch),
                                                    input.at(b, 2 * y + 1, 2 * x + 1, ch)});
                }
            }
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T> &input, const BasicTensor<T> &weights, const BasicTensor<T> &bias) {
    const std::size_t n = input.dim(0), in = input.dim(1), out = weights.dim(1);
    BasicTensor<T> result({n, out});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out; ++j) {
            T sum = bias[j];
            for (std::size_t p = 0; p < in; ++p) {
                sum += input[i * in + p] * weights[p * out + j];
            }
            result[i * out + j] = sum;
        }
    }
    return result;
}

template <typename T>
kernels::DenseGrads<T> dense_backward(const BasicTensor<T> &input, const BasicTensor<T> &weights,
                                      const BasicTensor<T> &grad_out) {
    const std::size_t n = input.dim(0), in = input.dim(1), out = weights.dim(1);
    kernels::DenseGrads<T> g{BasicTensor<T>({n, in}), BasicTensor<T>({in, out}), BasicTensor<T>({out})};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out; ++j) {
            const T go = grad_out[i * out + j];
            g.bias[j] += go;
            for (std::size_t p = 0; p < in; ++p) {
                g.input[i * in + p] += go * weights[p * out + j];
                g.weights[p * out + j] += input[i * in + p] * go;
            }
        }
    }
    return g;
}

template BasicTensor<float> conv2d_forward(const BasicTensor<float> &, const BasicTensor<float> &,
                                           const BasicTensor<float> &);
template BasicTensor<double> conv2d_forward(const BasicTensor<double> &, const BasicTensor<double> &,
                                            const BasicTensor<double> &);
template kernels::ConvGrads<float> conv2d_backward(const BasicTensor<float> &, const BasicTensor<float> &,
                                                   const BasicTensor<float> &);
template kernels::ConvGrads<double> conv2d_backward(const BasicTensor<double> &, const BasicTensor<double> &,
                                                    const BasicTensor<double> &);
template BasicTensor<float> maxpool2_forward(const BasicTensor<float> &);
template BasicTensor<double> maxpool2_forward(const BasicTensor<double> &);
template BasicTensor<float> dense_forward(const BasicTensor<float> &, const BasicTensor<float> &,
                                          const BasicTensor<float> &);
template BasicTensor<double> dense_forward(const BasicTensor<double> &, const BasicTensor<double> &,
                                           const BasicTensor<double> &);
template kernels::DenseGrads<float> dense_backward(const BasicTensor<float> &, const BasicTensor<float> &,
                                                   const BasicTensor<float> &);
template kernels::DenseGrads<double> dense_backward(const BasicTensor<double> &, const BasicTensor<double> &,
                                                    const BasicTensor<double> &);

}  // namespace lwcnn::reference
