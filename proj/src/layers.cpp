#include "lwcnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lwcnn {

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T> &input, double rate, bool training, Rng &rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("dropout rate must be in [0,1), got " + std::to_string(rate));
    }
    DropoutResult<T> result{input, BasicTensor<T>(input.shape(), T{1})};
    if (!training || rate == 0.0) {
        return result;
    }
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T m = rng.bernoulli(rate) ? T{} : scale;
        result.mask[i] = m;
        result.output[i] = input[i] * m;
    }
    return result;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T> &mask, const BasicTensor<T> &grad_out) {
    if (mask.shape() != grad_out.shape()) {
        throw std::invalid_argument("dropout backward: mask " + shape_string(mask.shape()) + " vs grad " +
                                    shape_string(grad_out.shape()));
    }
    BasicTensor<T> grad(grad_out.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad[i] = grad_out[i] * mask[i];
    }
    return grad;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T> &logits) {
    if (logits.rank() != 2) {
        throw std::invalid_argument("softmax: expected N x C logits, got " + shape_string(logits.shape()));
    }
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    BasicTensor<T> probs(logits.shape());
    for (std::size_t i = 0; i < n; ++i) {
        const T *row = logits.data() + i * c;
        T *out = probs.data() + i * c;
        const T top = *std::max_element(row, row + c);
        T sum{};
        for (std::size_t j = 0; j < c; ++j) {
            out[j] = std::exp(row[j] - top);
            sum += out[j];
        }
        for (std::size_t j = 0; j < c; ++j) {
            out[j] /= sum;
        }
    }
    return probs;
}

template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const BasicTensor<T> &logits, const BasicTensor<T> &onehot) {
    if (logits.shape() != onehot.shape()) {
        throw std::invalid_argument("softmax_ce: class count mismatch, logits " + shape_string(logits.shape()) +
                                    " vs labels " + shape_string(onehot.shape()));
    }
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < c; ++j) {
            const T y = onehot[i * c + j];
            if (y == T{1}) {
                ++ones;
            } else if (y != T{}) {
                ones = 2;
            }
        }
        if (ones != 1) {
            throw std::invalid_argument("softmax_ce: label row " + std::to_string(i) + " is not one-hot");
        }
    }

    SoftmaxCrossEntropy<T> result{softmax(logits), 0.0, BasicTensor<T>(logits.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < n * c; ++i) {
        const T y = onehot[i];
        if (y != T{}) {
            const double p = std::clamp(static_cast<double>(result.probs[i]), kProbabilityClip, 1.0 - kProbabilityClip);
            total -= static_cast<double>(y) * std::log(p);
        }
        result.grad_logits[i] = (result.probs[i] - y) / static_cast<T>(n);
    }
    result.loss = total / static_cast<double>(n);
    return result;
}

template DropoutResult<float> dropout_forward(const BasicTensor<float> &, double, bool, Rng &);
template DropoutResult<double> dropout_forward(const BasicTensor<double> &, double, bool, Rng &);
template BasicTensor<float> dropout_backward(const BasicTensor<float> &, const BasicTensor<float> &);
template BasicTensor<double> dropout_backward(const BasicTensor<double> &, const BasicTensor<double> &);
template BasicTensor<float> softmax(const BasicTensor<float> &);
template BasicTensor<double> softmax(const BasicTensor<double> &);
template SoftmaxCrossEntropy<float> softmax_cross_entropy(const BasicTensor<float> &, const BasicTensor<float> &);
template SoftmaxCrossEntropy<double> softmax_cross_entropy(const BasicTensor<double> &, const BasicTensor<double> &);

}  // namespace lwcnn
