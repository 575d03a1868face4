#pragma once

#include <cstddef>

#include "lwcnn/kernels.hpp"
#include "lwcnn/rng.hpp"
#include "lwcnn/tensor.hpp"

namespace lwcnn {

/// Same-padded stride-1 convolution with a k x k x Cin x Cout kernel.
template <typename T>
struct ConvLayer {
    BasicTensor<T> kernel;
    BasicTensor<T> bias;

    std::size_t kernel_size() const { return kernel.dim(0); }
    std::size_t in_channels() const { return kernel.dim(2); }
    std::size_t out_channels() const { return kernel.dim(3); }
    std::size_t parameter_count() const { return kernel.size() + bias.size(); }

    BasicTensor<T> forward(const BasicTensor<T> &input) const { return kernels::conv2d_forward(input, kernel, bias); }

    kernels::ConvGrads<T> backward(const BasicTensor<T> &input, const BasicTensor<T> &grad_out,
                                   bool need_input_grad = true) const {
        return kernels::conv2d_backward(input, kernel, grad_out, need_input_grad);
    }
};

template <typename T>
struct DenseLayer {
    BasicTensor<T> weights;  // In x Out
    BasicTensor<T> bias;

    std::size_t in_features() const { return weights.dim(0); }
    std::size_t out_features() const { return weights.dim(1); }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }

    BasicTensor<T> forward(const BasicTensor<T> &input) const { return kernels::dense_forward(input, weights, bias); }

    kernels::DenseGrads<T> backward(const BasicTensor<T> &input, const BasicTensor<T> &grad_out) const {
        return kernels::dense_backward(input, weights, grad_out);
    }
};

template <typename T>
struct DropoutResult {
    BasicTensor<T> output;
    BasicTensor<T> mask;  // 0 for dropped elements, 1/(1-rate) for kept ones
};

/// Inverted dropout. Inference (or rate 0) is the identity with an all-ones mask.
template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T> &input, double rate, bool training, Rng &rng);

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T> &mask, const BasicTensor<T> &grad_out);

/// Row-wise softmax with max subtraction.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T> &logits);

template <typename T>
struct SoftmaxCrossEntropy {
    BasicTensor<T> probs;
    double loss;                 // batch mean of -sum y ln clip(p, 1e-7, 1-1e-7)
    BasicTensor<T> grad_logits;  // (probs - onehot) / N
};

inline constexpr double kProbabilityClip = 1e-7;

template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const BasicTensor<T> &logits, const BasicTensor<T> &onehot);

}  // namespace lwcnn
