#pragma once

// OpenMP-parallel compute kernels for the layer vocabulary. Every kernel
// parallelizes over output elements only, so each output is reduced by a
// single thread in a fixed order and results do not depend on the number of
// worker threads. Direct-loop counterparts live in reference.hpp.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lwcnn/tensor.hpp"

namespace lwcnn::kernels {

/// Zero padding for a 'same' convolution with an odd or even square kernel.
/// Even kernels put the extra row/column after the data (k=4: 1 before, 2 after).
struct SamePadding {
    std::size_t before;
    std::size_t after;
};

constexpr SamePadding same_padding(std::size_t k) {
    return {(k - 1) / 2, (k - 1) - (k - 1) / 2};
}

/// C (m x n) = A (m x k) * B (k x n), all row-major. With `accumulate`, C += A*B.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T *a, const T *b, T *c, bool accumulate);

/// B (cols x rows) = A^T for row-major A (rows x cols).
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T *a, T *b);

// conv2d, stride 1, same padding. input NHWC, kernel (k,k,Cin,Cout), bias (Cout).
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T> &input, const BasicTensor<T> &kernel, const BasicTensor<T> &bias);

template <typename T>
struct ConvGrads {
    BasicTensor<T> input;  // empty when not requested
    BasicTensor<T> kernel;
    BasicTensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T> &input, const BasicTensor<T> &kernel, const BasicTensor<T> &grad_out,
                             bool need_input_grad = true);

// 2x2 max pooling, stride 2, floor semantics.
template <typename T>
struct PoolResult {
    BasicTensor<T> output;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T> &input);

template <typename T>
BasicTensor<T> maxpool2_backward(const Shape &input_shape, const std::vector<std::uint32_t> &argmax,
                                 const BasicTensor<T> &grad_out);

// dense: input (N x In), weights (In x Out), bias (Out)
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T> &input, const BasicTensor<T> &weights, const BasicTensor<T> &bias);

template <typename T>
struct DenseGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T> &input, const BasicTensor<T> &weights, const BasicTensor<T> &grad_out);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T> &input);

/// grad * 1[x > 0]; the subgradient at exactly zero is zero.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T> &input, const BasicTensor<T> &grad_out);

}  // namespace lwcnn::kernels
