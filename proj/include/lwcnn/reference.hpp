#pragma once

// Serial direct-loop implementations of the kernels in kernels.hpp. Kept as
// the test oracle and the benchmark baseline; never used on the training path.

#include "lwcnn/kernels.hpp"

namespace lwcnn::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T> &input, const BasicTensor<T> &kernel, const BasicTensor<T> &bias);

template <typename T>
kernels::ConvGrads<T> conv2d_backward(const BasicTensor<T> &input, const BasicTensor<T> &kernel,
                                      const BasicTensor<T> &grad_out);

template <typename T>
BasicTensor<T> maxpool2_forward(const BasicTensor<T> &input);

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T> &input, const BasicTensor<T> &weights, const BasicTensor<T> &bias);

template <typename T>
kernels::DenseGrads<T> dense_backward(const BasicTensor<T> &input, const BasicTensor<T> &weights,
                                      const BasicTensor<T> &grad_out);

}  // namespace lwcnn::reference
