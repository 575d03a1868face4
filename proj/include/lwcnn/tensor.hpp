#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lwcnn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape &shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape &shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ')';
    return os.str();
}

/// Dense row-major array. Images are NHWC, flat activations are N x F.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{}) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
        for (auto d : shape_) {
            if (d == 0) {
                throw std::invalid_argument("tensor dimension must be positive: " + shape_string(shape_));
            }
        }
    }

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_)) {
            throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
        }
    }

    const Shape &shape() const { return shape_; }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T *data() { return data_.data(); }
    const T *data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T> &storage() { return data_; }
    const std::vector<T> &storage() const { return data_; }

    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    // NHWC accessor
    T &at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    const T &at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    /// Same data viewed under a new shape of equal element count.
    BasicTensor reshaped(Shape shape) const {
        return BasicTensor(std::move(shape), data_);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    bool operator==(const BasicTensor &) const = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

}  // namespace lwcnn
