#include "lwcnn/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lwcnn::kernels {

namespace {

void require(bool ok, const std::string &msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

constexpr std::size_t kRowTile = 4;  // the unrolled full-tile path below assumes 4

template <typename T>
constexpr std::size_t col_tile() {
    return 64 / sizeof(T);
}

// Packs B (k x n) into column panels of width NR: panel j holds B[:, j*NR .. j*NR+NR)
// contiguously, row by row, zero-padded on the right.
template <typename T>
std::vector<T> pack_panels(std::size_t n, std::size_t k, const T *b) {
    constexpr std::size_t nr = col_tile<T>();
    const std::size_t panels = (n + nr - 1) / nr;
    std::vector<T> packed(panels * k * nr, T{});
#pragma omp parallel for schedule(static)
    for (std::size_t jp = 0; jp < panels; ++jp) {
        const std::size_t j0 = jp * nr;
        const std::size_t width = std::min(nr, n - j0);
        T *dst = packed.data() + jp * k * nr;
        for (std::size_t p = 0; p < k; ++p) {
            std::copy_n(b + p * n + j0, width, dst + p * nr);
        }
    }
    return packed;
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T *a, const T *b, T *c, bool accumulate) {
    constexpr std::size_t mr = kRowTile;
    constexpr std::size_t nr = col_tile<T>();
    if (m == 0 || n == 0) {
        return;
    }
    if (k == 0) {
        if (!accumulate) {
            std::fill_n(c, m * n, T{});
        }
        return;
    }
    const std::vector<T> packed = pack_panels(n, k, b);
    const std::size_t panels = (n + nr - 1) / nr;
    const std::size_t row_tiles = (m + mr - 1) / mr;

#pragma omp parallel for schedule(static)
    for (std::size_t it = 0; it < row_tiles; ++it) {
        const std::size_t i0 = it * mr;
        const std::size_t rows = std::min(mr, m - i0);
        for (std::size_t jp = 0; jp < panels; ++jp) {
            const std::size_t j0 = jp * nr;
            const std::size_t width = std::min(nr, n - j0);
            const T *panel = packed.data() + jp * k * nr;
            T acc[mr][nr];
            for (std::size_t r = 0; r < mr; ++r) {
                for (std::size_t j = 0; j < nr; ++j) {
                    acc[r][j] = (accumulate && r < rows && j < width) ? c[(i0 + r) * n + j0 + j] : T{};
                }
            }
            if (rows == mr) {
                const T *a0 = a + (i0 + 0) * k;
                const T *a1 = a + (i0 + 1) * k;
                const T *a2 = a + (i0 + 2) * k;
                const T *a3 = a + (i0 + 3) * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const T *bp = panel + p * nr;
                    const T v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
                    for (std::size_t j = 0; j < nr; ++j) {
                        acc[0][j] += v0 * bp[j];
                        acc[1][j] += v1 * bp[j];
                        acc[2][j] += v2 * bp[j];
                        acc[3][j] += v3 * bp[j];
                    }
                }
            } else {
                for (std::size_t p = 0; p < k; ++p) {
                    const T *bp = panel + p * nr;
                    for (std::size_t r = 0; r < rows; ++r) {
                        const T v = a[(i0 + r) * k + p];
                        for (std::size_t j = 0; j < nr; ++j) {
                            acc[r][j] += v * bp[j];
                        }
                    }
                }
            }
            for (std::size_t r = 0; r < rows; ++r) {
                std::copy_n(acc[r], width, c + (i0 + r) * n + j0);
            }
        }
    }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T *a, T *b) {
    constexpr std::size_t block = 32;
#pragma omp parallel for schedule(static)
    for (std::size_t jb = 0; jb < cols; jb += block) {
        const std::size_t jend = std::min(cols, jb + block);
        for (std::size_t ib = 0; ib < rows; ib += block) {
            const std::size_t iend = std::min(rows, ib + block);
            for (std::size_t j = jb; j < jend; ++j) {
                for (std::size_t i = ib; i < iend; ++i) {
                    b[j * rows + i] = a[i * cols + j];
                }
            }
        }
    }
}

namespace {

struct ConvGeometry {
    std::size_t n, h, w, cin, cout, k;
    SamePadding pad;
    std::size_t patch() const { return k * k * cin; }
    std::size_t pixels() const { return h * w; }
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T> &input, const BasicTensor<T> &kernel) {
    require(input.rank() == 4, "conv2d: input must be NHWC, got " + shape_string(input.shape()));
    require(kernel.rank() == 4 && kernel.dim(0) == kernel.dim(1),
            "conv2d: kernel must be (k,k,Cin,Cout), got " + shape_string(kernel.shape()));
    require(input.dim(3) == kernel.dim(2), "conv2d: input has " + std::to_string(input.dim(3)) +
                                               " channels but kernel expects " + std::to_string(kernel.dim(2)));
    const std::size_t k = kernel.dim(0);
    return {input.dim(0), input.dim(1), input.dim(2), input.dim(3), kernel.dim(3), k, same_padding(k)};
}

// col[(y*W + x), (ky*k + kx)*Cin + c] = padded input at (y+ky-pad, x+kx-pad, c)
template <typename T>
void im2col(const ConvGeometry &g, const T *image, T *col) {
    const std::size_t patch = g.patch();
    const auto pb = static_cast<std::ptrdiff_t>(g.pad.before);
    const auto h = static_cast<std::ptrdiff_t>(g.h);
    const auto w = static_cast<std::ptrdiff_t>(g.w);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            T *row = col + static_cast<std::size_t>(y * w + x) * patch;
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                const std::ptrdiff_t iy = y + static_cast<std::ptrdiff_t>(ky) - pb;
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const std::ptrdiff_t ix = x + static_cast<std::ptrdiff_t>(kx) - pb;
                    T *dst = row + (ky * g.k + kx) * g.cin;
                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
                        std::fill_n(dst, g.cin, T{});
                    } else {
                        std::copy_n(image + static_cast<std::size_t>(iy * w + ix) * g.cin, g.cin, dst);
                    }
                }
            }
        }
    }
}

// Gather form of col2im: each input element sums the patch entries that read it.
template <typename T>
void col2im(const ConvGeometry &g, const T *col, T *image) {
    const std::size_t patch = g.patch();
    const auto pb = static_cast<std::ptrdiff_t>(g.pad.before);
    const auto h = static_cast<std::ptrdiff_t>(g.h);
    const auto w = static_cast<std::ptrdiff_t>(g.w);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            T *dst = image + static_cast<std::size_t>(y * w + x) * g.cin;
            std::fill_n(dst, g.cin, T{});
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                const std::ptrdiff_t oy = y - static_cast<std::ptrdiff_t>(ky) + pb;
                if (oy < 0 || oy >= h) {
                    continue;
                }
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const std::ptrdiff_t ox = x - static_cast<std::ptrdiff_t>(kx) + pb;
                    if (ox < 0 || ox >= w) {
                        continue;
                    }
                    const T *src = col + static_cast<std::size_t>(oy * w + ox) * patch + (ky * g.k + kx) * g.cin;
                    for (std::size_t c = 0; c < g.cin; ++c) {
                        dst[c] += src[c];
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T> &input, const BasicTensor<T> &kernel, const BasicTensor<T> &bias) {
    const ConvGeometry g = conv_geometry(input, kernel);
    require(bias.size() == g.cout, "conv2d: bias length " + std::to_string(bias.size()) + " != Cout " +
                                       std::to_string(g.cout));
    BasicTensor<T> out({g.n, g.h, g.w, g.cout});
    std::vector<T> col(g.pixels() * g.patch());
    for (std::size_t n = 0; n < g.n; ++n) {
        im2col(g, input.data() + n * g.pixels() * g.cin, col.data());
        T *dst = out.data() + n * g.pixels() * g.cout;
        gemm(g.pixels(), g.cout, g.patch(), col.data(), kernel.data(), dst, false);
        for (std::size_t p = 0; p < g.pixels(); ++p) {
            for (std::size_t f = 0; f < g.cout; ++f) {
                dst[p * g.cout + f] += bias[f];
            }
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T> &input, const BasicTensor<T> &kernel, const BasicTensor<T> &grad_out,
                             bool need_input_grad) {
    const ConvGeometry g = conv_geometry(input, kernel);
    require(grad_out.shape() == Shape{g.n, g.h, g.w, g.cout},
            "conv2d backward: grad_out shape " + shape_string(grad_out.shape()) + " does not match forward output " +
                shape_string({g.n, g.h, g.w, g.cout}));

    ConvGrads<T> grads{{}, BasicTensor<T>(kernel.shape()), BasicTensor<T>({g.cout})};
    if (need_input_grad) {
        grads.input = BasicTensor<T>(input.shape());
    }
    std::vector<T> kernel_t;
    if (need_input_grad) {
        kernel_t.resize(kernel.size());
        transpose(g.patch(), g.cout, kernel.data(), kernel_t.data());
    }
    std::vector<T> col(g.pixels() * g.patch());
    std::vector<T> col_t(col.size());

    for (std::size_t n = 0; n < g.n; ++n) {
        const T *go = grad_out.data() + n * g.pixels() * g.cout;
        for (std::size_t p = 0; p < g.pixels(); ++p) {
            for (std::size_t f = 0; f < g.cout; ++f) {
                grads.bias[f] += go[p * g.cout + f];
            }
        }
        im2col(g, input.data() + n * g.pixels() * g.cin, col.data());
        transpose(g.pixels(), g.patch(), col.data(), col_t.data());
        gemm(g.patch(), g.cout, g.pixels(), col_t.data(), go, grads.kernel.data(), true);

        if (need_input_grad) {
            gemm(g.pixels(), g.patch(), g.cout, go, kernel_t.data(), col.data(), false);
            col2im(g, col.data(), grads.input.data() + n * g.pixels() * g.cin);
        }
    }
    return grads;
}

template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T> &input) {
    require(input.rank() == 4, "maxpool2: input must be NHWC, got " + shape_string(input.shape()));
    const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
    require(h >= 2 && w >= 2, "maxpool2: spatial dims must be >= 2, got " + shape_string(input.shape()));
    const std::size_t oh = h / 2, ow = w / 2;
    PoolResult<T> result{BasicTensor<T>({n, oh, ow, c}), std::vector<std::uint32_t>(n * oh * ow * c)};
    const std::size_t rows = n * oh;
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t b = r / oh, oy = r % oh;
        for (std::size_t ox = 0; ox < ow; ++ox) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::size_t best = ((b * h + 2 * oy) * w + 2 * ox) * c + ch;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = ((b * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        if (input[idx] > input[best]) {
                            best = idx;
                        }
                    }
                }
                const std::size_t o = ((b * oh + oy) * ow + ox) * c + ch;
                result.output[o] = input[best];
                result.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return result;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const Shape &input_shape, const std::vector<std::uint32_t> &argmax,
                                 const BasicTensor<T> &grad_out) {
    require(argmax.size() == grad_out.size(), "maxpool2 backward: grad_out has " + std::to_string(grad_out.size()) +
                                                  " elements but cache holds " + std::to_string(argmax.size()));
    BasicTensor<T> grad_in(input_shape);
    // 2x2 stride-2 windows are disjoint, so every input element receives at most one gradient.
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        grad_in[argmax[i]] = grad_out[i];
    }
    return grad_in;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T> &input, const BasicTensor<T> &weights, const BasicTensor<T> &bias) {
    require(input.rank() == 2 && weights.rank() == 2, "dense: expected (N,In) input and (In,Out) weights");
    require(input.dim(1) == weights.dim(0), "dense: input width " + std::to_string(input.dim(1)) +
                                                " != weight rows " + std::to_string(weights.dim(0)));
    require(bias.size() == weights.dim(1), "dense: bias length mismatch");
    const std::size_t n = input.dim(0), in = input.dim(1), out = weights.dim(1);
    BasicTensor<T> result({n, out});
    gemm(n, out, in, input.data(), weights.data(), result.data(), false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out; ++j) {
            result[i * out + j] += bias[j];
        }
    }
    return result;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T> &input, const BasicTensor<T> &weights, const BasicTensor<T> &grad_out) {
    require(input.rank() == 2 && weights.rank() == 2 && input.dim(1) == weights.dim(0),
            "dense backward: input/weights mismatch");
    const std::size_t n = input.dim(0), in = input.dim(1), out = weights.dim(1);
    require(grad_out.shape() == Shape{n, out}, "dense backward: grad_out shape " + shape_string(grad_out.shape()) +
                                                   " != " + shape_string({n, out}));
    DenseGrads<T> grads{BasicTensor<T>({n, in}), BasicTensor<T>({in, out}), BasicTensor<T>({out})};

    std::vector<T> weights_t(weights.size());
    transpose(in, out, weights.data(), weights_t.data());
    gemm(n, in, out, grad_out.data(), weights_t.data(), grads.input.data(), false);

    std::vector<T> input_t(input.size());
    transpose(n, in, input.data(), input_t.data());
    gemm(in, out, n, input_t.data(), grad_out.data(), grads.weights.data(), false);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out; ++j) {
            grads.bias[j] += grad_out[i * out + j];
        }
    }
    return grads;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T> &input) {
    BasicTensor<T> out(input.shape());
    const std::size_t size = input.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < size; ++i) {
        out[i] = input[i] > T{} ? input[i] : T{};
    }
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T> &input, const BasicTensor<T> &grad_out) {
    require(input.shape() == grad_out.shape(), "relu backward: shape mismatch");
    BasicTensor<T> out(input.shape());
    const std::size_t size = input.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < size; ++i) {
        out[i] = input[i] > T{} ? grad_out[i] : T{};
    }
    return out;
}

#define LWCNN_INSTANTIATE(T)                                                                                    \
    template void gemm<T>(std::size_t, std::size_t, std::size_t, const T *, const T *, T *, bool);             \
    template void transpose<T>(std::size_t, std::size_t, const T *, T *);                                      \
    template BasicTensor<T> conv2d_forward<T>(const BasicTensor<T> &, const BasicTensor<T> &,                  \
                                              const BasicTensor<T> &);                                         \
    template ConvGrads<T> conv2d_backward<T>(const BasicTensor<T> &, const BasicTensor<T> &,                   \
                                             const BasicTensor<T> &, bool);                                    \
    template PoolResult<T> maxpool2_forward<T>(const BasicTensor<T> &);                                        \
    template BasicTensor<T> maxpool2_backward<T>(const Shape &, const std::vector<std::uint32_t> &,            \
                                                 const BasicTensor<T> &);                                      \
    template BasicTensor<T> dense_forward<T>(const BasicTensor<T> &, const BasicTensor<T> &,                   \
                                             const BasicTensor<T> &);                                          \
    template DenseGrads<T> dense_backward<T>(const BasicTensor<T> &, const BasicTensor<T> &,                   \
                                             const BasicTensor<T> &);                                          \
    template BasicTensor<T> relu_forward<T>(const BasicTensor<T> &);                                           \
    template BasicTensor<T> relu_backward<T>(const BasicTensor<T> &, const BasicTensor<T> &);

LWCNN_INSTANTIATE(float)
LWCNN_INSTANTIATE(double)

#undef LWCNN_INSTANTIATE

}  // namespace lwcnn::kernels
