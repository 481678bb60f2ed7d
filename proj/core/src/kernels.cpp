#include "nlc/kernels.hpp"

#include <algorithm>

#include "nlc/errors.hpp"

namespace nlc {

namespace {

// First output index whose tap stays inside [0, extent), and one past the
// last. Tap position = out * stride + k_off - pad.
std::pair<int64_t, int64_t> tap_range(int64_t out_extent, int64_t in_extent,
                                      int64_t stride, int64_t k_off, int64_t pad) {
    int64_t shift = k_off - pad;  // in = out * stride + shift
    int64_t lo = 0;
    if (shift < 0) lo = (-shift + stride - 1) / stride;
    int64_t hi_num = in_extent - 1 - shift;
    if (hi_num < 0) return {0, 0};
    int64_t hi = std::min(out_extent - 1, hi_num / stride);
    if (hi < lo) return {0, 0};
    return {lo, hi + 1};
}

}  // namespace

ConvDims conv_dims(const Shape& input, const Shape& kernel, int64_t stride, Padding pad) {
    check_arg(input.size() == 4, "conv2d: input must be 4-d, got " + shape_str(input));
    check_arg(kernel.size() == 4, "conv2d: kernel must be 4-d, got " + shape_str(kernel));
    check_arg(stride >= 1, "conv2d: stride must be >= 1");
    check_arg(kernel[1] == input[1],
              "conv2d: kernel expects " + std::to_string(kernel[1]) +
                  " input channels, tensor has " + std::to_string(input[1]));
    ConvDims d;
    d.batch = input[0];
    d.in_ch = input[1];
    d.in_h = input[2];
    d.in_w = input[3];
    d.out_ch = kernel[0];
    d.kh = kernel[2];
    d.kw = kernel[3];
    d.stride = stride;
    if (pad == Padding::same) {
        d.out_h = (d.in_h + stride - 1) / stride;
        d.out_w = (d.in_w + stride - 1) / stride;
        int64_t total_h = std::max<int64_t>((d.out_h - 1) * stride + d.kh - d.in_h, 0);
        int64_t total_w = std::max<int64_t>((d.out_w - 1) * stride + d.kw - d.in_w, 0);
        d.pad_top = total_h / 2;
        d.pad_left = total_w / 2;
    } else {
        check_arg(d.in_h >= d.kh && d.in_w >= d.kw,
                  "conv2d: input smaller than kernel under valid padding");
        d.out_h = (d.in_h - d.kh) / stride + 1;
        d.out_w = (d.in_w - d.kw) / stride + 1;
    }
    return d;
}

void conv2d_forward(std::span<const double> in, std::span<const double> k,
                    const ConvDims& d, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const int64_t in_plane = d.in_h * d.in_w;
    const int64_t out_plane = d.out_h * d.out_w;
    for (int64_t n = 0; n < d.batch; ++n) {
        const double* in_n = in.data() + n * d.in_ch * in_plane;
        double* out_n = out.data() + n * d.out_ch * out_plane;
        for (int64_t co = 0; co < d.out_ch; ++co) {
            double* out_c = out_n + co * out_plane;
            for (int64_t ci = 0; ci < d.in_ch; ++ci) {
                const double* in_c = in_n + ci * in_plane;
                const double* k_cc = k.data() + (co * d.in_ch + ci) * d.kh * d.kw;
                for (int64_t ky = 0; ky < d.kh; ++ky) {
                    auto [oy_lo, oy_hi] = tap_range(d.out_h, d.in_h, d.stride, ky, d.pad_top);
                    for (int64_t kx = 0; kx < d.kw; ++kx) {
                        const double w = k_cc[ky * d.kw + kx];
                        if (w == 0.0) continue;
                        auto [ox_lo, ox_hi] = tap_range(d.out_w, d.in_w, d.stride, kx, d.pad_left);
                        const int64_t shift_x = kx - d.pad_left;
                        for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
                            const int64_t iy = oy * d.stride + ky - d.pad_top;
                            const double* in_row = in_c + iy * d.in_w;
                            double* out_row = out_c + oy * d.out_w;
                            for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                                out_row[ox] += w * in_row[ox * d.stride + shift_x];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_input_grad(std::span<const double> gout, std::span<const double> k,
                       const ConvDims& d, std::span<double> gin) {
    std::fill(gin.begin(), gin.end(), 0.0);
    const int64_t in_plane = d.in_h * d.in_w;
    const int64_t out_plane = d.out_h * d.out_w;
    for (int64_t n = 0; n < d.batch; ++n) {
        const double* gout_n = gout.data() + n * d.out_ch * out_plane;
        double* gin_n = gin.data() + n * d.in_ch * in_plane;
        for (int64_t ci = 0; ci < d.in_ch; ++ci) {
            double* gin_c = gin_n + ci * in_plane;
            for (int64_t co = 0; co < d.out_ch; ++co) {
                const double* gout_c = gout_n + co * out_plane;
                const double* k_cc = k.data() + (co * d.in_ch + ci) * d.kh * d.kw;
                for (int64_t ky = 0; ky < d.kh; ++ky) {
                    auto [oy_lo, oy_hi] = tap_range(d.out_h, d.in_h, d.stride, ky, d.pad_top);
                    for (int64_t kx = 0; kx < d.kw; ++kx) {
                        const double w = k_cc[ky * d.kw + kx];
                        if (w == 0.0) continue;
                        auto [ox_lo, ox_hi] = tap_range(d.out_w, d.in_w, d.stride, kx, d.pad_left);
                        const int64_t shift_x = kx - d.pad_left;
                        for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
                            const int64_t iy = oy * d.stride + ky - d.pad_top;
                            double* gin_row = gin_c + iy * d.in_w;
                            const double* gout_row = gout_c + oy * d.out_w;
                            for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                                gin_row[ox * d.stride + shift_x] += w * gout_row[ox];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_weight_grad(std::span<const double> in, std::span<const double> gout,
                        const ConvDims& d, std::span<double> gk) {
    std::fill(gk.begin(), gk.end(), 0.0);
    const int64_t in_plane = d.in_h * d.in_w;
    const int64_t out_plane = d.out_h * d.out_w;
    for (int64_t co = 0; co < d.out_ch; ++co) {
        for (int64_t ci = 0; ci < d.in_ch; ++ci) {
            double* gk_cc = gk.data() + (co * d.in_ch + ci) * d.kh * d.kw;
            for (int64_t ky = 0; ky < d.kh; ++ky) {
                auto [oy_lo, oy_hi] = tap_range(d.out_h, d.in_h, d.stride, ky, d.pad_top);
                for (int64_t kx = 0; kx < d.kw; ++kx) {
                    auto [ox_lo, ox_hi] = tap_range(d.out_w, d.in_w, d.stride, kx, d.pad_left);
                    const int64_t shift_x = kx - d.pad_left;
                    double acc = 0.0;
                    for (int64_t n = 0; n < d.batch; ++n) {
                        const double* in_c = in.data() + (n * d.in_ch + ci) * in_plane;
                        const double* gout_c = gout.data() + (n * d.out_ch + co) * out_plane;
                        for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
                            const int64_t iy = oy * d.stride + ky - d.pad_top;
                            const double* in_row = in_c + iy * d.in_w;
                            const double* gout_row = gout_c + oy * d.out_w;
                            for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                                acc += gout_row[ox] * in_row[ox * d.stride + shift_x];
                        }
                    }
                    gk_cc[ky * d.kw + kx] = acc;
                }
            }
        }
    }
}

void masked_conv2d_forward(std::span<const double> in, std::span<const double> kernel,
                           const MaskedDims& d,
                           const std::vector<std::pair<int, int>>& taps,
                           std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const int64_t plane = d.h * d.w;
    const int64_t c0 = d.k / 2;
    for (int64_t n = 0; n < d.batch; ++n) {
        const double* in_n = in.data() + n * d.in_ch * plane;
        double* out_n = out.data() + n * d.out_ch * plane;
        for (int64_t co = 0; co < d.out_ch; ++co) {
            double* out_c = out_n + co * plane;
            for (int64_t ci = 0; ci < d.in_ch; ++ci) {
                const double* in_c = in_n + ci * plane;
                const double* k_cc = kernel.data() + (co * d.in_ch + ci) * d.k * d.k;
                for (auto [ky, kx] : taps) {
                    const double w = k_cc[ky * d.k + kx];
                    const int64_t dy = ky - c0, dx = kx - c0;
                    const int64_t oy_lo = std::max<int64_t>(0, -dy);
                    const int64_t oy_hi = std::min(d.h, d.h - dy);
                    const int64_t ox_lo = std::max<int64_t>(0, -dx);
                    const int64_t ox_hi = std::min(d.w, d.w - dx);
                    for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
                        const double* in_row = in_c + (oy + dy) * d.w + dx;
                        double* out_row = out_c + oy * d.w;
                        for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                            out_row[ox] += w * in_row[ox];
                    }
                }
            }
        }
    }
}

void masked_conv2d_input_grad(std::span<const double> gout, std::span<const double> kernel,
                              const MaskedDims& d,
                              const std::vector<std::pair<int, int>>& taps,
                              std::span<double> gin) {
    std::fill(gin.begin(), gin.end(), 0.0);
    const int64_t plane = d.h * d.w;
    const int64_t c0 = d.k / 2;
    for (int64_t n = 0; n < d.batch; ++n) {
        const double* gout_n = gout.data() + n * d.out_ch * plane;
        double* gin_n = gin.data() + n * d.in_ch * plane;
        for (int64_t ci = 0; ci < d.in_ch; ++ci) {
            double* gin_c = gin_n + ci * plane;
            for (int64_t co = 0; co < d.out_ch; ++co) {
                const double* gout_c = gout_n + co * plane;
                const double* k_cc = kernel.data() + (co * d.in_ch + ci) * d.k * d.k;
                for (auto [ky, kx] : taps) {
                    const double w = k_cc[ky * d.k + kx];
                    const int64_t dy = ky - c0, dx = kx - c0;
                    const int64_t oy_lo = std::max<int64_t>(0, -dy);
                    const int64_t oy_hi = std::min(d.h, d.h - dy);
                    const int64_t ox_lo = std::max<int64_t>(0, -dx);
                    const int64_t ox_hi = std::min(d.w, d.w - dx);
                    for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
                        double* gin_row = gin_c + (oy + dy) * d.w + dx;
                        const double* gout_row = gout_c + oy * d.w;
                        for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                            gin_row[ox] += w * gout_row[ox];
                    }
                }
            }
        }
    }
}

void masked_conv2d_weight_grad(std::span<const double> in, std::span<const double> gout,
                               const MaskedDims& d,
                               const std::vector<std::pair<int, int>>& taps,
                               std::span<double> gk) {
    std::fill(gk.begin(), gk.end(), 0.0);
    const int64_t plane = d.h * d.w;
    const int64_t c0 = d.k / 2;
    for (int64_t co = 0; co < d.out_ch; ++co) {
        for (int64_t ci = 0; ci < d.in_ch; ++ci) {
            double* gk_cc = gk.data() + (co * d.in_ch + ci) * d.k * d.k;
            for (auto [ky, kx] : taps) {
                const int64_t dy = ky - c0, dx = kx - c0;
                const int64_t oy_lo = std::max<int64_t>(0, -dy);
                const int64_t oy_hi = std::min(d.h, d.h - dy);
                const int64_t ox_lo = std::max<int64_t>(0, -dx);
                const int64_t ox_hi = std::min(d.w, d.w - dx);
                double acc = 0.0;
                for (int64_t n = 0; n < d.batch; ++n) {
                    const double* in_c = in.data() + (n * d.in_ch + ci) * plane;
                    const double* gout_c = gout.data() + (n * d.out_ch + co) * plane;
                    for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
                        const double* in_row = in_c + (oy + dy) * d.w + dx;
                        const double* gout_row = gout_c + oy * d.w;
                        for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                            acc += gout_row[ox] * in_row[ox];
                    }
                }
                gk_cc[ky * d.k + kx] = acc;
            }
        }
    }
}

NLC_NOINLINE
void masked_conv_at(std::span<const double> grid, int64_t in_ch, int64_t h, int64_t w,
                    std::span<const double> kernel, std::span<const double> bias,
                    int64_t out_ch, int64_t kernel_extent,
                    const std::vector<std::pair<int, int>>& taps,
                    int64_t row, int64_t col, std::span<double> out) {
    const int64_t plane = h * w;
    const int64_t c0 = kernel_extent / 2;
    const int64_t kk = kernel_extent * kernel_extent;
    for (int64_t co = 0; co < out_ch; ++co) {
        double acc = bias[co];
        const double* k_c = kernel.data() + co * in_ch * kk;
        for (auto [ky, kx] : taps) {
            const int64_t iy = row + ky - c0;
            const int64_t ix = col + kx - c0;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            const double* cell = grid.data() + iy * w + ix;
            const int64_t k_off = ky * kernel_extent + kx;
            for (int64_t ci = 0; ci < in_ch; ++ci)
                acc += k_c[ci * kk + k_off] * cell[ci * plane];
        }
        out[co] = acc;
    }
}

NLC_NOINLINE
void matvec_bias(std::span<const double> w, std::span<const double> b,
                 std::span<const double> x, std::span<double> y) {
    const int64_t rows = static_cast<int64_t>(b.size());
    const int64_t cols = static_cast<int64_t>(x.size());
    for (int64_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace nlc
