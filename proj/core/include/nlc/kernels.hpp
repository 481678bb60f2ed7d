#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nlc/tensor.hpp"

// The per-position evaluators below must produce bit-identical results when
// called from the encoder (full grid available) and the decoder (partial
// grid); keeping them out of line pins one code path for both callers.
#if defined(__GNUC__) || defined(__clang__)
#define NLC_NOINLINE __attribute__((noinline))
#else
#define NLC_NOINLINE
#endif

namespace nlc {

enum class Padding { same, valid };

// Resolved geometry of one convolution. `same` uses zero padding with
// out = ceil(in / stride) and the excess split low/high (begin gets the
// smaller half), `valid` uses no padding.
struct ConvDims {
    int64_t batch = 0;
    int64_t in_ch = 0, in_h = 0, in_w = 0;
    int64_t out_ch = 0, kh = 0, kw = 0;
    int64_t stride = 1;
    int64_t out_h = 0, out_w = 0;
    int64_t pad_top = 0, pad_left = 0;
};

// kernel shape is (out_ch, in_ch, kh, kw)
ConvDims conv_dims(const Shape& input, const Shape& kernel, int64_t stride, Padding pad);

void conv2d_forward(std::span<const double> in, std::span<const double> k,
                    const ConvDims& d, std::span<double> out);
// Adjoint w.r.t. the input; also the forward pass of the upsampling
// (transposed) convolution.
void conv2d_input_grad(std::span<const double> gout, std::span<const double> k,
                       const ConvDims& d, std::span<double> gin);
void conv2d_weight_grad(std::span<const double> in, std::span<const double> gout,
                        const ConvDims& d, std::span<double> gk);

// Spatially masked convolution over causal context. Taps are (ky, kx) kernel
// offsets in raster order; stride 1, same padding, odd kernels only.
struct MaskedDims {
    int64_t batch = 0;
    int64_t in_ch = 0, h = 0, w = 0;
    int64_t out_ch = 0, k = 0;  // kernel extent (odd)
};

void masked_conv2d_forward(std::span<const double> in, std::span<const double> kernel,
                           const MaskedDims& d,
                           const std::vector<std::pair<int, int>>& taps,
                           std::span<double> out);
void masked_conv2d_input_grad(std::span<const double> gout, std::span<const double> kernel,
                              const MaskedDims& d,
                              const std::vector<std::pair<int, int>>& taps,
                              std::span<double> gin);
void masked_conv2d_weight_grad(std::span<const double> in, std::span<const double> gout,
                               const MaskedDims& d,
                               const std::vector<std::pair<int, int>>& taps,
                               std::span<double> gk);

// Context features for a single spatial position of a (C,H,W) grid, reading
// only the visible taps. Used by both the encoder and the serial decoder so
// the two sides execute identical arithmetic.
NLC_NOINLINE
void masked_conv_at(std::span<const double> grid, int64_t in_ch, int64_t h, int64_t w,
                    std::span<const double> kernel, std::span<const double> bias,
                    int64_t out_ch, int64_t kernel_extent,
                    const std::vector<std::pair<int, int>>& taps,
                    int64_t row, int64_t col, std::span<double> out);

// y = W x + b for the 1x1 convolution chains, one spatial position at a time.
NLC_NOINLINE
void matvec_bias(std::span<const double> w, std::span<const double> b,
                 std::span<const double> x, std::span<double> y);

}  // namespace nlc
