#pragma once

#include "nlc/context.hpp"
#include "nlc/distributions.hpp"
#include "nlc/graph.hpp"
#include "nlc/kernels.hpp"
#include "nlc/tensor.hpp"

// Differentiable operations. Every op computes its value eagerly; if any
// operand is recorded on a graph, the result is recorded there too (mixing
// operands from two different graphs is an error, constants are fine).

namespace nlc {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor square(const Tensor& x);

Tensor sum(const Tensor& x);                           // -> scalar
Tensor mean_squared_error(const Tensor& a, const Tensor& b);  // -> scalar

Tensor leaky_relu(const Tensor& x, double slope);
Tensor softplus(const Tensor& x);

// 4-d channel concatenation / extraction, [c_begin, c_end).
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, int64_t c_begin, int64_t c_end);

// x: (N,C,H,W), bias: (C)
Tensor bias_add(const Tensor& x, const Tensor& bias);

// kernel: (out_ch, in_ch, kh, kw)
Tensor conv2d(const Tensor& x, const Tensor& kernel, int64_t stride, Padding pad);

// kernel: (in_ch, out_ch, kh, kw); output spatial extent = input * stride.
// Adjoint of the matching strided `same` convolution.
Tensor transposed_conv2d(const Tensor& x, const Tensor& kernel, int64_t stride);

// Causally masked convolution, stride 1, same padding. Masked kernel entries
// are never read and receive zero gradient.
Tensor masked_conv2d(const Tensor& x, const Tensor& kernel, ContextKind kind);

// Generalized divisive normalization across channels at each position:
//   d_c = beta_c + sum_k gamma_ck x_k^2
//   y_c = x_c * d_c^(-1/2)        (inverse: y_c = x_c * d_c^(1/2))
// beta: (C) strictly positive, gamma: (C,C) nonnegative, row c weights the
// squared activations feeding channel c.
Tensor gdn(const Tensor& x, const Tensor& beta, const Tensor& gamma, bool inverse);

// Probability a unit-width bin centered on v receives under the location /
// scale family, elementwise, clamped below at likelihood_floor (clamped
// elements get zero gradient). All three tensors share one shape.
Tensor relaxed_likelihood(const Tensor& v, const Tensor& mu, const Tensor& sigma,
                          DistributionKind kind);

// Total information content in bits: sum over elements of -log2(p).
Tensor rate_bits(const Tensor& p);

}  // namespace nlc
