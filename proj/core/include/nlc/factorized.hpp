#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlc/tensor.hpp"

namespace nlc {

// Learned univariate density, one independent model per channel. The
// cumulative is a small monotone network
//   c(x) = sigmoid(t_K),  t_k = H_k u_{k-1} + b_k,  u_k = t_k + a_k (*) tanh(t_k)
// with H_k = softplus(H_k raw) elementwise positive and a_k = tanh(a_k raw)
// in (-1, 1), which keeps c strictly increasing for any parameter values.
// Biases start at zero, so the initial density is symmetric: c(0) = 1/2 and
// unit-bin masses are even in the bin center.
class FactorizedDensity {
public:
    static constexpr int stages = 4;
    static constexpr int hidden_width = 3;

    // Parameter names get `prefix` + ".h0".. / ".b0".. / ".a0"..; the seed
    // jitters the positive-weight initialization so hidden units separate.
    FactorizedDensity(std::string prefix, int64_t channels, uint64_t seed);

    int64_t channels() const { return channels_; }

    // Mass of the unit bin centered on each element: c(v+1/2) - c(v-1/2),
    // clamped below at likelihood_floor (clamped elements get zero gradient).
    // v is (N,C,H,W) with C == channels(); differentiable in v and in the
    // density parameters when v is recorded on a graph.
    Tensor likelihood(const Tensor& v);

    // Cumulative for one channel; the eager path shared by the encoder's and
    // decoder's table builders.
    double cdf(int64_t channel, double x) const;

    std::vector<Parameter*> parameters();

private:
    int64_t channels_ = 0;
    // layer widths 1 -> 3 -> 3 -> 3 -> 1
    Parameter h_raw_[stages];      // (C, r_k, r_{k-1})
    Parameter b_[stages];          // (C, r_k)
    Parameter a_raw_[stages - 1];  // (C, r_k)
};

}  // namespace nlc
