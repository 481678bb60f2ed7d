#pragma once

#include <random>

#include "nlc/tensor.hpp"

namespace nlc {

enum class QuantizeMode { round, noise };

// Nearest-integer quantization, ties away from zero, clamped to the 16-bit
// signed range the bitstream can represent. The result carries no gradient.
Tensor quantize_round(const Tensor& y);

// Training relaxation: adds fresh U(-1/2, 1/2) noise per element. Gradients
// pass through unchanged.
Tensor quantize_noise(const Tensor& y, std::mt19937_64& rng);

Tensor quantize(const Tensor& y, QuantizeMode mode, std::mt19937_64& rng);

}  // namespace nlc
