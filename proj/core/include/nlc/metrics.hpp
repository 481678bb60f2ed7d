#pragma once

#include "nlc/tensor.hpp"

namespace nlc {

// 10*log10(1/MSE) on [0,1] pixels, identical images capped at 100 dB
double psnr(const Tensor& a, const Tensor& b);

// Multiscale structural similarity, per RGB channel and averaged. Standard
// 5-scale weights; images smaller than 176x176 use fewer scales with the
// remaining weights renormalized. Requires at least 11x11 pixels.
double ms_ssim(const Tensor& a, const Tensor& b);

// -10*log10(1 - score), capped at 100 dB
double ms_ssim_db(double score);

}  // namespace nlc
