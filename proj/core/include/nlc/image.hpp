#pragma once

#include <string>

#include "nlc/tensor.hpp"

namespace nlc {

// Images are (1,3,H,W) tensors with values in [0,1].

// Binary PPM (P6, maxval 255).
Tensor load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Tensor& image);

// Dispatch on extension; only ".ppm" has a backend in this build.
Tensor load_image(const std::string& path);
void save_image(const std::string& path, const Tensor& image);

}  // namespace nlc
