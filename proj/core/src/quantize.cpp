#include "nlc/quantize.hpp"

#include <cmath>

#include "nlc/ops.hpp"

namespace nlc {

Tensor quantize_round(const Tensor& y) {
    const auto yv = y.values();
    std::vector<double> out(yv.size());
    for (size_t i = 0; i < out.size(); ++i) {
        double r = std::round(yv[i]);  // halfway cases away from zero
        if (r < -32768.0) r = -32768.0;
        if (r > 32767.0) r = 32767.0;
        out[i] = r;
    }
    return Tensor(y.shape(), std::move(out));
}

Tensor quantize_noise(const Tensor& y, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> noise(static_cast<size_t>(y.size()));
    for (double& v : noise) v = u(rng);
    return add(y, Tensor(y.shape(), std::move(noise)));
}

Tensor quantize(const Tensor& y, QuantizeMode mode, std::mt19937_64& rng) {
    return mode == QuantizeMode::round ? quantize_round(y) : quantize_noise(y, rng);
}

}  // namespace nlc
