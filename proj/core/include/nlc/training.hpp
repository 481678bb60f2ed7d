#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nlc/checkpoint.hpp"
#include "nlc/model.hpp"
#include "nlc/tensor.hpp"

namespace nlc {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive-moment optimizer. After each update, parameters that carry a lower
// bound are projected back onto it.
class Adam {
public:
    explicit Adam(std::vector<Parameter*> params, AdamConfig cfg = {});

    void step();  // applies grads; caller zeroes them afterwards
    uint64_t applied_steps() const { return t_; }

    // Moment tensors for checkpointing, one "opt.m."/"opt.v." pair per
    // parameter in order, plus a trailing "opt.t" scalar.
    std::vector<std::pair<std::string, Tensor>> state() const;
    void restore(const std::vector<std::pair<std::string, Tensor>>& state);

private:
    std::vector<Parameter*> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    uint64_t t_ = 0;
};

struct TrainingConfig {
    double lambda = 0.01;
    double lr = 1e-4;
    int64_t batch_size = 2;
    int64_t patch_size = 64;  // must be divisible by 64
    int64_t steps = 2000;
    uint64_t seed = 1;
};

struct LossParts {
    Tensor loss;  // scalar node on the graph, ready for backward()
    double total = 0.0;
    double bpp_latent = 0.0;
    double bpp_hyper = 0.0;
    double mse = 0.0;
};

// distortion weight keeping lambda magnitudes on the 8-bit scale
inline constexpr double distortion_scale = 255.0 * 255.0;

// R + lambda*D on noise-relaxed latents; the same noisy tensors feed both
// rate terms and the synthesis input.
LossParts rd_loss(Model& model, Graph& g, const Tensor& batch, double lambda,
                  std::mt19937_64& rng);

std::vector<Tensor> load_image_corpus(const std::string& dir);

// uniform random patch crop; requires at least one image >= patch in both dims
Tensor sample_patch(const std::vector<Tensor>& corpus, int64_t patch,
                    std::mt19937_64& rng);
Tensor sample_patch_batch(const std::vector<Tensor>& corpus, int64_t batch,
                          int64_t patch, std::mt19937_64& rng);

struct StepStats {
    int64_t step = 0;
    double loss = 0.0;
    double bpp_latent = 0.0;
    double bpp_hyper = 0.0;
    double mse = 0.0;
};

struct TrainResult {
    std::vector<StepStats> history;  // one entry per completed step
    Checkpoint checkpoint;
};

// Runs the optimization loop. A non-null `log` receives one JSON line per
// step. A NaN loss skips the update; three consecutive NaN steps abort.
TrainResult train(Model& model, const std::vector<Tensor>& corpus,
                  const TrainingConfig& cfg, std::ostream* log = nullptr);

}  // namespace nlc
