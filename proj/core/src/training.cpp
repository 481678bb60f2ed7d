#include "nlc/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <ostream>

#include "nlc/errors.hpp"
#include "nlc/image.hpp"
#include "nlc/ops.hpp"
#include "nlc/quantize.hpp"

namespace nlc {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.emplace_back(p->value.size(), 0.0);
        v_.emplace_back(p->value.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        const auto x = p.value.values();
        std::vector<double> next(x.begin(), x.end());
        for (size_t j = 0; j < next.size(); ++j) {
            const double g = p.grad[j];
            m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
            v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
            next[j] -= cfg_.lr * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + cfg_.eps);
        }
        if (p.has_lower_bound())
            for (double& xv : next) xv = std::max(xv, p.lower_bound);
        p.assign(Tensor(p.value.shape(), std::move(next)));
    }
}

std::vector<std::pair<std::string, Tensor>> Adam::state() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(2 * params_.size() + 1);
    for (size_t i = 0; i < params_.size(); ++i) {
        out.emplace_back("opt.m." + params_[i]->name,
                         Tensor(params_[i]->value.shape(), m_[i]));
        out.emplace_back("opt.v." + params_[i]->name,
                         Tensor(params_[i]->value.shape(), v_[i]));
    }
    out.emplace_back("opt.t", Tensor({1}, {static_cast<double>(t_)}));
    return out;
}

void Adam::restore(const std::vector<std::pair<std::string, Tensor>>& state) {
    check_model(state.size() == 2 * params_.size() + 1,
                "optimizer state: record count mismatch");
    for (size_t i = 0; i < params_.size(); ++i) {
        const auto& [mn, mt] = state[2 * i];
        const auto& [vn, vt] = state[2 * i + 1];
        check_model(mn == "opt.m." + params_[i]->name &&
                        vn == "opt.v." + params_[i]->name,
                    "optimizer state: record name mismatch at " + params_[i]->name);
        check_model(mt.size() == params_[i]->value.size() &&
                        vt.size() == params_[i]->value.size(),
                    "optimizer state: moment size mismatch at " + params_[i]->name);
        m_[i].assign(mt.values().begin(), mt.values().end());
        v_[i].assign(vt.values().begin(), vt.values().end());
    }
    const auto& [tn, tt] = state.back();
    check_model(tn == "opt.t" && tt.size() == 1,
                "optimizer state: missing step record");
    t_ = static_cast<uint64_t>(tt.values()[0]);
}

LossParts rd_loss(Model& model, Graph& g, const Tensor& batch, double lambda,
                  std::mt19937_64& rng) {
    check_arg(lambda >= 0.0, "rd_loss: lambda must be nonnegative");
    check_arg(batch.shape().size() == 4 && batch.shape()[1] == 3,
              "rd_loss: batch must be (B,3,H,W)");
    const double pixels = static_cast<double>(batch.shape()[0]) *
                          batch.shape()[2] * batch.shape()[3];

    const Tensor y = model.analysis(batch, &g);
    const Tensor y_noisy = quantize_noise(y, rng);

    Tensor rate_latent, rate_hyper;
    if (!model.has_entropy_parameters()) {
        rate_latent = rate_bits(model.latent_density().likelihood(y_noisy));
    } else {
        Tensor psi, phi;
        if (model.has_hyper()) {
            const Tensor z = model.hyper_analysis(y, &g);
            const Tensor z_noisy = quantize_noise(z, rng);
            rate_hyper = rate_bits(model.hyper_density().likelihood(z_noisy));
            psi = model.hyper_synthesis(z_noisy, &g);
        }
        if (model.has_context()) phi = model.context(y_noisy, &g);
        const EntropyParams ep = model.entropy_parameters(psi, phi, &g);
        rate_latent = rate_bits(relaxed_likelihood(
            y_noisy, ep.mu, ep.sigma, model.config().distribution));
    }

    const Tensor xhat = model.synthesis(y_noisy, &g);
    const Tensor mse = mean_squared_error(xhat, batch);

    Tensor loss = add(mul_scalar(rate_latent, 1.0 / pixels),
                      mul_scalar(mse, lambda * distortion_scale));
    if (!rate_hyper.empty())
        loss = add(loss, mul_scalar(rate_hyper, 1.0 / pixels));

    LossParts parts;
    parts.loss = loss;
    parts.total = loss.values()[0];
    parts.bpp_latent = rate_latent.values()[0] / pixels;
    parts.bpp_hyper = rate_hyper.empty() ? 0.0 : rate_hyper.values()[0] / pixels;
    parts.mse = mse.values()[0];
    return parts;
}

std::vector<Tensor> load_image_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    check_data(fs::is_directory(dir), "corpus: not a directory: " + dir);
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".ppm" || ext == ".png") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<Tensor> images;
    for (const auto& p : paths) {
        try {
            images.push_back(load_image(p.string()));
        } catch (const DataError& e) {
            std::cerr << "corpus: skipping " << p.string() << ": " << e.what()
                      << "\n";
        }
    }
    check_data(!images.empty(), "corpus: no usable images in " + dir);
    return images;
}

Tensor sample_patch(const std::vector<Tensor>& corpus, int64_t patch,
                    std::mt19937_64& rng) {
    check_arg(patch >= 1, "sample_patch: patch size must be positive");
    std::vector<int64_t> eligible;
    for (size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].shape()[2] >= patch && corpus[i].shape()[3] >= patch)
            eligible.push_back(static_cast<int64_t>(i));
    check_data(!eligible.empty(),
               "sample_patch: no corpus image is at least patch-sized");
    const Tensor& img =
        corpus[eligible[std::uniform_int_distribution<size_t>(
            0, eligible.size() - 1)(rng)]];
    const int64_t h = img.shape()[2], w = img.shape()[3];
    const int64_t y0 = std::uniform_int_distribution<int64_t>(0, h - patch)(rng);
    const int64_t x0 = std::uniform_int_distribution<int64_t>(0, w - patch)(rng);
    std::vector<double> out(3 * patch * patch);
    const auto v = img.values();
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < patch; ++y) {
            const double* src = v.data() + (c * h + y0 + y) * w + x0;
            std::copy(src, src + patch, out.data() + (c * patch + y) * patch);
        }
    return Tensor({1, 3, patch, patch}, std::move(out));
}

Tensor sample_patch_batch(const std::vector<Tensor>& corpus, int64_t batch,
                          int64_t patch, std::mt19937_64& rng) {
    check_arg(batch >= 1, "sample_patch_batch: batch must be positive");
    std::vector<double> out(batch * 3 * patch * patch);
    for (int64_t b = 0; b < batch; ++b) {
        const Tensor p = sample_patch(corpus, patch, rng);
        std::copy(p.values().begin(), p.values().end(),
                  out.begin() + b * 3 * patch * patch);
    }
    return Tensor({batch, 3, patch, patch}, std::move(out));
}

TrainResult train(Model& model, const std::vector<Tensor>& corpus,
                  const TrainingConfig& cfg, std::ostream* log) {
    check_arg(cfg.lambda > 0.0, "train: lambda must be positive");
    check_arg(cfg.patch_size >= 64 && cfg.patch_size % 64 == 0,
              "train: patch size must be a positive multiple of 64");
    check_arg(cfg.steps >= 1, "train: steps must be positive");
    check_data(!corpus.empty(), "train: empty corpus");

    std::mt19937_64 rng(cfg.seed);
    Adam opt(model.parameters(), AdamConfig{.lr = cfg.lr});

    TrainResult res;
    res.history.reserve(cfg.steps);
    int consecutive_nan = 0;
    for (int64_t step = 1; step <= cfg.steps; ++step) {
        const Tensor batch =
            sample_patch_batch(corpus, cfg.batch_size, cfg.patch_size, rng);
        Graph g;
        const LossParts parts = rd_loss(model, g, batch, cfg.lambda, rng);
        const bool bad = !std::isfinite(parts.total) ||
                         !std::isfinite(parts.bpp_latent) ||
                         !std::isfinite(parts.bpp_hyper) || !std::isfinite(parts.mse);
        if (bad) {
            ++consecutive_nan;
            check_model(consecutive_nan < 3,
                        "train: loss diverged (3 consecutive non-finite steps)");
            for (Parameter* p : model.parameters()) p->zero_grad();
            std::cerr << "train: non-finite loss at step " << step
                      << ", update skipped\n";
            continue;
        }
        consecutive_nan = 0;
        g.backward(parts.loss);
        opt.step();
        for (Parameter* p : model.parameters()) p->zero_grad();

        res.history.push_back({step, parts.total, parts.bpp_latent,
                               parts.bpp_hyper, parts.mse});
        if (log)
            *log << "{\"step\":" << step << ",\"loss\":" << parts.total
                 << ",\"bpp_latent\":" << parts.bpp_latent
                 << ",\"bpp_hyper\":" << parts.bpp_hyper << ",\"mse\":" << parts.mse
                 << "}\n";
    }

    res.checkpoint = snapshot_model(model, static_cast<uint64_t>(cfg.steps), opt.state());
    res.checkpoint.lambda = cfg.lambda;
    return res;
}

}  // namespace nlc
