#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlc/context.hpp"
#include "nlc/distributions.hpp"
#include "nlc/factorized.hpp"
#include "nlc/graph.hpp"
#include "nlc/tensor.hpp"

namespace nlc {

enum class ModelVariant : uint8_t {
    fully_factorized = 0,  // latents coded by a learned fixed prior
    scale_only = 1,        // hyperprior predicts sigma, mu = 0
    mean_scale = 2,        // hyperprior predicts mu and sigma
    context_only = 3,      // autoregressive context only
    combined = 4,          // hyperprior + autoregressive context
};

std::string variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);

bool variant_has_hyper(ModelVariant v);
bool variant_has_context(ModelVariant v);

struct ModelConfig {
    ModelVariant variant = ModelVariant::combined;
    int64_t m = 32;  // latent (bottleneck) channels
    int64_t n = 32;  // transform channels
    ContextKind context = ContextKind::k5;
    DistributionKind distribution = DistributionKind::gaussian;
    double scale_floor = 0.11;
    uint64_t seed = 1;

    bool operator==(const ModelConfig&) const = default;
};

// Conditional coding distribution for one latent grid.
struct EntropyParams {
    Tensor mu;     // (N,M,h,w)
    Tensor sigma;  // (N,M,h,w), >= scale_floor everywhere
    Tensor psi;    // hyper features the params came from (empty if unused)
    Tensor phi;    // context features (empty if unused)
};

// Everything the codec needs to evaluate (mu, sigma) at a single spatial
// position. Spans alias the model's parameter storage.
struct PositionEval {
    int64_t m = 0;
    double scale_floor = 0.0;
    DistributionKind distribution = DistributionKind::gaussian;
    bool use_psi = false;
    bool use_ctx = false;
    bool mu_zero = false;  // scale-only wiring
    // masked context convolution
    std::span<const double> ctx_kernel, ctx_bias;
    int64_t ctx_extent = 0;
    std::vector<std::pair<int, int>> ctx_taps;
    // 1x1 chain: in -> h1 -> h2 -> 2m with leaky relu between
    std::span<const double> w1, b1, w2, b2, w3, b3;
    int64_t ep_in = 0, h1 = 0, h2 = 0;
};

// One trainable codec model. Forward methods run eagerly when `g` is null and
// record onto `g` otherwise; parameter tensors are registered on the graph so
// gradients land in Parameter::grad after backward().
class Model {
public:
    static constexpr double leaky_slope = 0.2;
    // squared-offset reparameterization of the nonnegative gdn weights
    static constexpr double gdn_pedestal = 1.0 / (1 << 18);
    static constexpr double gdn_beta_floor = 1e-6;

    explicit Model(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    bool has_hyper() const { return variant_has_hyper(cfg_.variant); }
    bool has_context() const { return variant_has_context(cfg_.variant); }
    bool has_entropy_parameters() const {
        return cfg_.variant != ModelVariant::fully_factorized;
    }

    // x (N,3,H,W), H and W divisible by 16 -> y (N,M,H/16,W/16)
    Tensor analysis(const Tensor& x, Graph* g = nullptr);
    // yhat (N,M,h,w) -> xhat (N,3,16h,16w)
    Tensor synthesis(const Tensor& yhat, Graph* g = nullptr);
    // y (N,M,h,w) -> z (N,Nch,h/4,w/4)
    Tensor hyper_analysis(const Tensor& y, Graph* g = nullptr);
    // zhat (N,Nch,hz,wz) -> psi (N,2M,4hz,4wz)
    Tensor hyper_synthesis(const Tensor& zhat, Graph* g = nullptr);
    // yhat with future positions zeroed -> phi (N,2M,h,w)
    Tensor context(const Tensor& yhat, Graph* g = nullptr);
    // psi and/or phi per the variant wiring; pass empty tensors for unused legs
    EntropyParams entropy_parameters(const Tensor& psi, const Tensor& phi,
                                     Graph* g = nullptr);

    // density over hyper-latent channels (hyper variants only)
    FactorizedDensity& hyper_density();
    // density over latent channels (fully-factorized variant only)
    FactorizedDensity& latent_density();

    PositionEval position_eval() const;

    // stable enumeration order; checkpoint and optimizer contract
    std::vector<Parameter*> parameters();

private:
    struct ConvLayer {
        Parameter kernel, bias;
    };
    struct GdnLayer {
        Parameter beta_raw, gamma_raw;
    };

    Tensor gdn_apply(const Tensor& h, GdnLayer& layer, bool inverse, Graph* g);

    ModelConfig cfg_;
    ConvLayer a_conv_[4];
    GdnLayer a_gdn_[3];
    ConvLayer s_conv_[4];
    GdnLayer s_gdn_[3];
    ConvLayer ha_conv_[3];
    ConvLayer hs_conv_[3];
    ConvLayer ctx_;
    ConvLayer ep_conv_[3];
    std::optional<FactorizedDensity> hyper_density_;
    std::optional<FactorizedDensity> latent_density_;
};

}  // namespace nlc
