#include "nlc/model.hpp"

#include <cmath>
#include <random>

#include "nlc/errors.hpp"
#include "nlc/ops.hpp"

namespace nlc {

std::string variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::fully_factorized: return "fully-factorized";
        case ModelVariant::scale_only: return "scale-only";
        case ModelVariant::mean_scale: return "mean-scale";
        case ModelVariant::context_only: return "context-only";
        case ModelVariant::combined: return "combined";
    }
    check_arg(false, "unknown model variant");
    return {};
}

ModelVariant variant_from_name(const std::string& name) {
    if (name == "fully-factorized") return ModelVariant::fully_factorized;
    if (name == "scale-only") return ModelVariant::scale_only;
    if (name == "mean-scale") return ModelVariant::mean_scale;
    if (name == "context-only") return ModelVariant::context_only;
    if (name == "combined") return ModelVariant::combined;
    check_arg(false, "unknown model variant: " + name);
    return ModelVariant::combined;
}

bool variant_has_hyper(ModelVariant v) {
    return v == ModelVariant::scale_only || v == ModelVariant::mean_scale ||
           v == ModelVariant::combined;
}

bool variant_has_context(ModelVariant v) {
    return v == ModelVariant::context_only || v == ModelVariant::combined;
}

namespace {

Tensor P(Parameter& p, Graph* g) { return g ? g->use(p) : p.value; }

// entropy-parameters hidden widths follow the 2M output in the same ratios
// as the reference stack (640 and 512 for M = 192)
int64_t ep_hidden1(int64_t m) { return (10 * m) / 3; }
int64_t ep_hidden2(int64_t m) { return (8 * m) / 3; }

int64_t ep_input_channels(const ModelConfig& cfg) {
    switch (cfg.variant) {
        case ModelVariant::combined: return 4 * cfg.m;
        case ModelVariant::scale_only:
        case ModelVariant::mean_scale:
        case ModelVariant::context_only: return 2 * cfg.m;
        case ModelVariant::fully_factorized: break;
    }
    check_arg(false, "variant has no entropy-parameters network");
    return 0;
}

Tensor init_kernel(std::mt19937_64& rng, Shape shape, int64_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<double> v(static_cast<size_t>(shape_size(shape)));
    for (double& x : v) x = u(rng);
    return Tensor(std::move(shape), std::move(v));
}

}  // namespace

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    check_arg(cfg.m >= 1 && cfg.n >= 1, "model: M and N must be >= 1");
    check_arg(cfg.scale_floor > 0.0, "model: scale floor must be positive");
    const int64_t m = cfg.m, n = cfg.n;
    std::mt19937_64 rng(cfg.seed);

    auto conv = [&](const std::string& name, int64_t out, int64_t in, int64_t k) {
        ConvLayer l;
        l.kernel = Parameter(name + ".kernel", init_kernel(rng, {out, in, k, k}, in * k * k));
        l.bias = Parameter(name + ".bias", Tensor::zeros({out}));
        return l;
    };
    auto deconv = [&](const std::string& name, int64_t in, int64_t out, int64_t k) {
        ConvLayer l;
        l.kernel = Parameter(name + ".kernel", init_kernel(rng, {in, out, k, k}, in * k * k));
        l.bias = Parameter(name + ".bias", Tensor::zeros({out}));
        return l;
    };
    auto gdn_layer = [&](const std::string& name, int64_t c) {
        GdnLayer l;
        l.beta_raw = Parameter(name + ".beta",
                               Tensor::full({c}, std::sqrt(1.0 + gdn_pedestal)));
        l.beta_raw.lower_bound = std::sqrt(gdn_beta_floor + gdn_pedestal);
        std::vector<double> g(static_cast<size_t>(c * c), std::sqrt(gdn_pedestal));
        for (int64_t i = 0; i < c; ++i)
            g[static_cast<size_t>(i * c + i)] = std::sqrt(0.1 + gdn_pedestal);
        l.gamma_raw = Parameter(name + ".gamma", Tensor({c, c}, std::move(g)));
        l.gamma_raw.lower_bound = std::sqrt(gdn_pedestal);
        return l;
    };

    a_conv_[0] = conv("analysis.0", n, 3, 5);
    a_gdn_[0] = gdn_layer("analysis.gdn0", n);
    a_conv_[1] = conv("analysis.1", n, n, 5);
    a_gdn_[1] = gdn_layer("analysis.gdn1", n);
    a_conv_[2] = conv("analysis.2", n, n, 5);
    a_gdn_[2] = gdn_layer("analysis.gdn2", n);
    a_conv_[3] = conv("analysis.3", m, n, 5);

    s_conv_[0] = deconv("synthesis.0", m, n, 5);
    s_gdn_[0] = gdn_layer("synthesis.gdn0", n);
    s_conv_[1] = deconv("synthesis.1", n, n, 5);
    s_gdn_[1] = gdn_layer("synthesis.gdn1", n);
    s_conv_[2] = deconv("synthesis.2", n, n, 5);
    s_gdn_[2] = gdn_layer("synthesis.gdn2", n);
    s_conv_[3] = deconv("synthesis.3", n, 3, 5);

    if (has_hyper()) {
        ha_conv_[0] = conv("hyper_analysis.0", n, m, 3);
        ha_conv_[1] = conv("hyper_analysis.1", n, n, 5);
        ha_conv_[2] = conv("hyper_analysis.2", n, n, 5);
        hs_conv_[0] = deconv("hyper_synthesis.0", n, n, 5);
        hs_conv_[1] = deconv("hyper_synthesis.1", n, (3 * n) / 2, 5);
        hs_conv_[2] = deconv("hyper_synthesis.2", (3 * n) / 2, 2 * m, 3);
    }
    if (has_context()) {
        const int64_t k = context_kernel_extent(cfg.context);
        const auto taps = context_taps(cfg.context);
        const auto mask = context_mask(cfg.context);
        Tensor kt = init_kernel(rng, {2 * m, m, k, k},
                                m * static_cast<int64_t>(taps.size()));
        std::vector<double> kv(kt.values().begin(), kt.values().end());
        for (int64_t cc = 0; cc < 2 * m * m; ++cc)
            for (int64_t i = 0; i < k * k; ++i)
                if (!mask[static_cast<size_t>(i)]) kv[static_cast<size_t>(cc * k * k + i)] = 0.0;
        ctx_.kernel = Parameter("context.kernel", Tensor({2 * m, m, k, k}, std::move(kv)));
        ctx_.bias = Parameter("context.bias", Tensor::zeros({2 * m}));
    }
    if (has_entropy_parameters()) {
        const int64_t in = ep_input_channels(cfg);
        ep_conv_[0] = conv("ep.0", ep_hidden1(m), in, 1);
        ep_conv_[1] = conv("ep.1", ep_hidden2(m), ep_hidden1(m), 1);
        ep_conv_[2] = conv("ep.2", 2 * m, ep_hidden2(m), 1);
    }
    if (has_hyper())
        hyper_density_.emplace("hyper_density", n, rng());
    if (cfg.variant == ModelVariant::fully_factorized)
        latent_density_.emplace("latent_density", m, rng());
}

Tensor Model::gdn_apply(const Tensor& h, GdnLayer& layer, bool inverse, Graph* g) {
    Tensor beta = add_scalar(square(P(layer.beta_raw, g)), -gdn_pedestal);
    Tensor gamma = add_scalar(square(P(layer.gamma_raw, g)), -gdn_pedestal);
    return gdn(h, beta, gamma, inverse);
}

Tensor Model::analysis(const Tensor& x, Graph* g) {
    check_arg(x.shape().size() == 4 && x.shape()[1] == 3,
              "analysis: input must be (N,3,H,W)");
    check_arg(x.shape()[2] % 16 == 0 && x.shape()[3] % 16 == 0,
              "analysis: spatial extents must be divisible by 16");
    Tensor h = x;
    for (int i = 0; i < 4; ++i) {
        h = conv2d(h, P(a_conv_[i].kernel, g), 2, Padding::same);
        h = bias_add(h, P(a_conv_[i].bias, g));
        if (i < 3) h = gdn_apply(h, a_gdn_[i], false, g);
    }
    return h;
}

Tensor Model::synthesis(const Tensor& yhat, Graph* g) {
    check_arg(yhat.shape().size() == 4 && yhat.shape()[1] == cfg_.m,
              "synthesis: input must have M channels");
    Tensor h = yhat;
    for (int i = 0; i < 4; ++i) {
        h = transposed_conv2d(h, P(s_conv_[i].kernel, g), 2);
        h = bias_add(h, P(s_conv_[i].bias, g));
        if (i < 3) h = gdn_apply(h, s_gdn_[i], true, g);
    }
    return h;
}

Tensor Model::hyper_analysis(const Tensor& y, Graph* g) {
    check_arg(has_hyper(), "variant has no hyper networks");
    check_arg(y.shape().size() == 4 && y.shape()[1] == cfg_.m,
              "hyper_analysis: input must have M channels");
    check_arg(y.shape()[2] % 4 == 0 && y.shape()[3] % 4 == 0,
              "hyper_analysis: latent extents must be divisible by 4");
    Tensor h = conv2d(y, P(ha_conv_[0].kernel, g), 1, Padding::same);
    h = bias_add(h, P(ha_conv_[0].bias, g));
    h = leaky_relu(h, leaky_slope);
    h = conv2d(h, P(ha_conv_[1].kernel, g), 2, Padding::same);
    h = bias_add(h, P(ha_conv_[1].bias, g));
    h = leaky_relu(h, leaky_slope);
    h = conv2d(h, P(ha_conv_[2].kernel, g), 2, Padding::same);
    h = bias_add(h, P(ha_conv_[2].bias, g));
    return h;
}

Tensor Model::hyper_synthesis(const Tensor& zhat, Graph* g) {
    check_arg(has_hyper(), "variant has no hyper networks");
    check_arg(zhat.shape().size() == 4 && zhat.shape()[1] == cfg_.n,
              "hyper_synthesis: input must have N channels");
    Tensor h = transposed_conv2d(zhat, P(hs_conv_[0].kernel, g), 2);
    h = bias_add(h, P(hs_conv_[0].bias, g));
    h = leaky_relu(h, leaky_slope);
    h = transposed_conv2d(h, P(hs_conv_[1].kernel, g), 2);
    h = bias_add(h, P(hs_conv_[1].bias, g));
    h = leaky_relu(h, leaky_slope);
    h = transposed_conv2d(h, P(hs_conv_[2].kernel, g), 1);
    h = bias_add(h, P(hs_conv_[2].bias, g));
    return h;
}

Tensor Model::context(const Tensor& yhat, Graph* g) {
    check_arg(has_context(), "variant has no context network");
    Tensor h = masked_conv2d(yhat, P(ctx_.kernel, g), cfg_.context);
    return bias_add(h, P(ctx_.bias, g));
}

EntropyParams Model::entropy_parameters(const Tensor& psi, const Tensor& phi, Graph* g) {
    check_arg(has_entropy_parameters(), "variant has no entropy-parameters network");
    Tensor in;
    switch (cfg_.variant) {
        case ModelVariant::combined:
            check_arg(!psi.empty() && !phi.empty(),
                      "entropy_parameters: combined variant needs psi and phi");
            in = concat_channels(psi, phi);
            break;
        case ModelVariant::context_only:
            check_arg(!phi.empty(), "entropy_parameters: context-only variant needs phi");
            in = phi;
            break;
        case ModelVariant::scale_only:
        case ModelVariant::mean_scale:
            check_arg(!psi.empty(), "entropy_parameters: hyper variants need psi");
            in = psi;
            break;
        case ModelVariant::fully_factorized:
            check_arg(false, "unreachable");
    }
    check_arg(in.shape()[1] == ep_input_channels(cfg_),
              "entropy_parameters: input channel mismatch");
    Tensor h = conv2d(in, P(ep_conv_[0].kernel, g), 1, Padding::same);
    h = bias_add(h, P(ep_conv_[0].bias, g));
    h = leaky_relu(h, leaky_slope);
    h = conv2d(h, P(ep_conv_[1].kernel, g), 1, Padding::same);
    h = bias_add(h, P(ep_conv_[1].bias, g));
    h = leaky_relu(h, leaky_slope);
    h = conv2d(h, P(ep_conv_[2].kernel, g), 1, Padding::same);
    h = bias_add(h, P(ep_conv_[2].bias, g));

    EntropyParams out;
    Tensor mu_raw = slice_channels(h, 0, cfg_.m);
    Tensor sigma_raw = slice_channels(h, cfg_.m, 2 * cfg_.m);
    out.sigma = add_scalar(softplus(sigma_raw), cfg_.scale_floor);
    out.mu = cfg_.variant == ModelVariant::scale_only ? Tensor::zeros(mu_raw.shape())
                                                      : mu_raw;
    out.psi = psi;
    out.phi = phi;
    return out;
}

FactorizedDensity& Model::hyper_density() {
    check_arg(hyper_density_.has_value(), "variant has no hyper density");
    return *hyper_density_;
}

FactorizedDensity& Model::latent_density() {
    check_arg(latent_density_.has_value(), "variant has no latent density");
    return *latent_density_;
}

PositionEval Model::position_eval() const {
    check_arg(has_entropy_parameters(), "variant has no entropy-parameters network");
    PositionEval pe;
    pe.m = cfg_.m;
    pe.scale_floor = cfg_.scale_floor;
    pe.distribution = cfg_.distribution;
    pe.use_psi = has_hyper();
    pe.use_ctx = variant_has_context(cfg_.variant);
    pe.mu_zero = cfg_.variant == ModelVariant::scale_only;
    if (pe.use_ctx) {
        pe.ctx_kernel = ctx_.kernel.value.values();
        pe.ctx_bias = ctx_.bias.value.values();
        pe.ctx_extent = context_kernel_extent(cfg_.context);
        pe.ctx_taps = context_taps(cfg_.context);
    }
    pe.w1 = ep_conv_[0].kernel.value.values();
    pe.b1 = ep_conv_[0].bias.value.values();
    pe.w2 = ep_conv_[1].kernel.value.values();
    pe.b2 = ep_conv_[1].bias.value.values();
    pe.w3 = ep_conv_[2].kernel.value.values();
    pe.b3 = ep_conv_[2].bias.value.values();
    pe.ep_in = ep_input_channels(cfg_);
    pe.h1 = ep_hidden1(cfg_.m);
    pe.h2 = ep_hidden2(cfg_.m);
    return pe;
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    auto add_conv = [&](ConvLayer& l) {
        out.push_back(&l.kernel);
        out.push_back(&l.bias);
    };
    auto add_gdn = [&](GdnLayer& l) {
        out.push_back(&l.beta_raw);
        out.push_back(&l.gamma_raw);
    };
    for (int i = 0; i < 4; ++i) {
        add_conv(a_conv_[i]);
        if (i < 3) add_gdn(a_gdn_[i]);
    }
    for (int i = 0; i < 4; ++i) {
        add_conv(s_conv_[i]);
        if (i < 3) add_gdn(s_gdn_[i]);
    }
    if (has_hyper()) {
        for (int i = 0; i < 3; ++i) add_conv(ha_conv_[i]);
        for (int i = 0; i < 3; ++i) add_conv(hs_conv_[i]);
    }
    if (has_context()) add_conv(ctx_);
    if (has_entropy_parameters())
        for (int i = 0; i < 3; ++i) add_conv(ep_conv_[i]);
    if (hyper_density_)
        for (Parameter* p : hyper_density_->parameters()) out.push_back(p);
    if (latent_density_)
        for (Parameter* p : latent_density_->parameters()) out.push_back(p);
    return out;
}

}  // namespace nlc
