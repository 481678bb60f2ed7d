#include "nlc/factorized.hpp"

#include <cmath>
#include <random>

#include "nlc/distributions.hpp"
#include "nlc/errors.hpp"
#include "nlc/graph.hpp"

namespace nlc {

namespace {

// layer widths 1 -> 3 -> 3 -> 3 -> 1
constexpr int widths[FactorizedDensity::stages + 1] = {1, 3, 3, 3, 1};

double stable_softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double stable_sigmoid(double t) {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

struct ChannelView {
    const double* h[FactorizedDensity::stages];
    const double* b[FactorizedDensity::stages];
    const double* a[FactorizedDensity::stages - 1];
};

struct EvalCache {
    double t[FactorizedDensity::stages][3];
    double u[FactorizedDensity::stages - 1][3];  // activation outputs feeding layer k+1
};

// c(x) for one channel; fills `cache` when non-null.
double eval_cdf(const ChannelView& p, double x, EvalCache* cache) {
    double u[3] = {x, 0.0, 0.0};
    int in = 1;
    double t[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < FactorizedDensity::stages; ++k) {
        const int out = widths[k + 1];
        for (int i = 0; i < out; ++i) {
            double acc = p.b[k][i];
            for (int j = 0; j < in; ++j) acc += stable_softplus(p.h[k][i * in + j]) * u[j];
            t[i] = acc;
        }
        if (cache)
            for (int i = 0; i < out; ++i) cache->t[k][i] = t[i];
        if (k + 1 < FactorizedDensity::stages) {
            for (int i = 0; i < out; ++i) {
                const double th = std::tanh(t[i]);
                u[i] = t[i] + std::tanh(p.a[k][i]) * th;
            }
            if (cache)
                for (int i = 0; i < out; ++i) cache->u[k][i] = u[i];
            in = out;
        }
    }
    return stable_sigmoid(t[0]);
}

struct GradView {
    double* h[FactorizedDensity::stages];
    double* b[FactorizedDensity::stages];
    double* a[FactorizedDensity::stages - 1];
};

// Reverse sweep through one cdf evaluation; the output gradient is `w`.
// Accumulates parameter gradients (when the matching slot is live) and
// returns w * dc/dx.
double backprop_cdf(const ChannelView& p, double x, const EvalCache& cache, double w,
                    const GradView& g) {
    double dt[3];
    {
        const double s = stable_sigmoid(cache.t[FactorizedDensity::stages - 1][0]);
        dt[0] = w * s * (1.0 - s);
    }
    for (int k = FactorizedDensity::stages - 1; k >= 0; --k) {
        const int out = widths[k + 1];
        const int in = widths[k];
        double uin[3];
        if (k == 0)
            uin[0] = x;
        else
            for (int j = 0; j < in; ++j) uin[j] = cache.u[k - 1][j];
        if (g.b[k])
            for (int i = 0; i < out; ++i) g.b[k][i] += dt[i];
        if (g.h[k])
            for (int i = 0; i < out; ++i)
                for (int j = 0; j < in; ++j)
                    g.h[k][i * in + j] +=
                        dt[i] * uin[j] * stable_sigmoid(p.h[k][i * in + j]);
        double du[3] = {0.0, 0.0, 0.0};
        for (int i = 0; i < out; ++i) {
            const double dti = dt[i];
            for (int j = 0; j < in; ++j)
                du[j] += dti * stable_softplus(p.h[k][i * in + j]);
        }
        if (k == 0) return du[0];
        for (int i = 0; i < in; ++i) {
            const double th = std::tanh(cache.t[k - 1][i]);
            const double am = std::tanh(p.a[k - 1][i]);
            if (g.a[k - 1]) g.a[k - 1][i] += du[i] * th * (1.0 - am * am);
            dt[i] = du[i] * (1.0 + am * (1.0 - th * th));
        }
    }
    return 0.0;  // unreachable
}

}  // namespace

FactorizedDensity::FactorizedDensity(std::string prefix, int64_t channels, uint64_t seed)
    : channels_(channels) {
    check_arg(channels >= 1, "factorized density needs at least one channel");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    const double scale = std::pow(10.0, 0.25);
    for (int k = 0; k < stages; ++k) {
        const int out = widths[k + 1];
        const int in = widths[k];
        const double base = std::log(std::expm1(1.0 / (scale * out)));
        std::vector<double> h(static_cast<size_t>(channels * out * in));
        for (double& v : h) v = base + jitter(rng);
        h_raw_[k] = Parameter(prefix + ".h" + std::to_string(k),
                              Tensor(Shape{channels, out, in}, std::move(h)));
        b_[k] = Parameter(prefix + ".b" + std::to_string(k),
                          Tensor::zeros(Shape{channels, out}));
        if (k + 1 < stages)
            a_raw_[k] = Parameter(prefix + ".a" + std::to_string(k),
                                  Tensor::zeros(Shape{channels, out}));
    }
}

namespace {

ChannelView make_view(const std::span<const double>* hv, const std::span<const double>* bv,
                      const std::span<const double>* av, int64_t ch) {
    ChannelView p;
    for (int k = 0; k < FactorizedDensity::stages; ++k) {
        const int out = widths[k + 1];
        const int in = widths[k];
        p.h[k] = hv[k].data() + ch * out * in;
        p.b[k] = bv[k].data() + ch * out;
        if (k + 1 < FactorizedDensity::stages) p.a[k] = av[k].data() + ch * out;
    }
    return p;
}

}  // namespace

double FactorizedDensity::cdf(int64_t channel, double x) const {
    check_arg(channel >= 0 && channel < channels_, "factorized density: channel out of range");
    std::span<const double> hv[stages], bv[stages], av[stages - 1];
    for (int k = 0; k < stages; ++k) {
        hv[k] = h_raw_[k].value.values();
        bv[k] = b_[k].value.values();
        if (k + 1 < stages) av[k] = a_raw_[k].value.values();
    }
    return eval_cdf(make_view(hv, bv, av, channel), x, nullptr);
}

Tensor FactorizedDensity::likelihood(const Tensor& v) {
    check_arg(v.shape().size() == 4 && v.shape()[1] == channels_,
              "factorized density: value tensor must be 4-d with " +
                  std::to_string(channels_) + " channels");
    const auto vv = v.values();
    const int64_t plane = v.shape()[2] * v.shape()[3];
    const int64_t c = channels_;

    std::span<const double> hv[stages], bv[stages], av[stages - 1];
    for (int k = 0; k < stages; ++k) {
        hv[k] = h_raw_[k].value.values();
        bv[k] = b_[k].value.values();
        if (k + 1 < stages) av[k] = a_raw_[k].value.values();
    }
    std::vector<double> out(vv.size());
    for (size_t i = 0; i < vv.size(); ++i) {
        const int64_t ch = (static_cast<int64_t>(i) / plane) % c;
        const ChannelView p = make_view(hv, bv, av, ch);
        const double mass =
            eval_cdf(p, vv[i] + 0.5, nullptr) - eval_cdf(p, vv[i] - 0.5, nullptr);
        out[i] = mass < likelihood_floor ? likelihood_floor : mass;
    }

    Graph* g = v.recorded() ? v.graph() : nullptr;
    if (!g) return Tensor(v.shape(), std::move(out));

    // slot order: v, h0..h3, b0..b3, a0..a2
    std::vector<const Tensor*> inputs;
    std::vector<Tensor> param_handles;
    param_handles.reserve(3 * stages - 1);
    inputs.push_back(&v);
    for (int k = 0; k < stages; ++k) param_handles.push_back(g->use(h_raw_[k]));
    for (int k = 0; k < stages; ++k) param_handles.push_back(g->use(b_[k]));
    for (int k = 0; k + 1 < stages; ++k) param_handles.push_back(g->use(a_raw_[k]));
    for (const Tensor& t : param_handles) inputs.push_back(&t);

    // freeze the parameter values the forward pass used
    std::vector<Tensor> frozen(param_handles.begin(), param_handles.end());
    Tensor v_copy = v;
    return g->record(
        v.shape(), std::move(out), inputs,
        [v_copy, frozen, plane, c](std::span<const double> go, GradSink& s) {
            std::span<const double> hv2[stages], bv2[stages], av2[stages - 1];
            for (int k = 0; k < stages; ++k) {
                hv2[k] = frozen[static_cast<size_t>(k)].values();
                bv2[k] = frozen[static_cast<size_t>(stages + k)].values();
                if (k + 1 < stages)
                    av2[k] = frozen[static_cast<size_t>(2 * stages + k)].values();
            }
            auto gv = s.slot(0);
            std::span<double> gh[stages], gb[stages], ga[stages - 1];
            for (int k = 0; k < stages; ++k) {
                gh[k] = s.slot(1 + k);
                gb[k] = s.slot(1 + stages + k);
                if (k + 1 < stages) ga[k] = s.slot(1 + 2 * stages + k);
            }
            const auto vv2 = v_copy.values();
            for (size_t i = 0; i < vv2.size(); ++i) {
                if (go[i] == 0.0) continue;
                const int64_t ch = (static_cast<int64_t>(i) / plane) % c;
                const ChannelView p = make_view(hv2, bv2, av2, ch);
                EvalCache hi_cache, lo_cache;
                const double hi = eval_cdf(p, vv2[i] + 0.5, &hi_cache);
                const double lo = eval_cdf(p, vv2[i] - 0.5, &lo_cache);
                if (hi - lo < likelihood_floor) continue;  // clamped: no gradient
                GradView gch;
                for (int k = 0; k < stages; ++k) {
                    const int out_w = widths[k + 1];
                    const int in_w = widths[k];
                    gch.h[k] = gh[k].empty() ? nullptr
                                             : gh[k].data() + ch * out_w * in_w;
                    gch.b[k] = gb[k].empty() ? nullptr : gb[k].data() + ch * out_w;
                    if (k + 1 < stages)
                        gch.a[k] = ga[k].empty() ? nullptr : ga[k].data() + ch * out_w;
                }
                double dv = backprop_cdf(p, vv2[i] + 0.5, hi_cache, go[i], gch);
                dv += backprop_cdf(p, vv2[i] - 0.5, lo_cache, -go[i], gch);
                if (!gv.empty()) gv[i] += dv;
            }
        });
}

std::vector<Parameter*> FactorizedDensity::parameters() {
    std::vector<Parameter*> out;
    for (int k = 0; k < stages; ++k) out.push_back(&h_raw_[k]);
    for (int k = 0; k < stages; ++k) out.push_back(&b_[k]);
    for (int k = 0; k + 1 < stages; ++k) out.push_back(&a_raw_[k]);
    return out;
}

}  // namespace nlc
