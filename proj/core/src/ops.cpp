#include "nlc/ops.hpp"

#include <cmath>
#include <initializer_list>
#include <utility>

#include "nlc/errors.hpp"

namespace nlc {

namespace {

Graph* common_graph(std::initializer_list<const Tensor*> ts) {
    Graph* g = nullptr;
    for (const Tensor* t : ts) {
        if (!t->recorded()) continue;
        if (g == nullptr)
            g = t->graph();
        else
            check_arg(g == t->graph(), "operands recorded on different graphs");
    }
    return g;
}

void axpy(std::span<double> dst, double k, std::span<const double> src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += k * src[i];
}

double stable_softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double stable_sigmoid(double t) {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_arg(a.same_shape(b), "add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                   shape_str(b.shape()));
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    Graph* g = common_graph({&a, &b});
    if (!g) return Tensor(a.shape(), std::move(out));
    return g->record(a.shape(), std::move(out), {&a, &b},
                     [](std::span<const double> go, GradSink& s) {
                         s.add(0, go);
                         s.add(1, go);
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_arg(a.same_shape(b), "sub: shape mismatch " + shape_str(a.shape()) + " vs " +
                                   shape_str(b.shape()));
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    Graph* g = common_graph({&a, &b});
    if (!g) return Tensor(a.shape(), std::move(out));
    return g->record(a.shape(), std::move(out), {&a, &b},
                     [](std::span<const double> go, GradSink& s) {
                         s.add(0, go);
                         auto sb = s.slot(1);
                         for (size_t i = 0; i < sb.size(); ++i) sb[i] -= go[i];
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_arg(a.same_shape(b), "mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                                   shape_str(b.shape()));
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    Graph* g = common_graph({&a, &b});
    if (!g) return Tensor(a.shape(), std::move(out));
    return g->record(a.shape(), std::move(out), {&a, &b},
                     [a, b](std::span<const double> go, GradSink& s) {
                         auto sa = s.slot(0);
                         const auto bv2 = b.values();
                         for (size_t i = 0; i < sa.size(); ++i) sa[i] += go[i] * bv2[i];
                         auto sb = s.slot(1);
                         const auto av2 = a.values();
                         for (size_t i = 0; i < sb.size(); ++i) sb[i] += go[i] * av2[i];
                     });
}

Tensor add_scalar(const Tensor& a, double s) {
    const auto av = a.values();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
    Graph* g = common_graph({&a});
    if (!g) return Tensor(a.shape(), std::move(out));
    return g->record(a.shape(), std::move(out), {&a},
                     [](std::span<const double> go, GradSink& sink) { sink.add(0, go); });
}

Tensor mul_scalar(const Tensor& a, double s) {
    const auto av = a.values();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
    Graph* g = common_graph({&a});
    if (!g) return Tensor(a.shape(), std::move(out));
    return g->record(a.shape(), std::move(out), {&a},
                     [s](std::span<const double> go, GradSink& sink) {
                         auto sa = sink.slot(0);
                         axpy(sa, s, go);
                     });
}

Tensor square(const Tensor& x) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * xv[i];
    Graph* g = common_graph({&x});
    if (!g) return Tensor(x.shape(), std::move(out));
    return g->record(x.shape(), std::move(out), {&x},
                     [x](std::span<const double> go, GradSink& s) {
                         auto sx = s.slot(0);
                         const auto xv2 = x.values();
                         for (size_t i = 0; i < sx.size(); ++i) sx[i] += 2.0 * xv2[i] * go[i];
                     });
}

Tensor sum(const Tensor& x) {
    const auto xv = x.values();
    double acc = 0.0;
    for (double v : xv) acc += v;
    Graph* g = common_graph({&x});
    if (!g) return Tensor::scalar(acc);
    return g->record(Shape{1}, std::vector<double>{acc}, {&x},
                     [](std::span<const double> go, GradSink& s) {
                         auto sx = s.slot(0);
                         for (double& v : sx) v += go[0];
                     });
}

Tensor mean_squared_error(const Tensor& a, const Tensor& b) {
    check_arg(a.same_shape(b), "mean_squared_error: shape mismatch");
    check_arg(a.size() > 0, "mean_squared_error: empty operands");
    const auto av = a.values();
    const auto bv = b.values();
    double acc = 0.0;
    for (size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        acc += d * d;
    }
    const double inv_n = 1.0 / static_cast<double>(av.size());
    Graph* g = common_graph({&a, &b});
    if (!g) return Tensor::scalar(acc * inv_n);
    return g->record(Shape{1}, std::vector<double>{acc * inv_n}, {&a, &b},
                     [a, b, inv_n](std::span<const double> go, GradSink& s) {
                         const auto av2 = a.values();
                         const auto bv2 = b.values();
                         const double k = 2.0 * inv_n * go[0];
                         auto sa = s.slot(0);
                         for (size_t i = 0; i < sa.size(); ++i)
                             sa[i] += k * (av2[i] - bv2[i]);
                         auto sb = s.slot(1);
                         for (size_t i = 0; i < sb.size(); ++i)
                             sb[i] -= k * (av2[i] - bv2[i]);
                     });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = xv[i] >= 0.0 ? xv[i] : slope * xv[i];
    Graph* g = common_graph({&x});
    if (!g) return Tensor(x.shape(), std::move(out));
    return g->record(x.shape(), std::move(out), {&x},
                     [x, slope](std::span<const double> go, GradSink& s) {
                         auto sx = s.slot(0);
                         const auto xv2 = x.values();
                         for (size_t i = 0; i < sx.size(); ++i)
                             sx[i] += (xv2[i] >= 0.0 ? 1.0 : slope) * go[i];
                     });
}

Tensor softplus(const Tensor& x) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = stable_softplus(xv[i]);
    Graph* g = common_graph({&x});
    if (!g) return Tensor(x.shape(), std::move(out));
    return g->record(x.shape(), std::move(out), {&x},
                     [x](std::span<const double> go, GradSink& s) {
                         auto sx = s.slot(0);
                         const auto xv2 = x.values();
                         for (size_t i = 0; i < sx.size(); ++i)
                             sx[i] += stable_sigmoid(xv2[i]) * go[i];
                     });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_arg(a.shape().size() == 4 && b.shape().size() == 4,
              "concat_channels: operands must be 4-d");
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    check_arg(sa[0] == sb[0] && sa[2] == sb[2] && sa[3] == sb[3],
              "concat_channels: non-channel extents differ");
    const int64_t n = sa[0], ca = sa[1], cb = sb[1], plane = sa[2] * sa[3];
    Shape out_shape{n, ca + cb, sa[2], sa[3]};
    std::vector<double> out(static_cast<size_t>(shape_size(out_shape)));
    const auto av = a.values();
    const auto bv = b.values();
    for (int64_t i = 0; i < n; ++i) {
        std::copy_n(av.data() + i * ca * plane, ca * plane,
                    out.data() + i * (ca + cb) * plane);
        std::copy_n(bv.data() + i * cb * plane, cb * plane,
                    out.data() + (i * (ca + cb) + ca) * plane);
    }
    Graph* g = common_graph({&a, &b});
    if (!g) return Tensor(std::move(out_shape), std::move(out));
    return g->record(std::move(out_shape), std::move(out), {&a, &b},
                     [n, ca, cb, plane](std::span<const double> go, GradSink& s) {
                         auto ga = s.slot(0);
                         if (!ga.empty())
                             for (int64_t i = 0; i < n; ++i)
                                 axpy(ga.subspan(i * ca * plane, ca * plane), 1.0,
                                      go.subspan(i * (ca + cb) * plane, ca * plane));
                         auto gb = s.slot(1);
                         if (!gb.empty())
                             for (int64_t i = 0; i < n; ++i)
                                 axpy(gb.subspan(i * cb * plane, cb * plane), 1.0,
                                      go.subspan((i * (ca + cb) + ca) * plane, cb * plane));
                     });
}

Tensor slice_channels(const Tensor& x, int64_t c_begin, int64_t c_end) {
    check_arg(x.shape().size() == 4, "slice_channels: operand must be 4-d");
    const auto& sx = x.shape();
    check_arg(0 <= c_begin && c_begin < c_end && c_end <= sx[1],
              "slice_channels: bad channel range");
    const int64_t n = sx[0], c_all = sx[1], c_out = c_end - c_begin, plane = sx[2] * sx[3];
    Shape out_shape{n, c_out, sx[2], sx[3]};
    std::vector<double> out(static_cast<size_t>(shape_size(out_shape)));
    const auto xv = x.values();
    for (int64_t i = 0; i < n; ++i)
        std::copy_n(xv.data() + (i * c_all + c_begin) * plane, c_out * plane,
                    out.data() + i * c_out * plane);
    Graph* g = common_graph({&x});
    if (!g) return Tensor(std::move(out_shape), std::move(out));
    return g->record(std::move(out_shape), std::move(out), {&x},
                     [n, c_all, c_begin, c_out, plane](std::span<const double> go,
                                                       GradSink& s) {
                         auto gx = s.slot(0);
                         if (gx.empty()) return;
                         for (int64_t i = 0; i < n; ++i)
                             axpy(gx.subspan((i * c_all + c_begin) * plane, c_out * plane),
                                  1.0, go.subspan(i * c_out * plane, c_out * plane));
                     });
}

Tensor bias_add(const Tensor& x, const Tensor& bias) {
    check_arg(x.shape().size() == 4, "bias_add: operand must be 4-d");
    check_arg(bias.shape().size() == 1 && bias.shape()[0] == x.shape()[1],
              "bias_add: bias must match channel count");
    const int64_t n = x.shape()[0], c = x.shape()[1], plane = x.shape()[2] * x.shape()[3];
    const auto xv = x.values();
    const auto bv = bias.values();
    std::vector<double> out(xv.size());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double b = bv[ch];
            const double* src = xv.data() + (i * c + ch) * plane;
            double* dst = out.data() + (i * c + ch) * plane;
            for (int64_t p = 0; p < plane; ++p) dst[p] = src[p] + b;
        }
    Graph* g = common_graph({&x, &bias});
    if (!g) return Tensor(x.shape(), std::move(out));
    return g->record(x.shape(), std::move(out), {&x, &bias},
                     [n, c, plane](std::span<const double> go, GradSink& s) {
                         s.add(0, go);
                         auto gb = s.slot(1);
                         if (gb.empty()) return;
                         for (int64_t i = 0; i < n; ++i)
                             for (int64_t ch = 0; ch < c; ++ch) {
                                 const double* src = go.data() + (i * c + ch) * plane;
                                 double acc = 0.0;
                                 for (int64_t p = 0; p < plane; ++p) acc += src[p];
                                 gb[ch] += acc;
                             }
                     });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, int64_t stride, Padding pad) {
    const ConvDims d = conv_dims(x.shape(), kernel.shape(), stride, pad);
    Shape out_shape{d.batch, d.out_ch, d.out_h, d.out_w};
    std::vector<double> out(static_cast<size_t>(shape_size(out_shape)));
    conv2d_forward(x.values(), kernel.values(), d, out);
    Graph* g = common_graph({&x, &kernel});
    if (!g) return Tensor(std::move(out_shape), std::move(out));
    return g->record(std::move(out_shape), std::move(out), {&x, &kernel},
                     [x, kernel, d](std::span<const double> go, GradSink& s) {
                         auto gx = s.slot(0);
                         if (!gx.empty()) {
                             std::vector<double> tmp(gx.size());
                             conv2d_input_grad(go, kernel.values(), d, tmp);
                             axpy(gx, 1.0, tmp);
                         }
                         auto gk = s.slot(1);
                         if (!gk.empty()) {
                             std::vector<double> tmp(gk.size());
                             conv2d_weight_grad(x.values(), go, d, tmp);
                             axpy(gk, 1.0, tmp);
                         }
                     });
}

Tensor transposed_conv2d(const Tensor& x, const Tensor& kernel, int64_t stride) {
    check_arg(x.shape().size() == 4, "transposed_conv2d: input must be 4-d");
    check_arg(kernel.shape().size() == 4, "transposed_conv2d: kernel must be 4-d");
    check_arg(kernel.shape()[0] == x.shape()[1],
              "transposed_conv2d: kernel expects " + std::to_string(kernel.shape()[0]) +
                  " input channels, tensor has " + std::to_string(x.shape()[1]));
    const int64_t n = x.shape()[0], co = kernel.shape()[1];
    const int64_t oh = x.shape()[2] * stride, ow = x.shape()[3] * stride;
    // geometry of the downsampling convolution this op is the adjoint of
    const ConvDims d = conv_dims({n, co, oh, ow}, kernel.shape(), stride, Padding::same);
    Shape out_shape{n, co, oh, ow};
    std::vector<double> out(static_cast<size_t>(shape_size(out_shape)));
    conv2d_input_grad(x.values(), kernel.values(), d, out);
    Graph* g = common_graph({&x, &kernel});
    if (!g) return Tensor(std::move(out_shape), std::move(out));
    return g->record(std::move(out_shape), std::move(out), {&x, &kernel},
                     [x, kernel, d](std::span<const double> go, GradSink& s) {
                         auto gx = s.slot(0);
                         if (!gx.empty()) {
                             std::vector<double> tmp(gx.size());
                             conv2d_forward(go, kernel.values(), d, tmp);
                             axpy(gx, 1.0, tmp);
                         }
                         auto gk = s.slot(1);
                         if (!gk.empty()) {
                             std::vector<double> tmp(gk.size());
                             conv2d_weight_grad(go, x.values(), d, tmp);
                             axpy(gk, 1.0, tmp);
                         }
                     });
}

Tensor masked_conv2d(const Tensor& x, const Tensor& kernel, ContextKind kind) {
    check_arg(x.shape().size() == 4, "masked_conv2d: input must be 4-d");
    check_arg(kernel.shape().size() == 4, "masked_conv2d: kernel must be 4-d");
    const int64_t k = context_kernel_extent(kind);
    check_arg(kernel.shape()[2] == k && kernel.shape()[3] == k,
              "masked_conv2d: kernel extent must be " + std::to_string(k));
    check_arg(kernel.shape()[1] == x.shape()[1],
              "masked_conv2d: kernel expects " + std::to_string(kernel.shape()[1]) +
                  " input channels, tensor has " + std::to_string(x.shape()[1]));
    MaskedDims d;
    d.batch = x.shape()[0];
    d.in_ch = x.shape()[1];
    d.h = x.shape()[2];
    d.w = x.shape()[3];
    d.out_ch = kernel.shape()[0];
    d.k = k;
    const auto taps = context_taps(kind);
    Shape out_shape{d.batch, d.out_ch, d.h, d.w};
    std::vector<double> out(static_cast<size_t>(shape_size(out_shape)));
    masked_conv2d_forward(x.values(), kernel.values(), d, taps, out);
    Graph* g = common_graph({&x, &kernel});
    if (!g) return Tensor(std::move(out_shape), std::move(out));
    return g->record(std::move(out_shape), std::move(out), {&x, &kernel},
                     [x, kernel, d, taps](std::span<const double> go, GradSink& s) {
                         auto gx = s.slot(0);
                         if (!gx.empty()) {
                             std::vector<double> tmp(gx.size());
                             masked_conv2d_input_grad(go, kernel.values(), d, taps, tmp);
                             axpy(gx, 1.0, tmp);
                         }
                         auto gk = s.slot(1);
                         if (!gk.empty()) {
                             std::vector<double> tmp(gk.size());
                             masked_conv2d_weight_grad(x.values(), go, d, taps, tmp);
                             axpy(gk, 1.0, tmp);
                         }
                     });
}

Tensor gdn(const Tensor& x, const Tensor& beta, const Tensor& gamma, bool inverse) {
    check_arg(x.shape().size() == 4, "gdn: input must be 4-d");
    const int64_t n = x.shape()[0], c = x.shape()[1], plane = x.shape()[2] * x.shape()[3];
    check_arg(beta.shape() == Shape{c}, "gdn: beta must have shape (" + std::to_string(c) + ")");
    check_arg(gamma.shape() == (Shape{c, c}), "gdn: gamma must be square over channels");
    for (double b : beta.values()) check_arg(b > 0.0, "gdn: beta must be strictly positive");
    for (double w : gamma.values()) check_arg(w >= 0.0, "gdn: gamma must be nonnegative");

    const auto xv = x.values();
    const auto bv = beta.values();
    const auto gv = gamma.values();
    const size_t total = xv.size();
    std::vector<double> sq(total);
    for (size_t i = 0; i < total; ++i) sq[i] = xv[i] * xv[i];

    // norm[n,c,p] = beta_c + sum_k gamma_ck * x_k^2
    auto norm = std::make_shared<std::vector<double>>(total);
    for (int64_t i = 0; i < n; ++i) {
        const double* sq_n = sq.data() + i * c * plane;
        double* d_n = norm->data() + i * c * plane;
        for (int64_t ch = 0; ch < c; ++ch) {
            double* dst = d_n + ch * plane;
            std::fill_n(dst, plane, bv[ch]);
            for (int64_t k = 0; k < c; ++k) {
                const double w = gv[ch * c + k];
                if (w == 0.0) continue;
                const double* src = sq_n + k * plane;
                for (int64_t p = 0; p < plane; ++p) dst[p] += w * src[p];
            }
        }
    }

    std::vector<double> out(total);
    if (inverse)
        for (size_t i = 0; i < total; ++i) out[i] = xv[i] * std::sqrt((*norm)[i]);
    else
        for (size_t i = 0; i < total; ++i) out[i] = xv[i] / std::sqrt((*norm)[i]);

    Graph* g = common_graph({&x, &beta, &gamma});
    if (!g) return Tensor(x.shape(), std::move(out));
    return g->record(
        x.shape(), std::move(out), {&x, &beta, &gamma},
        [x, gamma, norm, n, c, plane, inverse](std::span<const double> go, GradSink& s) {
            const auto xv2 = x.values();
            const auto gv2 = gamma.values();
            const size_t total2 = xv2.size();
            // t_c = go_c * x_c * d_c^(-3/2) (forward), go_c * x_c * d_c^(-1/2) (inverse)
            std::vector<double> t(total2);
            const double e = inverse ? -0.5 : -1.5;
            for (size_t i = 0; i < total2; ++i)
                t[i] = go[i] * xv2[i] * std::pow((*norm)[i], e);
            const double half = inverse ? 0.5 : -0.5;

            auto gx = s.slot(0);
            if (!gx.empty()) {
                for (int64_t i = 0; i < n; ++i) {
                    const double* t_n = t.data() + i * c * plane;
                    const double* x_n = xv2.data() + i * c * plane;
                    const double* go_n = go.data() + i * c * plane;
                    const double* d_n = norm->data() + i * c * plane;
                    double* gx_n = gx.data() + i * c * plane;
                    // w_j = sum_c gamma_cj t_c, accumulated channel by channel
                    std::vector<double> w(static_cast<size_t>(c * plane), 0.0);
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double* tc = t_n + ch * plane;
                        for (int64_t j = 0; j < c; ++j) {
                            const double wv = gv2[ch * c + j];
                            if (wv == 0.0) continue;
                            double* dst = w.data() + j * plane;
                            for (int64_t p = 0; p < plane; ++p) dst[p] += wv * tc[p];
                        }
                    }
                    if (inverse) {
                        for (int64_t idx = 0; idx < c * plane; ++idx)
                            gx_n[idx] += go_n[idx] * std::sqrt(d_n[idx]) +
                                         x_n[idx] * w[static_cast<size_t>(idx)];
                    } else {
                        for (int64_t idx = 0; idx < c * plane; ++idx)
                            gx_n[idx] += go_n[idx] / std::sqrt(d_n[idx]) -
                                         x_n[idx] * w[static_cast<size_t>(idx)];
                    }
                }
            }
            auto gb = s.slot(1);
            if (!gb.empty()) {
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double* tc = t.data() + (i * c + ch) * plane;
                        double acc = 0.0;
                        for (int64_t p = 0; p < plane; ++p) acc += tc[p];
                        gb[ch] += half * acc;
                    }
            }
            auto gg = s.slot(2);
            if (!gg.empty()) {
                for (int64_t i = 0; i < n; ++i) {
                    const double* t_n = t.data() + i * c * plane;
                    const double* x_n = xv2.data() + i * c * plane;
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double* tc = t_n + ch * plane;
                        for (int64_t k = 0; k < c; ++k) {
                            const double* xk = x_n + k * plane;
                            double acc = 0.0;
                            for (int64_t p = 0; p < plane; ++p)
                                acc += tc[p] * xk[p] * xk[p];
                            gg[ch * c + k] += half * acc;
                        }
                    }
                }
            }
        });
}

Tensor relaxed_likelihood(const Tensor& v, const Tensor& mu, const Tensor& sigma,
                          DistributionKind kind) {
    check_arg(v.same_shape(mu) && v.same_shape(sigma),
              "relaxed_likelihood: operands must share one shape");
    const auto sv = sigma.values();
    for (double s : sv) check_arg(s > 0.0, "relaxed_likelihood: sigma must be positive");
    const auto vv = v.values();
    const auto mv = mu.values();
    std::vector<double> out(vv.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double p = bin_mass(kind, vv[i], mv[i], sv[i]);
        out[i] = p < likelihood_floor ? likelihood_floor : p;
    }
    Graph* g = common_graph({&v, &mu, &sigma});
    if (!g) return Tensor(v.shape(), std::move(out));
    return g->record(
        v.shape(), std::move(out), {&v, &mu, &sigma},
        [v, mu, sigma, kind](std::span<const double> go, GradSink& s) {
            const auto vv2 = v.values();
            const auto mv2 = mu.values();
            const auto sv2 = sigma.values();
            auto gv = s.slot(0);
            auto gm = s.slot(1);
            auto gs = s.slot(2);
            for (size_t i = 0; i < vv2.size(); ++i) {
                const double sig = sv2[i];
                const double a = (vv2[i] + 0.5 - mv2[i]) / sig;
                const double b = (vv2[i] - 0.5 - mv2[i]) / sig;
                if (standard_cdf(kind, a) - standard_cdf(kind, b) < likelihood_floor)
                    continue;  // clamped: no gradient
                const double fa = standard_pdf(kind, a);
                const double fb = standard_pdf(kind, b);
                const double dv = (fa - fb) / sig;
                if (!gv.empty()) gv[i] += dv * go[i];
                if (!gm.empty()) gm[i] -= dv * go[i];
                if (!gs.empty()) gs[i] -= (a * fa - b * fb) / sig * go[i];
            }
        });
}

Tensor rate_bits(const Tensor& p) {
    const auto pv = p.values();
    for (double q : pv) check_arg(q > 0.0, "rate_bits: probabilities must be positive");
    constexpr double inv_ln2 = 1.4426950408889634073599246810018921;
    double acc = 0.0;
    for (double q : pv) acc -= std::log(q);
    acc *= inv_ln2;
    Graph* g = common_graph({&p});
    if (!g) return Tensor::scalar(acc);
    return g->record(Shape{1}, std::vector<double>{acc}, {&p},
                     [p, inv_ln2](std::span<const double> go, GradSink& s) {
                         auto gp = s.slot(0);
                         const auto pv2 = p.values();
                         for (size_t i = 0; i < gp.size(); ++i)
                             gp[i] -= inv_ln2 / pv2[i] * go[0];
                     });
}

}  // namespace nlc
