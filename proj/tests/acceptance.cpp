// Acceptance gate. Every check prints one [PASS]/[FAIL] line; the exit code
// is the number of failures. Run without arguments for the full gate, or pass
// check numbers (1..9) to run a subset, e.g. `nlc_acceptance 3 5 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nlc/cdf_table.hpp"
#include "nlc/codec.hpp"
#include "nlc/distributions.hpp"
#include "nlc/factorized.hpp"
#include "nlc/graph.hpp"
#include "nlc/metrics.hpp"
#include "nlc/model.hpp"
#include "nlc/ops.hpp"
#include "nlc/quantize.hpp"
#include "nlc/range_coder.hpp"
#include "nlc/tensor.hpp"
#include "nlc/training.hpp"
#include "support/gradcheck.hpp"

using namespace nlc;
using nlctest::gradcheck_max_rel;
using nlctest::random_vec;

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Textured synthetic content: low-frequency waves plus a gradient plus grain.
// Enough structure for the transforms to exploit, enough noise that the
// conditional scales stay off their floor.
Tensor synth_image(int64_t h, int64_t w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> grain(0.0, 1.0);
    double fy[2], fx[2], ph[2];
    for (int k = 0; k < 2; ++k) {
        fy[k] = (0.5 + 3.0 * u(rng)) / static_cast<double>(h);
        fx[k] = (0.5 + 3.0 * u(rng)) / static_cast<double>(w);
        ph[k] = two_pi * u(rng);
    }
    const double gx = u(rng), gy = u(rng);
    std::vector<double> v(static_cast<size_t>(3 * h * w));
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                double s = 0.5;
                s += 0.18 * std::sin(two_pi * (fy[0] * y * (1.0 + 0.2 * c) + fx[0] * x) +
                                     ph[0] + 0.7 * c);
                s += 0.12 * std::sin(two_pi * (fy[1] * y - fx[1] * x) + ph[1] + 1.3 * c);
                s += 0.15 * (gx * x / w + gy * y / h);
                s += 0.06 * grain(rng);
                v[static_cast<size_t>((c * h + y) * w + x)] = std::clamp(s, 0.0, 1.0);
            }
    return Tensor({1, 3, h, w}, std::move(v));
}

std::vector<Tensor> make_corpus(int count, int64_t side, uint64_t seed_base) {
    std::vector<Tensor> corpus;
    corpus.reserve(count);
    for (int i = 0; i < count; ++i)
        corpus.push_back(synth_image(side, side, seed_base + static_cast<uint64_t>(i)));
    return corpus;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    const auto av = a.values(), bv = b.values();
    for (size_t i = 0; i < av.size(); ++i)
        if (av[i] != bv[i]) return false;
    return true;
}

double image_mse(const Tensor& a, const Tensor& b) {
    const auto av = a.values(), bv = b.values();
    double s = 0.0;
    for (size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        s += d * d;
    }
    return s / static_cast<double>(av.size());
}

// ---------------------------------------------------------------------------
// 1. coded latent-segment size tracks the model's information content

bool check_entropy_gap(std::string& detail) {
    auto corpus = make_corpus(20, 128, 1000);
    ModelConfig mc;  // combined variant at the default desk scale
    Model model(mc);
    TrainingConfig tc;
    tc.lambda = 0.01;
    tc.steps = 300;
    tc.seed = 5;
    train(model, corpus, tc);

    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        Tensor img = synth_image(256, 256, 9000 + static_cast<uint64_t>(i));
        CompressResult enc = compress_image(model, img);
        const double actual = 8.0 * static_cast<double>(enc.stream.latent.size());
        const double gap =
            std::abs(actual - enc.entropy_bits_latent) / enc.entropy_bits_latent;
        worst = std::max(worst, gap);
    }
    detail = "20 held-out 256x256 images, largest relative gap " + fmt(worst);
    return worst < 0.01;
}

// ---------------------------------------------------------------------------
// 2. decompression reproduces the encoder's latents and reconstruction

bool check_lossless_round_trip(std::string& detail) {
    const ModelVariant variants[5] = {
        ModelVariant::fully_factorized, ModelVariant::scale_only,
        ModelVariant::mean_scale, ModelVariant::context_only,
        ModelVariant::combined};
    const std::pair<int64_t, int64_t> sizes[5] = {
        {64, 64}, {64, 96}, {96, 64}, {80, 80}, {128, 128}};

    std::vector<Tensor> images;
    images.reserve(100);
    for (int i = 0; i < 100; ++i) {
        const auto [h, w] = sizes[i % 5];
        images.push_back(synth_image(h, w, 3000 + static_cast<uint64_t>(i)));
    }

    int trips = 0;
    for (ModelVariant v : variants) {
        ModelConfig mc;
        mc.variant = v;
        mc.seed = 20 + static_cast<uint64_t>(v);
        Model model(mc);
        for (size_t i = 0; i < images.size(); ++i) {
            CompressResult enc = compress_image(model, images[i]);
            DecompressResult dec = decompress_stream(model, enc.stream);
            if (!bitwise_equal(dec.yhat, enc.yhat) ||
                !bitwise_equal(dec.zhat, enc.zhat) ||
                !bitwise_equal(dec.image, enc.reconstruction)) {
                detail = "mismatch: variant " + variant_name(v) + ", image " +
                         std::to_string(i);
                return false;
            }
            ++trips;
        }
    }
    detail = std::to_string(trips) + " round trips bit-exact (100 images x 5 variants)";
    return true;
}

// ---------------------------------------------------------------------------
// 3. gradients: every differentiable op, then the composite objective

struct OpCheck {
    const char* name;
    // runs one randomized instance, returns the worst relative error
    std::function<double(uint64_t)> run;
};

Tensor rand_tensor(Shape s, std::mt19937_64& rng, double lo, double hi) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return Tensor(std::move(s), random_vec(n, rng, lo, hi));
}

// linear functional of the op output so the FD probe sees the raw adjoint
Tensor weighted_sum(const Tensor& y, std::mt19937_64& rng) {
    std::vector<double> w = random_vec(y.size(), rng, -1.0, 1.0);
    return sum(mul(y, Tensor(y.shape(), std::move(w))));
}

std::vector<OpCheck> op_checks() {
    std::vector<OpCheck> checks;
    auto two_arg = [](const char* name, auto op) {
        return OpCheck{name, [op](uint64_t seed) {
                           std::mt19937_64 rng(seed);
                           Parameter a("a", rand_tensor({2, 3}, rng, -2, 2));
                           Parameter b("b", rand_tensor({2, 3}, rng, 0.5, 2.5));
                           return gradcheck_max_rel({&a, &b}, [&](Graph& g) {
                               std::mt19937_64 wrng(seed + 1);
                               return weighted_sum(op(g.use(a), g.use(b)), wrng);
                           });
                       }};
    };
    checks.push_back(two_arg("add", [](Tensor x, Tensor y) { return add(x, y); }));
    checks.push_back(two_arg("sub", [](Tensor x, Tensor y) { return sub(x, y); }));
    checks.push_back(two_arg("mul", [](Tensor x, Tensor y) { return mul(x, y); }));

    checks.push_back({"add_scalar", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({2, 4}, rng, -2, 2));
                          return gradcheck_max_rel({&a}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(add_scalar(g.use(a), 0.37), wrng);
                          });
                      }});
    checks.push_back({"mul_scalar", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({2, 4}, rng, -2, 2));
                          return gradcheck_max_rel({&a}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(mul_scalar(g.use(a), -1.7), wrng);
                          });
                      }});
    checks.push_back({"square", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({3, 3}, rng, -2, 2));
                          return gradcheck_max_rel({&a}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(square(g.use(a)), wrng);
                          });
                      }});
    checks.push_back({"sum", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({2, 5}, rng, -2, 2));
                          return gradcheck_max_rel(
                              {&a}, [&](Graph& g) { return sum(g.use(a)); });
                      }});
    checks.push_back({"mean_squared_error", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({1, 3, 4, 4}, rng, 0, 1));
                          Parameter b("b", rand_tensor({1, 3, 4, 4}, rng, 0, 1));
                          return gradcheck_max_rel({&a, &b}, [&](Graph& g) {
                              return mean_squared_error(g.use(a), g.use(b));
                          });
                      }});
    checks.push_back({"leaky_relu", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          // keep values away from the kink so FD stays valid
                          std::vector<double> v = random_vec(16, rng, -2, 2);
                          for (double& x : v)
                              x = x >= 0 ? x + 0.05 : x - 0.05;
                          Parameter a("a", Tensor({4, 4}, std::move(v)));
                          return gradcheck_max_rel({&a}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(leaky_relu(g.use(a), 0.2), wrng);
                          });
                      }});
    checks.push_back({"softplus", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({4, 4}, rng, -4, 4));
                          return gradcheck_max_rel({&a}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(softplus(g.use(a)), wrng);
                          });
                      }});
    checks.push_back({"concat_channels", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({1, 2, 3, 3}, rng, -1, 1));
                          Parameter b("b", rand_tensor({1, 3, 3, 3}, rng, -1, 1));
                          return gradcheck_max_rel({&a, &b}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(
                                  concat_channels(g.use(a), g.use(b)), wrng);
                          });
                      }});
    checks.push_back({"slice_channels", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter a("a", rand_tensor({1, 5, 3, 3}, rng, -1, 1));
                          return gradcheck_max_rel({&a}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(slice_channels(g.use(a), 1, 4),
                                                  wrng);
                          });
                      }});
    checks.push_back({"bias_add", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter x("x", rand_tensor({2, 4, 3, 3}, rng, -1, 1));
                          Parameter b("b", rand_tensor({4}, rng, -1, 1));
                          return gradcheck_max_rel({&x, &b}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(bias_add(g.use(x), g.use(b)), wrng);
                          });
                      }});
    checks.push_back({"conv2d", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter x("x", rand_tensor({1, 3, 6, 6}, rng, -1, 1));
                          Parameter k("k", rand_tensor({4, 3, 3, 3}, rng, -0.5, 0.5));
                          const int64_t stride = seed % 2 == 0 ? 1 : 2;
                          const Padding pad =
                              seed % 3 == 0 ? Padding::valid : Padding::same;
                          return gradcheck_max_rel({&x, &k}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(
                                  conv2d(g.use(x), g.use(k), stride, pad), wrng);
                          });
                      }});
    checks.push_back({"transposed_conv2d", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter x("x", rand_tensor({1, 4, 3, 3}, rng, -1, 1));
                          Parameter k("k", rand_tensor({4, 3, 3, 3}, rng, -0.5, 0.5));
                          const int64_t stride = seed % 2 == 0 ? 2 : 1;
                          return gradcheck_max_rel({&x, &k}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(
                                  transposed_conv2d(g.use(x), g.use(k), stride),
                                  wrng);
                          });
                      }});
    checks.push_back({"masked_conv2d", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          const auto kind = static_cast<ContextKind>(seed % 5);
                          const int64_t e = context_kernel_extent(kind);
                          Parameter x("x", rand_tensor({1, 3, 5, 5}, rng, -1, 1));
                          Parameter k("k",
                                      rand_tensor({4, 3, e, e}, rng, -0.5, 0.5));
                          return gradcheck_max_rel({&x, &k}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(
                                  masked_conv2d(g.use(x), g.use(k), kind), wrng);
                          });
                      }});
    checks.push_back({"gdn", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter x("x", rand_tensor({1, 4, 3, 3}, rng, -1.5, 1.5));
                          Parameter beta("beta", rand_tensor({4}, rng, 0.6, 1.4));
                          Parameter gamma("gamma",
                                          rand_tensor({4, 4}, rng, 0.01, 0.2));
                          const bool inverse = seed % 2 == 1;
                          return gradcheck_max_rel(
                              {&x, &beta, &gamma}, [&](Graph& g) {
                                  std::mt19937_64 wrng(seed + 1);
                                  return weighted_sum(gdn(g.use(x), g.use(beta),
                                                          g.use(gamma), inverse),
                                                      wrng);
                              });
                      }});
    checks.push_back({"relaxed_likelihood", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          const auto kind = static_cast<DistributionKind>(seed % 3);
                          Parameter v("v", rand_tensor({1, 2, 3, 3}, rng, -3, 3));
                          Parameter mu("mu", rand_tensor({1, 2, 3, 3}, rng, -3, 3));
                          Parameter sg("sg", rand_tensor({1, 2, 3, 3}, rng, 0.8, 2));
                          return gradcheck_max_rel({&v, &mu, &sg}, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(
                                  relaxed_likelihood(g.use(v), g.use(mu), g.use(sg),
                                                     kind),
                                  wrng);
                          });
                      }});
    checks.push_back({"rate_bits", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter p("p", rand_tensor({2, 6}, rng, 0.02, 1.0));
                          return gradcheck_max_rel(
                              {&p}, [&](Graph& g) { return rate_bits(g.use(p)); });
                      }});
    checks.push_back({"factorized_likelihood", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          FactorizedDensity fd("d", 2, seed + 3);
                          Parameter v("v", rand_tensor({1, 2, 2, 2}, rng, -3, 3));
                          std::vector<Parameter*> params = fd.parameters();
                          params.push_back(&v);
                          return gradcheck_max_rel(params, [&](Graph& g) {
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(fd.likelihood(g.use(v)), wrng);
                          });
                      }});
    checks.push_back({"quantize_noise", [](uint64_t seed) {
                          std::mt19937_64 rng(seed);
                          Parameter y("y", rand_tensor({1, 2, 3, 3}, rng, -4, 4));
                          return gradcheck_max_rel({&y}, [&](Graph& g) {
                              std::mt19937_64 noise(seed + 9);  // frozen draw
                              std::mt19937_64 wrng(seed + 1);
                              return weighted_sum(quantize_noise(g.use(y), noise),
                                                  wrng);
                          });
                      }});
    return checks;
}

bool check_gradients(std::string& detail) {
    double worst_op = 0.0;
    std::string worst_op_name;
    for (const OpCheck& c : op_checks()) {
        for (uint64_t inst = 0; inst < 20; ++inst) {
            const double e = c.run(1000 * (inst + 1) + 7);
            if (e > worst_op) {
                worst_op = e;
                worst_op_name = c.name;
            }
        }
        if (worst_op >= 1e-4) break;
    }
    if (worst_op >= 1e-4) {
        detail = "op " + worst_op_name + " worst rel " + fmt(worst_op);
        return false;
    }

    // composite objective under a frozen noise draw, all five variants
    const ModelVariant variants[5] = {
        ModelVariant::fully_factorized, ModelVariant::scale_only,
        ModelVariant::mean_scale, ModelVariant::context_only,
        ModelVariant::combined};
    const double lambdas[3] = {0.003, 0.01, 0.03};
    double worst_full = 0.0;
    std::string worst_full_at;
    for (int inst = 0; inst < 20; ++inst) {
        ModelConfig mc;
        mc.variant = variants[inst % 5];
        mc.m = 8;
        mc.n = 8;
        mc.seed = 300 + static_cast<uint64_t>(inst);
        Model model(mc);
        Tensor batch = synth_image(64, 64, 500 + static_cast<uint64_t>(inst));
        const double lambda = lambdas[inst % 3];
        const uint64_t noise_seed = 9000 + static_cast<uint64_t>(inst);

        auto eval_loss = [&](Graph& g) {
            std::mt19937_64 noise(noise_seed);
            return rd_loss(model, g, batch, lambda, noise).loss;
        };

        auto params = model.parameters();
        for (Parameter* p : params) p->zero_grad();
        {
            Graph g;
            Tensor loss = eval_loss(g);
            g.backward(loss);
        }

        std::mt19937_64 pick(600 + static_cast<uint64_t>(inst));
        const double h = 1e-4;
        for (Parameter* p : params) {
            const std::vector<double> base(p->value.values().begin(),
                                           p->value.values().end());
            std::uniform_int_distribution<size_t> idx(0, base.size() - 1);
            size_t i = idx(pick);
            if (p->name.find("gamma") != std::string::npos &&
                std::abs(base[i]) < 0.01)
                continue;  // the -h probe would leave the legal domain
            std::vector<double> bump = base;
            bump[i] = base[i] + h;
            p->assign(Tensor(p->value.shape(), bump));
            Graph gp;
            const double up = eval_loss(gp).values()[0];
            bump[i] = base[i] - h;
            p->assign(Tensor(p->value.shape(), bump));
            Graph gm;
            const double dn = eval_loss(gm).values()[0];
            p->assign(Tensor(p->value.shape(), base));
            const double fd = (up - dn) / (2.0 * h);
            const double e = nlctest::rel_err(fd, p->grad[i]);
            if (e > worst_full) {
                worst_full = e;
                worst_full_at = variant_name(mc.variant) + ":" + p->name;
            }
        }
    }
    detail = "ops worst rel " + fmt(worst_op) + " (" + worst_op_name +
             "), composite worst rel " + fmt(worst_full) + " (" + worst_full_at + ")";
    return worst_full < 1e-3;
}

// ---------------------------------------------------------------------------
// 4. bin masses plus tails normalize; cumulatives are monotone

bool check_probability(std::string& detail) {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> umu(-30.0, 30.0);
    std::uniform_real_distribution<double> ulog(std::log(0.05), std::log(50.0));
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto kind = static_cast<DistributionKind>(t % 3);
        const double mu = umu(rng), sigma = std::exp(ulog(rng));
        double s = standard_cdf(kind, (latent_support_lo - 0.5 - mu) / sigma);
        s += 1.0 - standard_cdf(kind, (latent_support_hi + 0.5 - mu) / sigma);
        for (int32_t v = latent_support_lo; v <= latent_support_hi; ++v)
            s += bin_mass(kind, v, mu, sigma);
        worst = std::max(worst, std::abs(s - 1.0));
    }
    if (worst >= 1e-9) {
        detail = "location/scale normalization off by " + fmt(worst);
        return false;
    }

    double worst_fd = 0.0;
    for (uint64_t seed : {7u, 99u}) {
        FactorizedDensity fd("acc", 32, seed);
        for (int64_t c = 0; c < fd.channels(); ++c) {
            double s = fd.cdf(c, -40.5) + (1.0 - fd.cdf(c, 40.5));
            for (int32_t v = -40; v <= 40; ++v)
                s += fd.cdf(c, v + 0.5) - fd.cdf(c, v - 0.5);
            worst_fd = std::max(worst_fd, std::abs(s - 1.0));

            double prev = -1.0;
            for (double x = -30.0; x <= 30.0; x += 0.05) {
                const double cv = fd.cdf(c, x);
                if (cv < prev || cv < 0.0 || cv > 1.0) {
                    detail = "factorized cdf not monotone at channel " +
                             std::to_string(c);
                    return false;
                }
                prev = cv;
            }
        }
    }
    if (worst_fd >= 1e-9) {
        detail = "factorized normalization off by " + fmt(worst_fd);
        return false;
    }

    for (int k = 0; k < 3; ++k) {
        const auto kind = static_cast<DistributionKind>(k);
        double prev = -1.0;
        for (double t = -40.0; t <= 40.0; t += 0.01) {
            const double cv = standard_cdf(kind, t);
            if (cv < prev || cv < 0.0 || cv > 1.0) {
                detail = distribution_kind_name(kind) + " cdf not monotone";
                return false;
            }
            prev = cv;
        }
    }
    detail = "1000 triples and 64 density channels normalize within " +
             fmt(std::max(worst, worst_fd)) + "; cumulative sweeps monotone";
    return true;
}

// ---------------------------------------------------------------------------
// 5. range coder: lossless and within the table's information content

void encode_with(RangeEncoder& enc, const CdfTable& t, int32_t v) {
    const int64_t idx = t.index_of(v);
    const auto [lo, hi] = t.slot_range(idx);
    enc.encode(lo, hi, t.total());
    if (t.has_escape() && idx == t.escape_index())
        enc.encode_bits(static_cast<uint32_t>(v + 32768), 16);
}

int32_t decode_with(RangeDecoder& dec, const CdfTable& t) {
    const int64_t idx = t.lookup(dec.decode_target(t.total()));
    const auto [lo, hi] = t.slot_range(idx);
    dec.decode_advance(lo, hi, t.total());
    if (t.has_escape() && idx == t.escape_index())
        return static_cast<int32_t>(dec.decode_bits(16)) - 32768;
    return t.value_of(idx);
}

bool check_coder(std::string& detail) {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int64_t long_seqs = 0, escapes = 0;
    double worst_overhead_bits = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const int precision = 8 + t % 9;
        const int64_t slots = 2 + static_cast<int64_t>(rng() % 120);
        std::vector<double> pmf(slots);
        for (double& p : pmf) p = std::exp(6.0 * u(rng));
        if (t % 7 == 0) pmf[rng() % slots] = 0.0;  // floored slots stay codable
        const double tail = t % 4 == 0 ? 0.05 * u(rng) : 0.0;
        const bool force = t % 5 == 0;
        const int32_t lo_value = static_cast<int32_t>(rng() % 2001) - 1000;
        const CdfTable table =
            CdfTable::from_pmf(pmf, lo_value, precision, tail, force);

        size_t len;
        if (t % 10 == 0) len = 1 + rng() % 8;
        else if (t % 10 == 1) len = 1000 + rng() % 500;
        else len = 16 + rng() % 200;

        // drawing symbols through the decoder mapping samples the table's own
        // distribution, so the measured length tracks its entropy
        std::vector<int32_t> symbols(len);
        double info_bits = 0.0;
        const double total = table.total();
        for (size_t i = 0; i < len; ++i) {
            const auto target = static_cast<uint32_t>(rng() % table.total());
            const int64_t idx = table.lookup(target);
            const auto [slot_lo, slot_hi] = table.slot_range(idx);
            int32_t v;
            if (table.has_escape() && idx == table.escape_index()) {
                v = static_cast<int32_t>(table.lo_value()) - 1 -
                    static_cast<int32_t>(rng() % 100);
                info_bits += 16.0;
                ++escapes;
            } else {
                v = table.value_of(idx);
            }
            info_bits += -std::log2((slot_hi - slot_lo) / total);
            symbols[i] = v;
        }

        RangeEncoder enc;
        for (int32_t v : symbols) encode_with(enc, table, v);
        const std::vector<uint8_t> bytes = enc.finish();

        RangeDecoder dec(bytes);
        for (size_t i = 0; i < len; ++i)
            if (decode_with(dec, table) != symbols[i]) {
                detail = "round trip mismatch in sequence " + std::to_string(t);
                return false;
            }

        if (len >= 1000) {
            ++long_seqs;
            const double actual = 8.0 * static_cast<double>(bytes.size());
            const double bound = info_bits + 32.0 + 0.001 * info_bits;
            worst_overhead_bits = std::max(worst_overhead_bits, actual - info_bits);
            if (actual > bound) {
                detail = "length " + fmt(actual) + " bits exceeds bound " +
                         fmt(bound) + " in sequence " + std::to_string(t);
                return false;
            }
        }
    }
    detail = "10000 sequences lossless (" + std::to_string(escapes) +
             " escapes); " + std::to_string(long_seqs) +
             " long sequences within bound, worst overhead " +
             fmt(worst_overhead_bits) + " bits";
    return true;
}

// ---------------------------------------------------------------------------
// 6. rate and distortion move monotonically with the trade-off weight

bool check_rd_monotonic(std::string& detail) {
    auto corpus = make_corpus(20, 128, 1000);
    std::vector<Tensor> held;
    for (int i = 0; i < 4; ++i)
        held.push_back(synth_image(128, 128, 7000 + static_cast<uint64_t>(i)));

    const double lambdas[4] = {0.003, 0.01, 0.03, 0.1};
    double bpp[4], mse[4];
    for (int li = 0; li < 4; ++li) {
        ModelConfig mc;  // fresh desk-scale combined model per point
        Model model(mc);
        TrainingConfig tc;
        tc.lambda = lambdas[li];
        tc.steps = 2000;
        tc.seed = 9;
        train(model, corpus, tc);

        double total_bits = 0.0, total_pixels = 0.0, total_mse = 0.0;
        for (const Tensor& img : held) {
            CompressResult enc = compress_image(model, img);
            total_bits += 8.0 * static_cast<double>(enc.stream.total_bytes());
            total_pixels += static_cast<double>(img.shape()[2] * img.shape()[3]);
            total_mse += image_mse(enc.reconstruction, img);
        }
        bpp[li] = total_bits / total_pixels;
        mse[li] = total_mse / static_cast<double>(held.size());
        std::printf("       lambda %-7g bpp %-10.5f mse %.8f\n", lambdas[li],
                    bpp[li], mse[li]);
        std::fflush(stdout);
    }

    bool ok = true;
    for (int i = 0; i + 1 < 4; ++i) {
        if (bpp[i + 1] < bpp[i] * 0.95) ok = false;
        if (mse[i + 1] > mse[i] * 1.05) ok = false;
    }
    detail = "bpp " + fmt(bpp[0]) + " -> " + fmt(bpp[3]) + ", mse " + fmt(mse[0]) +
             " -> " + fmt(mse[3]) + " across lambda 0.003..0.1";
    return ok;
}

// ---------------------------------------------------------------------------
// 7. richer conditioning wins at equal step budget, majority of seeds

bool check_variant_ordering(std::string& detail) {
    auto corpus = make_corpus(20, 128, 1000);
    const ModelVariant variants[4] = {ModelVariant::combined,
                                      ModelVariant::mean_scale,
                                      ModelVariant::scale_only,
                                      ModelVariant::context_only};
    constexpr int seeds = 3, steps = 500, tail_window = 50;
    double loss[seeds][4];
    for (int s = 0; s < seeds; ++s) {
        for (int vi = 0; vi < 4; ++vi) {
            ModelConfig mc;
            mc.variant = variants[vi];
            mc.seed = 31 + static_cast<uint64_t>(s);
            Model model(mc);
            TrainingConfig tc;
            tc.lambda = 0.01;
            tc.steps = steps;
            tc.seed = 131 + static_cast<uint64_t>(s);
            TrainResult res = train(model, corpus, tc);
            double tail = 0.0;
            for (int k = 0; k < tail_window; ++k)
                tail += res.history[res.history.size() - 1 - k].loss;
            loss[s][vi] = tail / tail_window;
        }
    }

    std::printf("       %-14s %-12s %-12s %-12s %-12s\n", "seed", "combined",
                "mean-scale", "scale-only", "context-only");
    int ordered = 0;
    for (int s = 0; s < seeds; ++s) {
        std::printf("       %-14d %-12.4f %-12.4f %-12.4f %-12.4f\n", s + 1,
                    loss[s][0], loss[s][1], loss[s][2], loss[s][3]);
        const bool chain = loss[s][0] < loss[s][1] && loss[s][1] < loss[s][2] &&
                           loss[s][0] < loss[s][3];
        if (chain) ++ordered;
    }
    std::fflush(stdout);
    detail = std::to_string(ordered) + " of " + std::to_string(seeds) +
             " seeds ordered (combined < mean-scale < scale-only, combined < "
             "context-only) at " +
             std::to_string(steps) + " steps";
    return 2 * ordered > seeds;
}

// ---------------------------------------------------------------------------
// 8. context causality and schedule equivalence

bool check_causality(std::string& detail) {
    const ContextKind kinds[5] = {ContextKind::k3, ContextKind::k5,
                                  ContextKind::k7, ContextKind::single_neighbor,
                                  ContextKind::prev_row3};
    std::mt19937_64 rng(808);
    const int64_t h = 8, w = 12;
    int perturbations = 0;
    for (ContextKind kind : kinds) {
        ModelConfig mc;
        mc.m = 16;
        mc.n = 16;
        mc.context = kind;
        mc.seed = 60 + static_cast<uint64_t>(kind);
        Model model(mc);

        std::vector<double> yv(static_cast<size_t>(mc.m * h * w));
        for (double& v : yv)
            v = static_cast<double>(static_cast<int64_t>(rng() % 25)) - 12.0;
        Tensor yhat({1, mc.m, h, w}, yv);
        std::vector<double> zv(static_cast<size_t>(mc.n * (h / 4) * (w / 4)));
        for (double& v : zv)
            v = static_cast<double>(static_cast<int64_t>(rng() % 9)) - 4.0;
        Tensor psi = model.hyper_synthesis(Tensor({1, mc.n, h / 4, w / 4}, zv));

        Tensor phi = model.context(yhat);
        EntropyParams base = model.entropy_parameters(psi, phi);
        const auto bmu = base.mu.values(), bsg = base.sigma.values();

        for (int t = 0; t < 10; ++t) {
            const int64_t r = static_cast<int64_t>(rng() % h);
            const int64_t c = static_cast<int64_t>(rng() % w);
            const int64_t ch = static_cast<int64_t>(rng() % mc.m);
            std::vector<double> pv = yv;
            pv[static_cast<size_t>((ch * h + r) * w + c)] +=
                1.0 + static_cast<double>(rng() % 4);
            Tensor perturbed({1, mc.m, h, w}, std::move(pv));
            Tensor phi2 = model.context(perturbed);
            EntropyParams ep2 = model.entropy_parameters(psi, phi2);
            const auto mu2 = ep2.mu.values(), sg2 = ep2.sigma.values();

            const int64_t p_at = r * w + c;
            for (int64_t cc = 0; cc < mc.m; ++cc)
                for (int64_t q = 0; q <= p_at; ++q) {
                    const size_t at = static_cast<size_t>(cc * h * w + q);
                    if (mu2[at] != bmu[at] || sg2[at] != bsg[at]) {
                        detail = "params at raster " + std::to_string(q) +
                                 " moved after perturbing " + std::to_string(p_at) +
                                 " (" + context_kind_name(kind) + ")";
                        return false;
                    }
                }
            ++perturbations;
        }
    }

    // both decode schedules must emit identical tensors
    int schedule_pairs = 0;
    for (ContextKind kind :
         {ContextKind::k5, ContextKind::single_neighbor, ContextKind::prev_row3}) {
        for (ModelVariant v : {ModelVariant::combined, ModelVariant::context_only}) {
            ModelConfig mc;
            mc.variant = v;
            mc.m = 16;
            mc.n = 16;
            mc.context = kind;
            mc.seed = 90 + static_cast<uint64_t>(kind);
            Model model(mc);
            Tensor img = synth_image(96, 64, 880 + static_cast<uint64_t>(kind));
            CompressResult enc = compress_image(model, img);
            DecompressResult serial =
                decompress_stream(model, enc.stream, DecodeSchedule::serial);
            DecompressResult wave =
                decompress_stream(model, enc.stream, DecodeSchedule::wavefront);
            if (!bitwise_equal(serial.yhat, wave.yhat) ||
                !bitwise_equal(serial.image, wave.image) ||
                !bitwise_equal(serial.yhat, enc.yhat)) {
                detail = "schedules disagree (" + context_kind_name(kind) + ", " +
                         variant_name(v) + ")";
                return false;
            }
            ++schedule_pairs;
        }
    }
    detail = std::to_string(perturbations) +
             " perturbations causally clean across 5 context kinds; " +
             std::to_string(schedule_pairs) + " schedule pairs bit-identical";
    return true;
}

// ---------------------------------------------------------------------------
// 9. metric identities, symmetry, and closed forms

bool check_metrics(std::string& detail) {
    const std::pair<int64_t, int64_t> sizes[4] = {
        {64, 64}, {96, 64}, {176, 176}, {80, 112}};
    for (int i = 0; i < 4; ++i) {
        const auto [h, w] = sizes[i];
        Tensor a = synth_image(h, w, 7100 + static_cast<uint64_t>(i));
        Tensor b = synth_image(h, w, 7200 + static_cast<uint64_t>(i));
        if (psnr(a, a) != 100.0) {
            detail = "psnr self-score is not the cap";
            return false;
        }
        const double self = ms_ssim(a, a);
        if (self != 1.0) {
            detail = "ms-ssim self-score " + fmt(self) + " is not exactly 1";
            return false;
        }
        if (ms_ssim_db(self) != 100.0) {
            detail = "ms-ssim-db self-score is not the cap";
            return false;
        }
        if (psnr(a, b) != psnr(b, a) || ms_ssim(a, b) != ms_ssim(b, a)) {
            detail = "metric not bitwise symmetric at " + std::to_string(h) + "x" +
                     std::to_string(w);
            return false;
        }
        const double cross = ms_ssim(a, b);
        if (!(cross > 0.0 && cross < 1.0)) {
            detail = "distinct images scored " + fmt(cross);
            return false;
        }
    }

    // uniform offsets with exactly representable squares
    Tensor zero = Tensor::zeros({1, 3, 32, 32});
    Tensor q = Tensor::full({1, 3, 32, 32}, 0.25);
    Tensor hlf = Tensor::full({1, 3, 32, 32}, 0.5);
    if (psnr(zero, q) != -10.0 * std::log10(0.0625) ||
        psnr(zero, hlf) != -10.0 * std::log10(0.25)) {
        detail = "uniform-offset psnr misses the closed form";
        return false;
    }
    Tensor eps = Tensor::full({1, 3, 32, 32}, 1e-9);
    if (psnr(zero, eps) != 100.0) {
        detail = "tiny error did not hit the psnr cap";
        return false;
    }
    if (ms_ssim_db(1.0) != 100.0 ||
        std::abs(ms_ssim_db(0.99) - 20.0) > 1e-9) {
        detail = "ms-ssim-db closed forms off";
        return false;
    }

    // heavier corruption scores lower
    Tensor a = synth_image(64, 64, 7300);
    std::mt19937_64 rng(7301);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> n1(a.values().begin(), a.values().end());
    std::vector<double> n2 = n1;
    for (size_t i = 0; i < n1.size(); ++i) {
        const double g = nd(rng);
        n1[i] = std::clamp(n1[i] + 0.02 * g, 0.0, 1.0);
        n2[i] = std::clamp(n2[i] + 0.15 * g, 0.0, 1.0);
    }
    const double mild = ms_ssim(a, Tensor(a.shape(), std::move(n1)));
    const double harsh = ms_ssim(a, Tensor(a.shape(), std::move(n2)));
    if (!(harsh < mild && mild < 1.0)) {
        detail = "corruption ordering violated: mild " + fmt(mild) + ", harsh " +
                 fmt(harsh);
        return false;
    }
    detail = "identity, symmetry, closed forms, and ordering all hold";
    return true;
}

struct Criterion {
    int id;
    const char* name;
    bool (*run)(std::string&);
};

const Criterion criteria[] = {
    {1, "entropy gap: coded latent bits track the model's information content",
     check_entropy_gap},
    {2, "lossless round trip across all variants", check_lossless_round_trip},
    {3, "gradient suite: ops and composite objective", check_gradients},
    {4, "probability suite: normalization and monotone cumulatives",
     check_probability},
    {5, "coder suite: lossless and near the table entropy", check_coder},
    {6, "rate-distortion monotonicity over the lambda sweep", check_rd_monotonic},
    {7, "variant ordering at equal step budget", check_variant_ordering},
    {8, "context causality and decode-schedule equivalence", check_causality},
    {9, "metric identities, symmetry, and closed forms", check_metrics},
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        char* end = nullptr;
        const long v = std::strtol(argv[i], &end, 10);
        if (end == argv[i] || *end != '\0' || v < 1 || v > 9) {
            std::fprintf(stderr, "usage: %s [check numbers 1..9]\n", argv[0]);
            return 64;
        }
        selected.insert(static_cast<int>(v));
    }

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        std::printf("[ .. ] %d. %s\n", c.id, c.name);
        std::fflush(stdout);
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string detail;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("[%s] %d. %s (%.1fs)\n       %s\n", ok ? "PASS" : "FAIL", c.id,
                    c.name, secs, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures == 0) std::printf("all selected checks passed\n");
    else std::printf("%d check(s) failed\n", failures);
    return failures;
}
