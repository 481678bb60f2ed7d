#include "nlc/codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "nlc/checkpoint.hpp"
#include "nlc/distributions.hpp"
#include "nlc/errors.hpp"
#include "nlc/kernels.hpp"
#include "nlc/quantize.hpp"
#include "nlc/range_coder.hpp"

namespace nlc {

namespace {

int64_t round_up(int64_t v, int64_t multiple) {
    return (v + multiple - 1) / multiple * multiple;
}

struct EvalWorkspace {
    std::vector<double> phi, input, hid1, hid2, out;

    explicit EvalWorkspace(const PositionEval& pe)
        : phi(pe.use_ctx ? 2 * pe.m : 0),
          input(pe.ep_in),
          hid1(pe.h1),
          hid2(pe.h2),
          out(2 * pe.m) {}
};

// (mu, sigma) for all channels at one grid position. The encoder and the
// decoder both funnel through this routine so the conditional distributions
// they build are bit-identical; it must never read grid positions the mask
// hides, which masked_conv_at guarantees.
NLC_NOINLINE
void entropy_params_at(const PositionEval& pe, std::span<const double> psi,
                       std::span<const double> grid, int64_t h, int64_t w,
                       int64_t row, int64_t col, EvalWorkspace& ws,
                       std::span<double> mu, std::span<double> sigma) {
    if (pe.use_ctx)
        masked_conv_at(grid, pe.m, h, w, pe.ctx_kernel, pe.ctx_bias, 2 * pe.m,
                       pe.ctx_extent, pe.ctx_taps, row, col, ws.phi);
    const int64_t plane = h * w;
    const int64_t at = row * w + col;
    int64_t off = 0;
    if (pe.use_psi)
        for (int64_t c = 0; c < 2 * pe.m; ++c) ws.input[off++] = psi[c * plane + at];
    if (pe.use_ctx)
        for (int64_t c = 0; c < 2 * pe.m; ++c) ws.input[off++] = ws.phi[c];
    matvec_bias(pe.w1, pe.b1, ws.input, ws.hid1);
    for (double& v : ws.hid1) v = v >= 0.0 ? v : Model::leaky_slope * v;
    matvec_bias(pe.w2, pe.b2, ws.hid1, ws.hid2);
    for (double& v : ws.hid2) v = v >= 0.0 ? v : Model::leaky_slope * v;
    matvec_bias(pe.w3, pe.b3, ws.hid2, ws.out);
    for (int64_t c = 0; c < pe.m; ++c) {
        mu[c] = pe.mu_zero ? 0.0 : ws.out[c];
        const double t = ws.out[pe.m + c];
        const double sp =
            t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        sigma[c] = pe.scale_floor + sp;
    }
}

template <typename F>
void for_each_position(ScanOrder order, int64_t h, int64_t w, F&& f) {
    if (order == ScanOrder::raster) {
        for (int64_t r = 0; r < h; ++r)
            for (int64_t c = 0; c < w; ++c) f(r, c);
    } else {
        for (int64_t c = 0; c < w; ++c)
            for (int64_t r = 0; r < h; ++r) f(r, c);
    }
}

// escape payload: the value itself, offset into [0, 2^16)
void encode_value(RangeEncoder& enc, const CdfTable& table, int32_t v) {
    const int64_t idx = table.index_of(v);
    const auto [lo, hi] = table.slot_range(idx);
    enc.encode(lo, hi, table.total());
    if (table.has_escape() && idx == table.escape_index())
        enc.encode_bits(static_cast<uint32_t>(v + 32768), 16);
}

int32_t decode_value(RangeDecoder& dec, const CdfTable& table) {
    const uint32_t target = dec.decode_target(table.total());
    const int64_t idx = table.lookup(target);
    const auto [lo, hi] = table.slot_range(idx);
    dec.decode_advance(lo, hi, table.total());
    if (table.has_escape() && idx == table.escape_index())
        return static_cast<int32_t>(dec.decode_bits(16)) - 32768;
    return table.value_of(idx);
}

double floored_bits(double p) { return -std::log2(std::max(p, likelihood_floor)); }

double density_bits(const FactorizedDensity& fd, int64_t channel, int32_t v) {
    return floored_bits(fd.cdf(channel, v + 0.5) - fd.cdf(channel, v - 0.5));
}

double encode_density_grid(RangeEncoder& enc, const FactorizedDensity& fd,
                           std::span<const double> grid, int64_t channels,
                           int64_t plane, int32_t lo, int32_t hi) {
    double bits = 0.0;
    for (int64_t c = 0; c < channels; ++c) {
        const CdfTable table = density_table(fd, c, lo, hi);
        for (int64_t i = 0; i < plane; ++i) {
            const auto v = static_cast<int32_t>(std::llround(grid[c * plane + i]));
            encode_value(enc, table, v);
            bits += density_bits(fd, c, v);
        }
    }
    return bits;
}

void decode_density_grid(RangeDecoder& dec, const FactorizedDensity& fd,
                         std::span<double> grid, int64_t channels, int64_t plane,
                         int32_t lo, int32_t hi) {
    for (int64_t c = 0; c < channels; ++c) {
        const CdfTable table = density_table(fd, c, lo, hi);
        for (int64_t i = 0; i < plane; ++i)
            grid[c * plane + i] = decode_value(dec, table);
    }
}

}  // namespace

Tensor pad_image(const Tensor& x, int64_t multiple) {
    check_arg(x.shape().size() == 4, "pad_image: rank-4 input expected");
    check_arg(multiple >= 1, "pad_image: multiple must be positive");
    const int64_t n = x.shape()[0], ch = x.shape()[1];
    const int64_t h = x.shape()[2], w = x.shape()[3];
    check_arg(h >= 1 && w >= 1, "pad_image: empty image");
    const int64_t ph = round_up(h, multiple), pw = round_up(w, multiple);
    if (ph == h && pw == w) return x;
    std::vector<double> out(n * ch * ph * pw);
    const auto in = x.values();
    for (int64_t i = 0; i < n * ch; ++i) {
        const double* src = in.data() + i * h * w;
        double* dst = out.data() + i * ph * pw;
        for (int64_t y = 0; y < ph; ++y) {
            const double* row = src + std::min(y, h - 1) * w;
            for (int64_t xx = 0; xx < pw; ++xx)
                dst[y * pw + xx] = row[std::min(xx, w - 1)];
        }
    }
    return Tensor({n, ch, ph, pw}, std::move(out));
}

Tensor crop_image(const Tensor& x, int64_t height, int64_t width) {
    check_arg(x.shape().size() == 4, "crop_image: rank-4 input expected");
    const int64_t n = x.shape()[0], ch = x.shape()[1];
    const int64_t h = x.shape()[2], w = x.shape()[3];
    check_arg(height >= 1 && height <= h && width >= 1 && width <= w,
              "crop_image: crop exceeds input extent");
    if (height == h && width == w) return x;
    std::vector<double> out(n * ch * height * width);
    const auto in = x.values();
    for (int64_t i = 0; i < n * ch; ++i)
        for (int64_t y = 0; y < height; ++y) {
            const double* src = in.data() + (i * h + y) * w;
            std::copy(src, src + width, out.data() + (i * height + y) * width);
        }
    return Tensor({n, ch, height, width}, std::move(out));
}

CdfTable conditional_table(DistributionKind kind, double mu, double sigma) {
    constexpr int64_t count = latent_support_hi - latent_support_lo + 1;
    std::array<double, count + 1> edge;
    for (int64_t i = 0; i <= count; ++i)
        edge[i] = standard_cdf(kind, (latent_support_lo + i - 0.5 - mu) / sigma);
    std::array<double, count> pmf;
    for (int64_t i = 0; i < count; ++i)
        pmf[i] = std::max(0.0, edge[i + 1] - edge[i]);
    const double tail = std::max(0.0, 1.0 - (edge[count] - edge[0]));
    return CdfTable::from_pmf(pmf, latent_support_lo, coding_precision, tail,
                              /*force_escape=*/true);
}

CdfTable density_table(const FactorizedDensity& fd, int64_t channel, int32_t lo,
                       int32_t hi) {
    std::vector<double> pmf(hi - lo + 1);
    double prev = fd.cdf(channel, lo - 0.5);
    const double first = prev;
    for (int32_t v = lo; v <= hi; ++v) {
        const double next = fd.cdf(channel, v + 0.5);
        pmf[v - lo] = std::max(0.0, next - prev);
        prev = next;
    }
    const double tail = std::max(0.0, 1.0 - (prev - first));
    return CdfTable::from_pmf(pmf, lo, coding_precision, tail,
                              /*force_escape=*/true);
}

CompressResult compress_image(Model& model, const Tensor& image) {
    check_arg(image.shape().size() == 4 && image.shape()[0] == 1 &&
                  image.shape()[1] == 3,
              "compress: image must be (1,3,H,W)");
    const int64_t orig_h = image.shape()[2], orig_w = image.shape()[3];
    const Tensor x = pad_image(image);
    const Tensor y = model.analysis(x);
    const int64_t m = model.config().m;
    const int64_t h = y.shape()[2], w = y.shape()[3];
    const int64_t plane = h * w;

    CompressResult res;
    res.yhat = quantize_round(y);
    const auto grid = res.yhat.values();
    Tensor psi;

    if (model.has_hyper()) {
        res.zhat = quantize_round(model.hyper_analysis(y));
        psi = model.hyper_synthesis(res.zhat);
        RangeEncoder henc;
        res.entropy_bits_hyper = encode_density_grid(
            henc, model.hyper_density(), res.zhat.values(), res.zhat.shape()[1],
            res.zhat.shape()[2] * res.zhat.shape()[3], hyper_support_lo,
            hyper_support_hi);
        res.stream.hyper = henc.finish();
    }

    RangeEncoder enc;
    if (!model.has_entropy_parameters()) {
        res.entropy_bits_latent =
            encode_density_grid(enc, model.latent_density(), grid, m, plane,
                                latent_support_lo, latent_support_hi);
    } else {
        const PositionEval pe = model.position_eval();
        EvalWorkspace ws(pe);
        std::vector<double> mu(m), sigma(m);
        const std::span<const double> psi_vals =
            pe.use_psi ? psi.values() : std::span<const double>{};
        const ScanOrder order = model.has_context()
                                    ? context_scan_order(model.config().context)
                                    : ScanOrder::raster;
        double bits = 0.0;
        for_each_position(order, h, w, [&](int64_t r, int64_t c) {
            entropy_params_at(pe, psi_vals, grid, h, w, r, c, ws, mu, sigma);
            const int64_t at = r * w + c;
            for (int64_t ch = 0; ch < m; ++ch) {
                const auto v =
                    static_cast<int32_t>(std::llround(grid[ch * plane + at]));
                const CdfTable table =
                    conditional_table(pe.distribution, mu[ch], sigma[ch]);
                encode_value(enc, table, v);
                bits += floored_bits(bin_mass(pe.distribution, v, mu[ch], sigma[ch]));
            }
        });
        res.entropy_bits_latent = bits;
    }
    res.stream.latent = enc.finish();

    auto& hd = res.stream.header;
    hd.version = BitstreamHeader::current_version;
    hd.variant = model.config().variant;
    hd.m = static_cast<uint16_t>(m);
    hd.width = static_cast<uint32_t>(orig_w);
    hd.height = static_cast<uint32_t>(orig_h);
    hd.model_hash = model_hash(model);

    res.reconstruction = crop_image(model.synthesis(res.yhat), orig_h, orig_w);
    return res;
}

DecompressResult decompress_stream(Model& model, const Bitstream& stream,
                                   DecodeSchedule schedule) {
    const auto& hd = stream.header;
    check_model(hd.variant == model.config().variant,
                "decompress: bitstream variant does not match the model");
    check_model(hd.m == model.config().m,
                "decompress: bitstream latent width does not match the model");
    check_model(hd.model_hash == model_hash(model),
                "decompress: bitstream was produced by a different model");
    check_data(hd.width >= 1 && hd.height >= 1, "decompress: empty image");

    const int64_t orig_h = hd.height, orig_w = hd.width;
    const int64_t h = round_up(orig_h, 64) / 16, w = round_up(orig_w, 64) / 16;
    const int64_t m = model.config().m;
    const int64_t plane = h * w;

    DecompressResult res;
    Tensor psi;
    if (model.has_hyper()) {
        const int64_t n = model.config().n;
        const int64_t hz = h / 4, wz = w / 4;
        RangeDecoder hdec(stream.hyper);
        std::vector<double> zvals(n * hz * wz);
        decode_density_grid(hdec, model.hyper_density(), zvals, n, hz * wz,
                            hyper_support_lo, hyper_support_hi);
        res.zhat = Tensor({1, n, hz, wz}, std::move(zvals));
        psi = model.hyper_synthesis(res.zhat);
    }

    std::vector<double> grid(m * plane, 0.0);
    RangeDecoder dec(stream.latent);
    if (!model.has_entropy_parameters()) {
        decode_density_grid(dec, model.latent_density(), grid, m, plane,
                            latent_support_lo, latent_support_hi);
    } else {
        const PositionEval pe = model.position_eval();
        EvalWorkspace ws(pe);
        const std::span<const double> psi_vals =
            pe.use_psi ? psi.values() : std::span<const double>{};
        const ContextKind kind = model.config().context;
        const ScanOrder order =
            model.has_context() ? context_scan_order(kind) : ScanOrder::raster;

        auto decode_at = [&](int64_t r, int64_t c, const double* mu,
                             const double* sg) {
            const int64_t at = r * w + c;
            for (int64_t ch = 0; ch < m; ++ch) {
                const CdfTable table =
                    conditional_table(pe.distribution, mu[ch], sg[ch]);
                grid[ch * plane + at] = decode_value(dec, table);
            }
        };

        // Restricted contexts admit batched parameter evaluation: without a
        // context every position is free, the previous-row mask frees a whole
        // row once the row above is decoded, and the left-neighbor mask frees
        // a whole column. The symbol order on the wire never changes, so the
        // wavefront schedule must emit the exact bits of the serial one.
        const bool row_wave = pe.use_ctx && kind == ContextKind::prev_row3;
        const bool col_wave = pe.use_ctx && kind == ContextKind::single_neighbor;
        if (schedule == DecodeSchedule::wavefront && !pe.use_ctx) {
            std::vector<double> mu_all(m * plane), sg_all(m * plane);
            for_each_position(order, h, w, [&](int64_t r, int64_t c) {
                const int64_t at = r * w + c;
                std::vector<double> mu(m), sg(m);
                entropy_params_at(pe, psi_vals, grid, h, w, r, c, ws, mu, sg);
                for (int64_t ch = 0; ch < m; ++ch) {
                    mu_all[ch * plane + at] = mu[ch];
                    sg_all[ch * plane + at] = sg[ch];
                }
            });
            for_each_position(order, h, w, [&](int64_t r, int64_t c) {
                const int64_t at = r * w + c;
                std::vector<double> mu(m), sg(m);
                for (int64_t ch = 0; ch < m; ++ch) {
                    mu[ch] = mu_all[ch * plane + at];
                    sg[ch] = sg_all[ch * plane + at];
                }
                decode_at(r, c, mu.data(), sg.data());
            });
        } else if (schedule == DecodeSchedule::wavefront && row_wave) {
            std::vector<double> mu_row(m * w), sg_row(m * w);
            for (int64_t r = 0; r < h; ++r) {
                for (int64_t c = 0; c < w; ++c)
                    entropy_params_at(pe, psi_vals, grid, h, w, r, c, ws,
                                      std::span<double>(mu_row).subspan(c * m, m),
                                      std::span<double>(sg_row).subspan(c * m, m));
                for (int64_t c = 0; c < w; ++c)
                    decode_at(r, c, mu_row.data() + c * m, sg_row.data() + c * m);
            }
        } else if (schedule == DecodeSchedule::wavefront && col_wave) {
            std::vector<double> mu_col(m * h), sg_col(m * h);
            for (int64_t c = 0; c < w; ++c) {
                for (int64_t r = 0; r < h; ++r)
                    entropy_params_at(pe, psi_vals, grid, h, w, r, c, ws,
                                      std::span<double>(mu_col).subspan(r * m, m),
                                      std::span<double>(sg_col).subspan(r * m, m));
                for (int64_t r = 0; r < h; ++r)
                    decode_at(r, c, mu_col.data() + r * m, sg_col.data() + r * m);
            }
        } else {
            std::vector<double> mu(m), sg(m);
            for_each_position(order, h, w, [&](int64_t r, int64_t c) {
                entropy_params_at(pe, psi_vals, grid, h, w, r, c, ws, mu, sg);
                decode_at(r, c, mu.data(), sg.data());
            });
        }
    }

    res.yhat = Tensor({1, m, h, w}, std::move(grid));
    res.image = crop_image(model.synthesis(res.yhat), orig_h, orig_w);
    return res;
}

LatentInspection inspect_latents(Model& model, const Tensor& image) {
    check_arg(image.shape().size() == 4 && image.shape()[0] == 1 &&
                  image.shape()[1] == 3,
              "inspect: image must be (1,3,H,W)");
    const Tensor x = pad_image(image);
    const Tensor y = model.analysis(x);
    const Tensor yhat = quantize_round(y);
    const int64_t m = model.config().m;
    const int64_t h = yhat.shape()[2], w = yhat.shape()[3];
    const int64_t plane = h * w;
    const auto grid = yhat.values();

    std::vector<double> mu_all(m * plane, 0.0), sg_all(m * plane, 1.0);
    std::vector<double> bits_all(m * plane);

    if (model.has_entropy_parameters()) {
        Tensor psi;
        if (model.has_hyper())
            psi = model.hyper_synthesis(quantize_round(model.hyper_analysis(y)));
        const PositionEval pe = model.position_eval();
        EvalWorkspace ws(pe);
        std::vector<double> mu(m), sg(m);
        const std::span<const double> psi_vals =
            pe.use_psi ? psi.values() : std::span<const double>{};
        for (int64_t r = 0; r < h; ++r)
            for (int64_t c = 0; c < w; ++c) {
                entropy_params_at(pe, psi_vals, grid, h, w, r, c, ws, mu, sg);
                const int64_t at = r * w + c;
                for (int64_t ch = 0; ch < m; ++ch) {
                    mu_all[ch * plane + at] = mu[ch];
                    sg_all[ch * plane + at] = sg[ch];
                    bits_all[ch * plane + at] = floored_bits(bin_mass(
                        pe.distribution, grid[ch * plane + at], mu[ch], sg[ch]));
                }
            }
    } else {
        const FactorizedDensity& fd = model.latent_density();
        for (int64_t ch = 0; ch < m; ++ch)
            for (int64_t i = 0; i < plane; ++i)
                bits_all[ch * plane + i] = density_bits(
                    fd, ch, static_cast<int32_t>(std::llround(grid[ch * plane + i])));
    }

    LatentInspection out;
    out.channel_bits.assign(m, 0.0);
    for (int64_t ch = 0; ch < m; ++ch)
        for (int64_t i = 0; i < plane; ++i)
            out.channel_bits[ch] += bits_all[ch * plane + i];
    out.total_bits = 0.0;
    for (double b : out.channel_bits) out.total_bits += b;
    out.channel = std::max_element(out.channel_bits.begin(), out.channel_bits.end()) -
                  out.channel_bits.begin();

    const int64_t ch = out.channel;
    std::vector<double> lat(plane), muv(plane), err(plane), sgv(plane), nrm(plane),
        bts(plane);
    for (int64_t i = 0; i < plane; ++i) {
        lat[i] = grid[ch * plane + i];
        muv[i] = mu_all[ch * plane + i];
        err[i] = lat[i] - muv[i];
        sgv[i] = sg_all[ch * plane + i];
        nrm[i] = err[i] / sgv[i];
        bts[i] = bits_all[ch * plane + i];
    }
    const Shape gs{1, 1, h, w};
    out.latents = Tensor(gs, std::move(lat));
    out.mu = Tensor(gs, std::move(muv));
    out.error = Tensor(gs, std::move(err));
    out.sigma = Tensor(gs, std::move(sgv));
    out.normalized = Tensor(gs, std::move(nrm));
    out.bits = Tensor(gs, std::move(bts));
    return out;
}

double lag1_autocorrelation(const Tensor& grid) {
    check_arg(grid.shape().size() == 4, "lag1_autocorrelation: rank-4 grid expected");
    const int64_t h = grid.shape()[2], w = grid.shape()[3];
    const auto v = grid.values();
    const int64_t n = v.size();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    if (var < 1e-12) return 0.0;
    double row = 0.0, col = 0.0;
    for (int64_t i = 0; i < grid.shape()[0] * grid.shape()[1]; ++i) {
        const double* p = v.data() + i * h * w;
        for (int64_t r = 0; r < h; ++r)
            for (int64_t c = 0; c + 1 < w; ++c)
                row += (p[r * w + c] - mean) * (p[r * w + c + 1] - mean);
        for (int64_t r = 0; r + 1 < h; ++r)
            for (int64_t c = 0; c < w; ++c)
                col += (p[r * w + c] - mean) * (p[(r + 1) * w + c] - mean);
    }
    return std::max(std::abs(row / var), std::abs(col / var));
}

}  // namespace nlc
