#include "nlc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "nlc/errors.hpp"

namespace nlc {

namespace {

constexpr int win = 11;
constexpr double k1 = 0.01, k2 = 0.03;
constexpr double c1 = k1 * k1, c2 = k2 * k2;  // data range is [0,1]
constexpr std::array<double, 5> scale_weights = {0.0448, 0.2856, 0.3001, 0.2363,
                                                 0.1333};

std::array<double, win> gaussian_window() {
    std::array<double, win> g{};
    constexpr double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < win; ++i) {
        const double d = i - (win - 1) / 2.0;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// valid-mode separable correlation with the 11-tap window
void filter_valid(const std::vector<double>& in, int64_t h, int64_t w,
                  const std::array<double, win>& g, std::vector<double>& tmp,
                  std::vector<double>& out) {
    const int64_t fw = w - win + 1, fh = h - win + 1;
    tmp.assign(h * fw, 0.0);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < fw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < win; ++i) acc += g[i] * in[y * w + x + i];
            tmp[y * fw + x] = acc;
        }
    out.assign(fh * fw, 0.0);
    for (int64_t y = 0; y < fh; ++y)
        for (int64_t x = 0; x < fw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < win; ++i) acc += g[i] * tmp[(y + i) * fw + x];
            out[y * fw + x] = acc;
        }
}

void avg_pool2(std::vector<double>& img, int64_t& h, int64_t& w) {
    const int64_t nh = h / 2, nw = w / 2;
    std::vector<double> out(nh * nw);
    for (int64_t y = 0; y < nh; ++y)
        for (int64_t x = 0; x < nw; ++x)
            out[y * nw + x] = 0.25 * (img[(2 * y) * w + 2 * x] +
                                      img[(2 * y) * w + 2 * x + 1] +
                                      img[(2 * y + 1) * w + 2 * x] +
                                      img[(2 * y + 1) * w + 2 * x + 1]);
    img = std::move(out);
    h = nh;
    w = nw;
}

// per-scale luminance and contrast-structure terms averaged over windows
void ssim_terms(const std::vector<double>& a, const std::vector<double>& b,
                int64_t h, int64_t w, const std::array<double, win>& g,
                double& lum, double& cs) {
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
    filter_valid(a, h, w, g, tmp, mu_a);
    filter_valid(b, h, w, g, tmp, mu_b);
    filter_valid(aa, h, w, g, tmp, m_aa);
    filter_valid(bb, h, w, g, tmp, m_bb);
    filter_valid(ab, h, w, g, tmp, m_ab);
    double lsum = 0.0, csum = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        // each product is rounded once before any sum so that swapping the
        // images only commutes additions; with contraction disabled for this
        // file the score is bitwise symmetric and exactly 1 on equal inputs
        const double maa = ma * ma, mbb = mb * mb, mab = ma * mb;
        const double va = m_aa[i] - maa;
        const double vb = m_bb[i] - mbb;
        const double vab = m_ab[i] - mab;
        lsum += (2.0 * mab + c1) / ((maa + mbb) + c1);
        csum += (2.0 * vab + c2) / ((va + vb) + c2);
    }
    lum = lsum / mu_a.size();
    cs = csum / mu_a.size();
}

double ms_ssim_channel(std::vector<double> a, std::vector<double> b, int64_t h,
                       int64_t w, const std::array<double, win>& g) {
    // largest scale count the image supports, capped at the standard five
    int scales = 0;
    for (int64_t mh = h, mw = w; scales < 5 && mh >= win && mw >= win;
         mh /= 2, mw /= 2)
        ++scales;
    check_arg(scales >= 1, "ms_ssim: image smaller than the 11x11 window");
    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) wsum += scale_weights[s];

    double score = 1.0;
    for (int s = 0; s < scales; ++s) {
        double lum, cs;
        ssim_terms(a, b, h, w, g, lum, cs);
        const double weight = scale_weights[s] / wsum;
        const double term = s + 1 == scales ? lum * cs : cs;
        score *= std::pow(std::max(term, 1e-12), weight);
        if (s + 1 < scales) {
            int64_t h2 = h, w2 = w;
            avg_pool2(a, h, w);
            avg_pool2(b, h2, w2);
        }
    }
    return score;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
    check_arg(a.shape() == b.shape(), "psnr: shape mismatch");
    check_arg(!a.empty(), "psnr: empty image");
    const auto av = a.values(), bv = b.values();
    double mse = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) {
        const double d = av[i] - bv[i];
        mse += d * d;
    }
    mse /= a.size();
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, -10.0 * std::log10(mse));
}

double ms_ssim(const Tensor& a, const Tensor& b) {
    check_arg(a.shape() == b.shape(), "ms_ssim: shape mismatch");
    check_arg(a.shape().size() == 4, "ms_ssim: rank-4 image expected");
    const int64_t planes = a.shape()[0] * a.shape()[1];
    const int64_t h = a.shape()[2], w = a.shape()[3];
    const auto g = gaussian_window();
    const auto av = a.values(), bv = b.values();
    double total = 0.0;
    for (int64_t p = 0; p < planes; ++p) {
        std::vector<double> pa(av.begin() + p * h * w, av.begin() + (p + 1) * h * w);
        std::vector<double> pb(bv.begin() + p * h * w, bv.begin() + (p + 1) * h * w);
        total += ms_ssim_channel(std::move(pa), std::move(pb), h, w, g);
    }
    return total / planes;
}

double ms_ssim_db(double score) {
    if (score >= 1.0) return 100.0;
    return std::min(100.0, -10.0 * std::log10(1.0 - score));
}

}  // namespace nlc
