#include "nlc/distributions.hpp"

#include <cmath>

#include "nlc/errors.hpp"

namespace nlc {

namespace {
constexpr double inv_sqrt2 = 0.7071067811865475244008443621048490;
constexpr double inv_sqrt2pi = 0.3989422804014326779399460599343819;
}  // namespace

std::string distribution_kind_name(DistributionKind kind) {
    switch (kind) {
        case DistributionKind::gaussian: return "gaussian";
        case DistributionKind::logistic: return "logistic";
        case DistributionKind::laplacian: return "laplacian";
    }
    check_arg(false, "unknown distribution kind");
    return {};
}

DistributionKind distribution_kind_from_name(const std::string& name) {
    if (name == "gaussian") return DistributionKind::gaussian;
    if (name == "logistic") return DistributionKind::logistic;
    if (name == "laplacian") return DistributionKind::laplacian;
    check_arg(false, "unknown distribution kind: " + name);
    return DistributionKind::gaussian;
}

double standard_cdf(DistributionKind kind, double t) {
    switch (kind) {
        case DistributionKind::gaussian:
            return 0.5 * (1.0 + std::erf(t * inv_sqrt2));
        case DistributionKind::logistic:
            // stable on both tails
            return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                            : std::exp(t) / (1.0 + std::exp(t));
        case DistributionKind::laplacian:
            return t < 0.0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
    }
    check_arg(false, "unknown distribution kind");
    return 0.0;
}

double standard_pdf(DistributionKind kind, double t) {
    switch (kind) {
        case DistributionKind::gaussian:
            return inv_sqrt2pi * std::exp(-0.5 * t * t);
        case DistributionKind::logistic: {
            const double s = standard_cdf(DistributionKind::logistic, t);
            return s * (1.0 - s);
        }
        case DistributionKind::laplacian:
            return 0.5 * std::exp(-std::abs(t));
    }
    check_arg(false, "unknown distribution kind");
    return 0.0;
}

double bin_mass(DistributionKind kind, double v, double mu, double sigma) {
    const double hi = (v + 0.5 - mu) / sigma;
    const double lo = (v - 0.5 - mu) / sigma;
    return standard_cdf(kind, hi) - standard_cdf(kind, lo);
}

}  // namespace nlc
