#pragma once

#include <cstdint>
#include <string>

namespace nlc {

enum class DistributionKind : uint8_t { gaussian = 0, logistic = 1, laplacian = 2 };

std::string distribution_kind_name(DistributionKind kind);
DistributionKind distribution_kind_from_name(const std::string& name);

// CDF and density of the standardized distribution (zero location, unit
// scale). The gaussian path goes through std::erf and is accurate to well
// below 1e-12 absolute error.
double standard_cdf(DistributionKind kind, double t);
double standard_pdf(DistributionKind kind, double t);

// Mass that a unit-width bin centered on `v` receives under the given
// location/scale family: F((v + 1/2 - mu)/sigma) - F((v - 1/2 - mu)/sigma).
double bin_mass(DistributionKind kind, double v, double mu, double sigma);

inline constexpr double likelihood_floor = 1e-9;

}  // namespace nlc
