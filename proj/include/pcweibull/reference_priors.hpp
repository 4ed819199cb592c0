#pragma once

// The flat and Gamma(a, a) shape priors, and their behaviour on the distance
// scale: table rows pairing each distance with its two shapes, and per-branch
// pushforward densities of any shape prior onto d.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pcweibull/divergence.hpp"
#include "pcweibull/errors.hpp"
#include "pcweibull/numerics.hpp"

namespace pcweibull {

/// Rate:  pi(alpha) = a^a / Gamma(a) * alpha^(a-1) * exp(-a alpha)      (mean 1)
/// Scale: pi(alpha) = 1 / (Gamma(a) a^a) * alpha^(a-1) * exp(-alpha / a) (mean a^2)
enum class GammaConvention { Rate, Scale };

struct GammaPriorSpec {
    double a = 1.0;
    GammaConvention convention = GammaConvention::Rate;

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw DomainError("GammaPriorSpec: a must be positive and finite");
        }
    }
};

inline double log_density(double alpha, const GammaPriorSpec& spec) {
    spec.validate();
    if (!(alpha > 0.0)) {
        throw DomainError("gamma log_density: alpha must be positive, got " +
                          detail::fmt_num(alpha));
    }
    const double a = spec.a;
    const double log_kernel = (a - 1.0) * std::log(alpha);
    if (spec.convention == GammaConvention::Rate) {
        return a * std::log(a) - ln_gamma(a) + log_kernel - a * alpha;
    }
    return -ln_gamma(a) - a * std::log(a) + log_kernel - alpha / a;
}

inline double gamma_density(double alpha, const GammaPriorSpec& spec) {
    return std::exp(log_density(alpha, spec));
}

/// pi(alpha) proportional to 1. Not normalisable.
struct ImproperUniform {
    static constexpr bool proper = false;
};

inline double improper_density(double alpha) {
    if (!(alpha > 0.0)) {
        throw DomainError("improper_density: alpha must be positive");
    }
    return 1.0;
}

inline double log_density(double alpha, const ImproperUniform&) {
    return std::log(improper_density(alpha));
}

struct DistanceTableRow {
    double d;
    double alpha_lower;
    double dens_lower;
    double alpha_upper;
    double dens_upper;
};

inline std::vector<DistanceTableRow> distance_table(std::span<const double> distances,
                                                    const GammaPriorSpec& prior) {
    prior.validate();
    std::vector<DistanceTableRow> rows;
    rows.reserve(distances.size());
    for (double d : distances) {
        const double lo = alpha_from_distance(d, Branch::Lower);
        const double hi = alpha_from_distance(d, Branch::Upper);
        rows.push_back({d, lo, gamma_density(lo, prior), hi, gamma_density(hi, prior)});
    }
    return rows;
}

struct DistancePoint {
    double d;
    double density;
};

/// Density of d restricted to one branch: pi(alpha(d)) / |d'(alpha(d))|.
/// Integrates (over d) to the prior mass of that branch.
template <class ShapeDensity>
std::vector<DistancePoint> pushforward_to_distance(ShapeDensity&& shape_density, Branch branch,
                                                   std::span<const double> d_grid) {
    std::vector<DistancePoint> out;
    out.reserve(d_grid.size());
    for (double d : d_grid) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw DomainError("pushforward_to_distance: grid values must be finite and >= 0");
        }
        const double alpha = alpha_from_distance(d, branch);
        const double slope = (alpha == 1.0) ? kDistanceSlopeAtOne : std::abs(distance_deriv(alpha));
        out.push_back({d, shape_density(alpha) / slope});
    }
    return out;
}

inline std::vector<DistancePoint> prior_on_distance_scale(const GammaPriorSpec& prior, Branch branch,
                                                          std::span<const double> d_grid) {
    prior.validate();
    return pushforward_to_distance([&](double a) { return gamma_density(a, prior); }, branch,
                                   d_grid);
}

}  // namespace pcweibull
