#pragma once

// Penalised-complexity prior for the Weibull shape. The distance d(alpha) to
// the exponential model is given an Exp(theta) law; since d maps both (0, 1]
// and [1, inf) onto [0, inf), each branch receives half of the mass:
//
//   pi(alpha) = 1/2 * theta * exp(-theta d(alpha)) * |d'(alpha)|
//
// This is a proper density on (0, inf), and d(A) ~ Exp(theta) exactly.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pcweibull/divergence.hpp"
#include "pcweibull/errors.hpp"
#include "pcweibull/numerics.hpp"

namespace pcweibull {

inline constexpr double kDefaultTheta = 2.5;

struct PcPriorSpec {
    double theta = kDefaultTheta;

    void validate() const {
        if (!(theta > 0.0) || !std::isfinite(theta)) {
            throw DomainError("PcPriorSpec: theta must be positive and finite");
        }
    }
};

/// Tail statement P(d(alpha) > U) = p.
struct TailSpec {
    double upper;
    double prob;

    void validate() const {
        if (!(upper > 0.0) || !std::isfinite(upper)) {
            throw DomainError("TailSpec: U must be positive and finite");
        }
        if (!(prob > 0.0 && prob < 1.0)) {
            throw DomainError("TailSpec: p must lie in (0, 1)");
        }
    }
};

inline PcPriorSpec theta_from_tail(const TailSpec& tail) {
    tail.validate();
    return {-std::log(tail.prob) / tail.upper};
}

/// log pi(alpha). At alpha = 1 the one-sided limits agree and equal
/// log(theta * kDistanceSlopeAtOne / 2). Returns -inf below the shape floor.
inline double log_density(double alpha, const PcPriorSpec& spec) {
    spec.validate();
    if (!(alpha > 0.0)) {
        throw DomainError("pc log_density: alpha must be positive, got " + detail::fmt_num(alpha));
    }
    if (is_saturated(alpha)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double log_half_theta = std::log(0.5 * spec.theta);
    if (alpha == 1.0) {
        return log_half_theta + std::log(kDistanceSlopeAtOne);
    }
    if (std::isinf(alpha)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double d = distance(alpha).d;
    return log_half_theta - spec.theta * d + std::log(std::abs(distance_deriv(alpha)));
}

inline double density(double alpha, const PcPriorSpec& spec) {
    return std::exp(log_density(alpha, spec));
}

/// Log density of phi = log(alpha) under the same prior, built directly from
/// the distance as a function of phi. Equals log_density(e^phi) + phi.
inline double log_density_log_shape(double log_alpha, const PcPriorSpec& spec) {
    spec.validate();
    if (std::isnan(log_alpha)) {
        throw DomainError("pc log_density_log_shape: NaN argument");
    }
    if (log_alpha < std::log(kAlphaFloor)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double log_half_theta = std::log(0.5 * spec.theta);
    if (log_alpha == 0.0) {
        return log_half_theta + std::log(kDistanceSlopeAtOne);
    }
    const double d = distance_log_shape(log_alpha).d;
    return log_half_theta - spec.theta * d + std::log(std::abs(distance_deriv_log_shape(log_alpha)));
}

inline double cdf(double alpha, const PcPriorSpec& spec) {
    spec.validate();
    if (!(alpha > 0.0)) {
        throw DomainError("pc cdf: alpha must be positive, got " + detail::fmt_num(alpha));
    }
    if (std::isinf(alpha)) {
        return 1.0;
    }
    const DistanceValue dv = distance(alpha);
    const double tail = 0.5 * std::exp(-spec.theta * dv.d);
    return alpha <= 1.0 ? tail : 1.0 - tail;
}

inline double quantile(double q, const PcPriorSpec& spec) {
    spec.validate();
    if (!(q > 0.0 && q < 1.0)) {
        throw DomainError("pc quantile: q must lie in (0, 1), got " + detail::fmt_num(q));
    }
    if (q == 0.5) {
        return 1.0;
    }
    if (q < 0.5) {
        return alpha_from_distance(-std::log(2.0 * q) / spec.theta, Branch::Lower);
    }
    return alpha_from_distance(-std::log(2.0 * (1.0 - q)) / spec.theta, Branch::Upper);
}

struct PcSample {
    std::vector<double> alphas;
    /// Draws whose distance could not be mapped back to a representable shape
    /// and were redrawn.
    std::size_t saturated_draws = 0;
};

/// branch ~ Bernoulli(1/2), d ~ Exp(theta), alpha = alpha_from_distance(d, branch).
inline PcSample sample(std::size_t n, const PcPriorSpec& spec, Rng& rng) {
    spec.validate();
    if (n < 1) {
        throw DomainError("pc sample: n must be at least 1");
    }
    PcSample out;
    out.alphas.reserve(n);
    while (out.alphas.size() < n) {
        const Branch branch = rng.bernoulli(0.5) ? Branch::Upper : Branch::Lower;
        const double d = rng.exponential(spec.theta);
        try {
            out.alphas.push_back(alpha_from_distance(d, branch));
        } catch (const SaturationError&) {
            ++out.saturated_draws;
        }
    }
    return out;
}

inline PcSample sample(std::size_t n, const PcPriorSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    return sample(n, spec, rng);
}

}  // namespace pcweibull
