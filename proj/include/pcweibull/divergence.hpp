#pragma once

// Kullback-Leibler divergence from a Weibull model to its exponential base
// model (alpha = 1, same scale), the distance d(alpha) = sqrt(2 KLD), its
// derivative, and the inverse map from a distance back to a shape.
//
// For the scale-form parameterization the divergence does not depend on the
// scale and can be written as
//
//   KLD(alpha) = log(alpha) - (1 + gamma) + Gamma(1 + 1/alpha) + gamma / alpha
//
// which stays finite for very large alpha (everything is evaluated from
// log(alpha)). Within |alpha - 1| < 0.1 the O(1) terms cancel to O((alpha-1)^2),
// so a series around alpha = 1 is used instead.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pcweibull/errors.hpp"
#include "pcweibull/numerics.hpp"

namespace pcweibull {

/// Smallest shape for which the divergence is evaluated. Gamma(1/alpha)
/// overflows near alpha = 1/171; below the floor results are flagged saturated.
inline constexpr double kAlphaFloor = 0.01;

/// Limit of |d'(alpha)| at alpha = 1: sqrt((1 - gamma)^2 + pi^2 / 6).
inline const double kDistanceSlopeAtOne =
    std::sqrt((1.0 - kEulerGamma) * (1.0 - kEulerGamma) + std::numbers::pi * std::numbers::pi / 6.0);

enum class Branch { Lower, Upper };

inline Branch branch_of(double alpha) { return alpha <= 1.0 ? Branch::Lower : Branch::Upper; }

inline const char* to_string(Branch b) { return b == Branch::Lower ? "lower" : "upper"; }

/// d >= 0, zero only at alpha = 1. `saturated` marks alpha below kAlphaFloor,
/// in which case d is +inf.
struct DistanceValue {
    double d = 0.0;
    Branch branch = Branch::Lower;
    bool saturated = false;
};

inline bool is_saturated(double alpha) { return alpha < kAlphaFloor; }

namespace detail {

// zeta(k), k = 2..41
inline constexpr std::array<double, 40> kZeta = {
    1.6449340668482264365, 1.2020569031595942854, 1.0823232337111381915, 1.0369277551433699263,
    1.0173430619844491397, 1.0083492773819228268, 1.0040773561979443394, 1.0020083928260822144,
    1.0009945751278180853, 1.0004941886041194646, 1.0002460865533080483, 1.0001227133475784891,
    1.0000612481350587048, 1.0000305882363070205, 1.0000152822594086519, 1.0000076371976378998,
    1.0000038172932649998, 1.0000019082127165539, 1.0000009539620338728, 1.0000004769329867878,
    1.0000002384505027277, 1.0000001192199259653, 1.0000000596081890513, 1.0000000298035035147,
    1.0000000149015548284, 1.0000000074507117898, 1.0000000037253340248, 1.0000000018626597235,
    1.0000000009313274324, 1.0000000004656629065, 1.0000000002328311834, 1.0000000001164155017,
    1.0000000000582077209, 1.0000000000291038504, 1.0000000000145519219, 1.0000000000072759598,
    1.0000000000036379795, 1.0000000000018189897, 1.0000000000009094948, 1.0000000000004547474};

// exp(x) - 1 - x without cancellation for small x
inline double expm1_minus_x(double x) {
    if (std::abs(x) >= 0.1) {
        return std::expm1(x) - x;
    }
    double term = x * x / 2.0;
    double sum = term;
    for (int k = 3; k < 30; ++k) {
        term *= x / k;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

// log(1 + x) - x without cancellation for small x
inline double log1p_minus_x(double x) {
    if (std::abs(x) >= 0.1) {
        return std::log1p(x) - x;
    }
    double power = x;
    double sum = 0.0;
    for (int k = 2; k < 60; ++k) {
        power *= -x;
        const double term = power / k;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

/// KLD and its derivative with respect to log(alpha).
struct KldEval {
    double kld;
    double dkld_dlog;
};

// Series form around alpha = 1 + e, |e| < 0.1. With delta = 1/alpha - 1,
//   lnGamma(1 + delta) = -gamma delta + R(delta),  R = sum_{k>=2} (-1)^k zeta(k) delta^k / k
// and alpha * KLD = g(e) rearranges to a sum of O(e^2) pieces:
//   g = -gamma e^2/(1+e) + R + (e^L - 1 - L) + e^2 + (1+e)(log(1+e) - e),  L = lnGamma(1/alpha).
inline KldEval kld_near_one(double e) {
    const double alpha = 1.0 + e;
    const double delta = -e / alpha;
    double r = 0.0;
    double r_prime = 0.0;
    double power = delta;  // delta^(k-1)
    for (std::size_t i = 0; i < kZeta.size(); ++i) {
        const int k = static_cast<int>(i) + 2;
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        r_prime += sign * kZeta[i] * power;
        power *= delta;
        r += sign * kZeta[i] * power / k;
    }
    const double big_l = -kEulerGamma * delta + r;
    const double g = -kEulerGamma * e * e / alpha + r + expm1_minus_x(big_l) + e * e +
                     alpha * log1p_minus_x(e);
    const double ddelta = -1.0 / (alpha * alpha);
    const double dl = (-kEulerGamma + r_prime) * ddelta;
    const double dg = -kEulerGamma * (2.0 * e + e * e) / (alpha * alpha) + r_prime * ddelta +
                      std::expm1(big_l) * dl + log1p_minus_x(e) + e;
    const double kld = g / alpha;
    // dK/dlog(alpha) = alpha * dK/dalpha = g' - K
    return {kld, dg - kld};
}

inline KldEval kld_far(double log_alpha) {
    const double inv = std::exp(-log_alpha);
    const double gamma_term = std::exp(ln_gamma(1.0 + inv));
    const double kld = log_alpha - (1.0 + kEulerGamma) + gamma_term + kEulerGamma * inv;
    const double dkld = 1.0 - (gamma_term * digamma(1.0 + inv) + kEulerGamma) * inv;
    return {kld, dkld};
}

inline const double kLogAlphaFloor = std::log(kAlphaFloor);

/// Evaluate from log(alpha). Caller guarantees log_alpha >= log(kAlphaFloor).
inline KldEval kld_from_log(double log_alpha) {
    const double e = std::expm1(log_alpha);
    return std::abs(e) < 0.1 ? kld_near_one(e) : kld_far(log_alpha);
}

/// Evaluate from alpha; uses alpha - 1 directly near one.
inline KldEval kld_from_alpha(double alpha) {
    const double e = alpha - 1.0;
    return std::abs(e) < 0.1 ? kld_near_one(e) : kld_far(std::log(alpha));
}

inline void require_positive_shape(double alpha, const char* who) {
    if (!(alpha > 0.0)) {
        throw DomainError(std::string(who) + ": alpha must be positive, got " + fmt_num(alpha));
    }
}

// Below |alpha - 1| = 1e-100 the series KLD underflows; use the linear limit.
inline constexpr double kLinearZone = 1e-100;

inline double distance_from(const KldEval& k, double e) {
    if (std::abs(e) < kLinearZone) {
        return kDistanceSlopeAtOne * std::abs(e);
    }
    return std::sqrt(2.0 * std::max(k.kld, 0.0));
}

// dd/dlog(alpha); e != 0
inline double distance_log_slope(const KldEval& k, double e) {
    if (std::abs(e) < kLinearZone) {
        return std::copysign(kDistanceSlopeAtOne, e);
    }
    return k.dkld_dlog / std::sqrt(2.0 * k.kld);
}

}  // namespace detail

/// KLD from Weibull(alpha, lambda) to Weibull(1, lambda) in the rate-form
/// parameterization f(y) = alpha y^(alpha-1) lambda exp(-lambda y^alpha).
/// Depends on lambda. Returns +inf below kAlphaFloor.
inline double kld_p1(double alpha, double lambda) {
    detail::require_positive_shape(alpha, "kld_p1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("kld_p1: lambda must be positive and finite");
    }
    if (is_saturated(alpha)) {
        return std::numeric_limits<double>::infinity();
    }
    const double base = detail::kld_from_alpha(alpha).kld;
    // Difference to the scale-form divergence:
    //   [ (lambda^(1 - 1/alpha) - 1) Gamma(1/alpha) + (1 - alpha) log(lambda) ] / alpha
    const double log_lambda = std::log(lambda);
    const double gamma_inv = std::exp(ln_gamma(1.0 / alpha));
    const double shift = std::expm1((1.0 - 1.0 / alpha) * log_lambda) * gamma_inv +
                         (1.0 - alpha) * log_lambda;
    return base + shift / alpha;
}

/// KLD from Weibull(alpha, lambda) to the exponential with the same scale in the
/// scale-form parameterization. Independent of lambda; zero only at alpha = 1.
/// Returns +inf (saturated) below kAlphaFloor.
inline double kld_p2(double alpha) {
    detail::require_positive_shape(alpha, "kld_p2");
    if (is_saturated(alpha)) {
        return std::numeric_limits<double>::infinity();
    }
    return std::max(detail::kld_from_alpha(alpha).kld, 0.0);
}

inline DistanceValue distance(double alpha) {
    detail::require_positive_shape(alpha, "distance");
    if (is_saturated(alpha)) {
        return {std::numeric_limits<double>::infinity(), Branch::Lower, true};
    }
    const double e = alpha - 1.0;
    return {detail::distance_from(detail::kld_from_alpha(alpha), e), branch_of(alpha), false};
}

/// Distance as a function of phi = log(alpha). Never overflows on the upper side.
inline DistanceValue distance_log_shape(double log_alpha) {
    if (std::isnan(log_alpha)) {
        throw DomainError("distance_log_shape: NaN argument");
    }
    if (log_alpha < detail::kLogAlphaFloor) {
        return {std::numeric_limits<double>::infinity(), Branch::Lower, true};
    }
    const double e = std::expm1(log_alpha);
    return {detail::distance_from(detail::kld_from_log(log_alpha), e),
            log_alpha <= 0.0 ? Branch::Lower : Branch::Upper, false};
}

/// Analytic d'(alpha). Negative below one, positive above; undefined at alpha = 1.
inline double distance_deriv(double alpha) {
    detail::require_positive_shape(alpha, "distance_deriv");
    if (alpha == 1.0) {
        throw DomainError("distance_deriv: d(alpha) is not differentiable at alpha = 1");
    }
    if (is_saturated(alpha)) {
        throw SaturationError("distance_deriv: alpha below the shape floor " +
                              detail::fmt_num(kAlphaFloor));
    }
    const double e = alpha - 1.0;
    return detail::distance_log_slope(detail::kld_from_alpha(alpha), e) / alpha;
}

/// dd/dphi for phi = log(alpha), phi != 0.
inline double distance_deriv_log_shape(double log_alpha) {
    if (log_alpha == 0.0) {
        throw DomainError("distance_deriv_log_shape: not differentiable at alpha = 1");
    }
    if (std::isnan(log_alpha)) {
        throw DomainError("distance_deriv_log_shape: NaN argument");
    }
    if (log_alpha < detail::kLogAlphaFloor) {
        throw SaturationError("distance_deriv_log_shape: alpha below the shape floor");
    }
    const double e = std::expm1(log_alpha);
    return detail::distance_log_slope(detail::kld_from_log(log_alpha), e);
}

/// The unique log(alpha) on `branch` whose distance equals d.
/// Throws SaturationError when d lies beyond the lower-branch shape floor.
inline double log_alpha_from_distance(double d, Branch branch) {
    if (!(d >= 0.0)) {
        throw DomainError("alpha_from_distance: distance must be non-negative, got " +
                          detail::fmt_num(d));
    }
    if (d == 0.0) {
        return 0.0;
    }
    auto residual = [d](double phi) { return distance_log_shape(phi).d - d; };
    const double tol = 1e-13 * std::min(1.0, d);
    if (branch == Branch::Lower) {
        const double d_floor = distance_log_shape(detail::kLogAlphaFloor).d;
        if (d > d_floor) {
            throw SaturationError("alpha_from_distance: distance " + detail::fmt_num(d) +
                                  " lies beyond the lower-branch floor alpha = " +
                                  detail::fmt_num(kAlphaFloor));
        }
        if (d == d_floor) {
            return detail::kLogAlphaFloor;
        }
        return find_root(residual, {detail::kLogAlphaFloor, 0.0, tol});
    }
    double hi = 1.0;
    while (distance_log_shape(hi).d <= d) {
        hi *= 2.0;
        if (!std::isfinite(hi) || hi > 1e300) {
            throw SaturationError("alpha_from_distance: distance " + detail::fmt_num(d) +
                                  " is beyond the representable range");
        }
    }
    return find_root(residual, {0.0, hi, tol});
}

inline double alpha_from_distance(double d, Branch branch) {
    static const double log_max = std::log(std::numeric_limits<double>::max());
    const double log_alpha = log_alpha_from_distance(d, branch);
    if (log_alpha >= log_max) {
        throw SaturationError("alpha_from_distance: distance " + detail::fmt_num(d) +
                              " maps beyond the largest representable alpha");
    }
    return std::exp(log_alpha);
}

}  // namespace pcweibull
