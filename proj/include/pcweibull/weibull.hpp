#pragma once

// Weibull sampling model in both parameterizations, the right-censored
// log-likelihood used for inference, and a seeded data simulator.
//
//   P1: f(y) = alpha y^(alpha-1) lambda exp(-lambda y^alpha)
//   P2: f(y) = (alpha/lambda) (y/lambda)^(alpha-1) exp(-(y/lambda)^alpha)
//
// Inference always uses P2 with lambda_i = exp(x_i' beta) on the scale, so a
// positive coefficient lengthens survival times.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcweibull/errors.hpp"
#include "pcweibull/numerics.hpp"

namespace pcweibull {

enum class Parameterization { P1, P2 };

struct WeibullParams {
    double alpha = 1.0;
    double lambda = 1.0;
    Parameterization parameterization = Parameterization::P2;

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw DomainError("WeibullParams: alpha must be positive and finite");
        }
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            throw DomainError("WeibullParams: lambda must be positive and finite");
        }
    }
};

namespace detail {

inline void require_positive_time(double y, const char* who) {
    if (!(y > 0.0)) {
        throw DomainError(std::string(who) + ": y must be positive, got " + fmt_num(y));
    }
}

}  // namespace detail

inline double log_density(double y, const WeibullParams& p) {
    detail::require_positive_time(y, "log_density");
    p.validate();
    if (std::isinf(y)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double log_y = std::log(y);
    if (p.parameterization == Parameterization::P1) {
        return std::log(p.alpha) + (p.alpha - 1.0) * log_y + std::log(p.lambda) -
               p.lambda * std::exp(p.alpha * log_y);
    }
    const double log_z = log_y - std::log(p.lambda);
    return std::log(p.alpha) - std::log(p.lambda) + (p.alpha - 1.0) * log_z -
           std::exp(p.alpha * log_z);
}

inline double density(double y, const WeibullParams& p) { return std::exp(log_density(y, p)); }

inline double log_survival(double y, const WeibullParams& p) {
    detail::require_positive_time(y, "log_survival");
    p.validate();
    if (p.parameterization == Parameterization::P1) {
        return -p.lambda * std::pow(y, p.alpha);
    }
    return -std::pow(y / p.lambda, p.alpha);
}

inline double survival(double y, const WeibullParams& p) { return std::exp(log_survival(y, p)); }

inline double log_hazard(double y, const WeibullParams& p) {
    detail::require_positive_time(y, "log_hazard");
    p.validate();
    const double log_y = std::log(y);
    if (p.parameterization == Parameterization::P1) {
        return std::log(p.alpha) + std::log(p.lambda) + (p.alpha - 1.0) * log_y;
    }
    return std::log(p.alpha) - p.alpha * std::log(p.lambda) + (p.alpha - 1.0) * log_y;
}

inline double hazard(double y, const WeibullParams& p) { return std::exp(log_hazard(y, p)); }

// ---------------------------------------------------------------------------
// Survival data

/// Right-censored survival data. events[i] == 1 marks an observed event,
/// 0 a censored time. Covariates are N x K; include an intercept column
/// explicitly if one is wanted.
struct SurvivalDataset {
    std::vector<double> times;
    std::vector<int> events;
    Eigen::MatrixXd covariates;

    std::size_t size() const noexcept { return times.size(); }
    Eigen::Index num_covariates() const noexcept { return covariates.cols(); }

    std::size_t num_events() const {
        std::size_t e = 0;
        for (int d : events) {
            e += (d == 1) ? 1 : 0;
        }
        return e;
    }

    void validate() const {
        const std::size_t n = times.size();
        if (events.size() != n || static_cast<std::size_t>(covariates.rows()) != n) {
            throw ShapeError("SurvivalDataset: times (" + std::to_string(n) + "), events (" +
                             std::to_string(events.size()) + ") and covariate rows (" +
                             std::to_string(covariates.rows()) + ") must have equal length");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!(times[i] > 0.0) || !std::isfinite(times[i])) {
                throw DomainError("SurvivalDataset: time at index " + std::to_string(i) +
                                  " must be positive and finite");
            }
            if (events[i] != 0 && events[i] != 1) {
                throw DomainError("SurvivalDataset: event at index " + std::to_string(i) +
                                  " must be 0 or 1");
            }
        }
        if (!covariates.allFinite()) {
            throw DomainError("SurvivalDataset: covariates must be finite");
        }
    }
};

/// Precomputed pieces of the P2 censored log-likelihood
///   sum_i d_i log f(y_i) + (1 - d_i) log S(y_i),  lambda_i = exp(x_i' beta)
/// which simplifies, with u_i = log y_i - x_i' beta, to
///   E log alpha + sum_i d_i (alpha u_i - log y_i) - sum_i exp(alpha u_i).
class CensoredLikelihood {
public:
    explicit CensoredLikelihood(const SurvivalDataset& data) : data_(&data) {
        data.validate();
        log_times_.resize(static_cast<Eigen::Index>(data.size()));
        events_.resize(static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            log_times_[k] = std::log(data.times[i]);
            events_[k] = static_cast<double>(data.events[i]);
            num_events_ += events_[k];
            event_log_time_sum_ += events_[k] * log_times_[k];
        }
    }

    const SurvivalDataset& data() const noexcept { return *data_; }
    const Eigen::VectorXd& log_times() const noexcept { return log_times_; }
    const Eigen::VectorXd& events() const noexcept { return events_; }
    double num_events() const noexcept { return num_events_; }
    double event_log_time_sum() const noexcept { return event_log_time_sum_; }

    /// Unchecked evaluation; may return -inf when exp(alpha u_i) overflows.
    double operator()(double alpha, const Eigen::VectorXd& beta) const {
        const Eigen::MatrixXd& x = data_->covariates;
        double total = num_events_ * std::log(alpha) - event_log_time_sum_;
        for (Eigen::Index i = 0; i < log_times_.size(); ++i) {
            const double u = log_times_[i] - (x.cols() > 0 ? x.row(i).dot(beta) : 0.0);
            total += events_[i] * alpha * u - std::exp(alpha * u);
        }
        return total;
    }

private:
    const SurvivalDataset* data_;
    Eigen::VectorXd log_times_;
    Eigen::VectorXd events_;
    double num_events_ = 0.0;
    double event_log_time_sum_ = 0.0;
};

/// Right-censored Weibull log-likelihood under P2 with lambda_i = exp(x_i' beta).
inline double censored_loglik(double alpha, const Eigen::VectorXd& beta,
                              const SurvivalDataset& data) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError("censored_loglik: alpha must be positive and finite");
    }
    data.validate();
    if (beta.size() != data.num_covariates()) {
        throw ShapeError("censored_loglik: beta has " + std::to_string(beta.size()) +
                         " entries but the design has " +
                         std::to_string(data.num_covariates()) + " columns");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double eta = data.num_covariates() > 0 ? data.covariates.row(k).dot(beta) : 0.0;
        double term;
        if (data.events[i] == 1) {
            const double log_z = std::log(data.times[i]) - eta;
            term = std::log(alpha) - eta + (alpha - 1.0) * log_z - std::exp(alpha * log_z);
        } else {
            term = -std::exp(alpha * (std::log(data.times[i]) - eta));
        }
        if (!std::isfinite(term) || !std::isfinite(eta)) {
            throw NumericError("censored_loglik: non-finite contribution at observation " +
                                   std::to_string(i),
                               i);
        }
        total += term;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Simulation

/// Design matrix with an intercept column followed by K-1 standard normal covariates.
inline Eigen::MatrixXd make_design(std::size_t n, Eigen::Index num_columns, std::uint64_t seed) {
    if (num_columns < 1) {
        throw DomainError("make_design: need at least the intercept column");
    }
    Rng rng(seed);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), num_columns);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < num_columns; ++j) {
            x(i, j) = rng.normal();
        }
    }
    return x;
}

/// Draws P2 Weibull event times by inverse CDF with lambda_i = exp(x_i' beta),
/// then independent exponential censoring whose rate is calibrated so the
/// expected censored fraction, given the drawn event times, equals censor_rate.
inline SurvivalDataset simulate(double alpha, const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                                double censor_rate, std::uint64_t seed) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError("simulate: alpha must be positive and finite");
    }
    if (!(censor_rate >= 0.0 && censor_rate < 1.0)) {
        throw DomainError("simulate: censor_rate must lie in [0, 1), got " +
                          detail::fmt_num(censor_rate));
    }
    if (x.rows() < 1) {
        throw DomainError("simulate: need n >= 1");
    }
    if (beta.size() != x.cols()) {
        throw ShapeError("simulate: beta length does not match design columns");
    }
    const Rng root(seed);
    Rng event_rng = root.split(1);
    Rng censor_rng = root.split(2);

    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::exp(x.row(static_cast<Eigen::Index>(i)).dot(beta));
        t[i] = scale * std::pow(event_rng.exponential(1.0), 1.0 / alpha);
    }

    SurvivalDataset out;
    out.covariates = x;
    out.times = t;
    out.events.assign(n, 1);
    if (censor_rate == 0.0) {
        out.validate();
        return out;
    }

    // P(C_i < T_i | T_i) = 1 - exp(-mu T_i); match its sample mean to censor_rate.
    auto censored_fraction = [&](double log_mu) {
        const double mu = std::exp(log_mu);
        double s = 0.0;
        for (double ti : t) {
            s += -std::expm1(-mu * ti);
        }
        return s / static_cast<double>(n) - censor_rate;
    };
    const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
    const double lo = std::log(1e-12 * censor_rate / *tmax);
    const double hi = std::log(50.0 / *tmin) - std::log1p(-censor_rate);
    const double mu = std::exp(find_root(censored_fraction, {lo, hi, 1e-12}));

    for (std::size_t i = 0; i < n; ++i) {
        const double c = censor_rng.exponential(mu);
        if (c < t[i]) {
            out.times[i] = c;
            out.events[i] = 0;
        }
    }
    out.validate();
    return out;
}

/// Convenience overload: intercept + standard normal covariates, K = beta.size().
inline SurvivalDataset simulate(double alpha, const Eigen::VectorXd& beta, std::size_t n,
                                double censor_rate, std::uint64_t seed) {
    if (n < 1) {
        throw DomainError("simulate: need n >= 1");
    }
    const Eigen::MatrixXd x =
        make_design(n, beta.size(), detail::splitmix64(seed ^ 0xD1B54A32D192ED03ULL));
    return simulate(alpha, beta, x, censor_rate, seed);
}

}  // namespace pcweibull
