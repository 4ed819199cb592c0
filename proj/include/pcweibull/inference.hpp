#pragma once

// Bayesian Weibull proportional-hazards regression with right censoring.
//
// Model: y_i ~ Weibull(alpha, lambda_i) in the scale form, lambda_i = exp(x_i' beta),
// independent priors pi(alpha) and beta_j ~ N(0, sd_j^2). The posterior is
// restricted to alpha in cfg.alpha_range for every engine.
//
// Two engines:
//   Grid - tensor grid over alpha x beta (K <= 2), trapezoid rule. Windows come
//          from a Laplace fit of the likelihood and beta prior and cover +-W
//          marginal standard deviations, which contains the whole Mahalanobis
//          ball of radius W.
//   Mcmc - random-walk Metropolis on (log alpha, beta) with the log-Jacobian,
//          Laplace-shaped proposal, scale adapted during burn-in then frozen.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "pcweibull/divergence.hpp"
#include "pcweibull/errors.hpp"
#include "pcweibull/numerics.hpp"
#include "pcweibull/pc_prior.hpp"
#include "pcweibull/reference_priors.hpp"
#include "pcweibull/weibull.hpp"

namespace pcweibull {

using AlphaPrior = std::variant<PcPriorSpec, GammaPriorSpec, ImproperUniform>;

inline double log_prior_density(double alpha, const AlphaPrior& prior) {
    return std::visit([&](const auto& p) { return log_density(alpha, p); }, prior);
}

inline std::string describe(const AlphaPrior& prior) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PcPriorSpec>) {
                return "pc(theta=" + detail::fmt_num(p.theta) + ")";
            } else if constexpr (std::is_same_v<T, GammaPriorSpec>) {
                return "gamma(a=" + detail::fmt_num(p.a) + ", " +
                       (p.convention == GammaConvention::Rate ? "rate" : "scale") + ")";
            } else {
                return "improper-uniform";
            }
        },
        prior);
}

inline constexpr double kDefaultBetaSd = 10.0;

struct PriorChoice {
    AlphaPrior alpha_prior = PcPriorSpec{};
    /// One entry per coefficient, or a single entry used for all of them.
    std::vector<double> beta_prior_sd = {kDefaultBetaSd};

    void validate() const {
        std::visit(
            [](const auto& p) {
                if constexpr (requires { p.validate(); }) {
                    p.validate();
                }
            },
            alpha_prior);
        if (beta_prior_sd.empty()) {
            throw DomainError("PriorChoice: beta_prior_sd must not be empty");
        }
        for (double s : beta_prior_sd) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw DomainError("PriorChoice: beta_prior_sd entries must be positive, got " +
                                  detail::fmt_num(s));
            }
        }
    }

    Eigen::VectorXd beta_sd(Eigen::Index k) const {
        if (beta_prior_sd.size() == 1) {
            return Eigen::VectorXd::Constant(k, beta_prior_sd[0]);
        }
        if (static_cast<Eigen::Index>(beta_prior_sd.size()) != k) {
            throw ShapeError("PriorChoice: " + std::to_string(beta_prior_sd.size()) +
                             " beta prior sds for " + std::to_string(k) + " coefficients");
        }
        return Eigen::Map<const Eigen::VectorXd>(beta_prior_sd.data(), k);
    }
};

enum class Engine { Grid, Mcmc, Both };

inline const char* to_string(Engine e) {
    switch (e) {
        case Engine::Grid: return "grid";
        case Engine::Mcmc: return "mcmc";
        case Engine::Both: return "both";
    }
    return "?";
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct FitConfig {
    Engine engine = Engine::Grid;
    Interval alpha_range{0.05, 20.0};
    std::size_t grid_points = 400;       // alpha axis
    std::size_t beta_grid_points = 200;  // each beta axis
    std::size_t mcmc_iters = 50000;
    std::size_t burn_in = 10000;
    std::uint64_t seed = 1;
    double credible_level = 0.95;
    double window_sds = 10.0;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const {
        if (!(alpha_range.lo >= kAlphaFloor && alpha_range.lo < 1.0 && alpha_range.hi > 1.0 &&
              std::isfinite(alpha_range.hi))) {
            throw DomainError("FitConfig: alpha_range must satisfy " +
                              detail::fmt_num(kAlphaFloor) + " <= lo < 1 < hi < inf");
        }
        if (grid_points < 50 || beta_grid_points < 50) {
            throw DomainError("FitConfig: grid_points must be at least 50 per dimension");
        }
        if (!(burn_in < mcmc_iters)) {
            throw DomainError("FitConfig: burn_in must be smaller than mcmc_iters");
        }
        if (!(credible_level > 0.0 && credible_level < 1.0)) {
            throw DomainError("FitConfig: credible_level must lie in (0, 1)");
        }
        if (!(window_sds >= 4.0)) {
            throw DomainError("FitConfig: window_sds must be at least 4");
        }
    }
};

struct MarginalPoint {
    double x = 0.0;
    double density = 0.0;
};

struct ParameterSummary {
    double mode = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    Interval ci;
    std::vector<MarginalPoint> marginal;
};

struct Diagnostics {
    std::optional<double> acceptance_rate;
    std::optional<double> ess;  // minimum over parameters
    std::optional<double> proposal_scale;
    std::optional<double> grid_mass_captured;
    std::optional<double> mcmc_alpha_mean;
    std::optional<double> engine_gap;
    std::size_t draws = 0;
    std::vector<std::string> warnings;
};

struct PosteriorResult {
    std::vector<MarginalPoint> alpha_marginal;
    double alpha_mode = 0.0;
    double alpha_mean = 0.0;
    double alpha_sd = 0.0;
    Interval alpha_ci;
    std::vector<ParameterSummary> beta;
    Engine engine_used = Engine::Grid;
    double credible_level = 0.95;
    Diagnostics diagnostics;
    /// Post burn-in alpha draws; MCMC only.
    std::vector<double> alpha_draws;

    /// Trapezoid integral of alpha_marginal.
    double marginal_mass() const {
        double m = 0.0;
        for (std::size_t i = 1; i < alpha_marginal.size(); ++i) {
            m += 0.5 * (alpha_marginal[i].density + alpha_marginal[i - 1].density) *
                 (alpha_marginal[i].x - alpha_marginal[i - 1].x);
        }
        return m;
    }

    /// Posterior probability of lo < alpha < hi. Uses the draws when present,
    /// otherwise the piecewise-linear marginal.
    double alpha_probability(double lo, double hi) const {
        if (!alpha_draws.empty()) {
            std::size_t in = 0;
            for (double a : alpha_draws) {
                in += (a > lo && a < hi) ? 1 : 0;
            }
            return static_cast<double>(in) / static_cast<double>(alpha_draws.size());
        }
        double p = 0.0;
        for (std::size_t i = 1; i < alpha_marginal.size(); ++i) {
            const MarginalPoint& a = alpha_marginal[i - 1];
            const MarginalPoint& b = alpha_marginal[i];
            const double l = std::max(lo, a.x);
            const double r = std::min(hi, b.x);
            if (r <= l) {
                continue;
            }
            const double slope = (b.density - a.density) / (b.x - a.x);
            const double fl = a.density + slope * (l - a.x);
            const double fr = a.density + slope * (r - a.x);
            p += 0.5 * (fl + fr) * (r - l);
        }
        return p;
    }
};

// ---------------------------------------------------------------------------
// Log posterior

namespace detail {

inline void require_beta_length(const Eigen::VectorXd& beta, const SurvivalDataset& data,
                                const char* who) {
    if (beta.size() != data.num_covariates()) {
        throw ShapeError(std::string(who) + ": beta has " + std::to_string(beta.size()) +
                         " entries but the design has " + std::to_string(data.num_covariates()) +
                         " columns");
    }
}

inline double gaussian_log_prior(const Eigen::VectorXd& beta, const Eigen::VectorXd& sd) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double z = beta[j] / sd[j];
        s += -0.5 * z * z - std::log(sd[j]) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return s;
}

}  // namespace detail

/// censored log-likelihood + log pi(alpha) + sum_j log N(beta_j; 0, sd_j^2).
inline double log_posterior(double alpha, const Eigen::VectorXd& beta, const SurvivalDataset& data,
                            const PriorChoice& prior) {
    prior.validate();
    detail::require_beta_length(beta, data, "log_posterior");
    const double ll = censored_loglik(alpha, beta, data);
    const double lp = log_prior_density(alpha, prior.alpha_prior);
    const double total = ll + lp + detail::gaussian_log_prior(beta, prior.beta_sd(beta.size()));
    if (std::isnan(total) || total == std::numeric_limits<double>::infinity()) {
        throw NumericError("log_posterior: non-finite value at alpha = " + detail::fmt_num(alpha));
    }
    return total;
}

/// Gradient of log_posterior with respect to beta.
inline Eigen::VectorXd log_posterior_grad_beta(double alpha, const Eigen::VectorXd& beta,
                                               const SurvivalDataset& data,
                                               const PriorChoice& prior) {
    prior.validate();
    data.validate();
    detail::require_beta_length(beta, data, "log_posterior_grad_beta");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError("log_posterior_grad_beta: alpha must be positive and finite");
    }
    const Eigen::MatrixXd& x = data.covariates;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double u = std::log(data.times[i]) - x.row(k).dot(beta);
        const double w = std::exp(alpha * u);
        if (!std::isfinite(w)) {
            throw NumericError("log_posterior_grad_beta: overflow at observation " +
                                   std::to_string(i),
                               i);
        }
        g += alpha * (w - static_cast<double>(data.events[i])) * x.row(k).transpose();
    }
    const Eigen::VectorXd sd = prior.beta_sd(beta.size());
    return g - beta.cwiseQuotient(sd.cwiseProduct(sd));
}

namespace detail {

// Cached data and beta prior; evaluation in (phi = log alpha, beta).
class PosteriorKernel {
public:
    PosteriorKernel(const SurvivalDataset& data, const PriorChoice& prior)
        : x_(data.covariates), prior_(prior) {
        data.validate();
        prior.validate();
        const auto n = static_cast<Eigen::Index>(data.size());
        logy_.resize(n);
        d_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            logy_[i] = std::log(data.times[static_cast<std::size_t>(i)]);
            d_[i] = static_cast<double>(data.events[static_cast<std::size_t>(i)]);
        }
        events_ = d_.sum();
        if (events_ < 1.0) {
            throw DomainError("posterior: the data contain no observed events");
        }
        sum_d_logy_ = (d_ * logy_).sum();
        sdx_ = x_.transpose() * d_.matrix();
        sd_ = prior.beta_sd(x_.cols());
        inv_var_ = sd_.cwiseProduct(sd_).cwiseInverse();
        beta_log_norm_ = 0.0;
        for (Eigen::Index j = 0; j < sd_.size(); ++j) {
            beta_log_norm_ += -std::log(sd_[j]) - 0.5 * std::log(2.0 * std::numbers::pi);
        }
        for (Eigen::Index j = 0; j < x_.cols(); ++j) {
            const double v = x_(0, j);
            if (v != 0.0 && (x_.col(j).array() == v).all()) {
                const_col_ = j;
                const_val_ = v;
                break;
            }
        }
    }

    Eigen::Index k() const { return x_.cols(); }
    Eigen::Index n() const { return logy_.size(); }
    const Eigen::MatrixXd& x() const { return x_; }
    const Eigen::ArrayXd& logy() const { return logy_; }
    double events() const { return events_; }
    double sum_d_logy() const { return sum_d_logy_; }
    const Eigen::VectorXd& sdx() const { return sdx_; }
    const Eigen::VectorXd& inv_var() const { return inv_var_; }
    double beta_log_norm() const { return beta_log_norm_; }
    Eigen::Index const_col() const { return const_col_; }
    double const_val() const { return const_val_; }
    const AlphaPrior& alpha_prior() const { return prior_.alpha_prior; }

    double beta_log_prior(const Eigen::VectorXd& beta) const {
        return -0.5 * beta.cwiseAbs2().dot(inv_var_) + beta_log_norm_;
    }

    /// Log-likelihood plus beta prior; -inf on overflow.
    double loglik_beta(double alpha, const Eigen::VectorXd& beta) const {
        const Eigen::ArrayXd u = k() > 0 ? (logy_ - (x_ * beta).array()).eval() : logy_;
        const double s = (alpha * u).exp().sum();
        const double v = events_ * std::log(alpha) - sum_d_logy_ + alpha * (d_ * u).sum() - s +
                         beta_log_prior(beta);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    }

    /// Full log posterior density of (phi, beta), Jacobian included.
    double log_target(double phi, const Eigen::VectorXd& beta) const {
        const double alpha = std::exp(phi);
        return loglik_beta(alpha, beta) + log_prior_density(alpha, prior_.alpha_prior) + phi;
    }

    struct Derivs {
        double value;
        Eigen::VectorXd grad;  // (phi, beta)
        Eigen::MatrixXd hess;
    };

    /// Log-likelihood + beta prior with derivatives in (phi, beta). The alpha
    /// prior is left out so that every alpha prior sees the same windows.
    Derivs derivs(double phi, const Eigen::VectorXd& beta) const {
        const double alpha = std::exp(phi);
        const Eigen::Index kk = k();
        const Eigen::ArrayXd u = kk > 0 ? (logy_ - (x_ * beta).array()).eval() : logy_;
        const Eigen::ArrayXd w = (alpha * u).exp();
        const double sdu = (d_ * u).sum();
        const double swu = (w * u).sum();
        Derivs out;
        out.value = events_ * phi - sum_d_logy_ + alpha * sdu - w.sum() + beta_log_prior(beta);
        out.grad.resize(kk + 1);
        out.hess.resize(kk + 1, kk + 1);
        out.grad[0] = events_ + alpha * sdu - alpha * swu;
        out.hess(0, 0) = alpha * sdu - alpha * swu - alpha * alpha * (w * u * u).sum();
        if (kk > 0) {
            const Eigen::VectorXd xw = x_.transpose() * w.matrix();
            const Eigen::VectorXd xwu = x_.transpose() * (w * u).matrix();
            out.grad.tail(kk) = -alpha * sdx_ + alpha * xw - beta.cwiseProduct(inv_var_);
            const Eigen::VectorXd cross = -alpha * sdx_ + alpha * xw + alpha * alpha * xwu;
            out.hess.block(0, 1, 1, kk) = cross.transpose();
            out.hess.block(1, 0, kk, 1) = cross;
            Eigen::MatrixXd xtwx = x_.transpose() * (x_.array().colwise() * w).matrix();
            out.hess.block(1, 1, kk, kk) = -alpha * alpha * xtwx;
            out.hess.block(1, 1, kk, kk).diagonal() -= inv_var_;
        }
        return out;
    }

private:
    Eigen::MatrixXd x_;
    PriorChoice prior_;
    Eigen::ArrayXd logy_;
    Eigen::ArrayXd d_;
    double events_ = 0.0;
    double sum_d_logy_ = 0.0;
    Eigen::VectorXd sdx_;
    Eigen::VectorXd sd_;
    Eigen::VectorXd inv_var_;
    double beta_log_norm_ = 0.0;
    Eigen::Index const_col_ = -1;
    double const_val_ = 0.0;
};

struct LaplaceFit {
    Eigen::VectorXd mode;  // (phi, beta) or beta alone when phi is held fixed
    Eigen::MatrixXd cov;
    bool converged = false;
};

// Damped Newton on the log-likelihood + beta prior. With fixed_phi set, only
// beta moves.
inline LaplaceFit laplace_fit(const PosteriorKernel& kernel, std::optional<double> fixed_phi = {}) {
    const Eigen::Index kk = kernel.k();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(kk + 1);
    theta[0] = fixed_phi.value_or(0.0);
    if (kernel.const_col() >= 0) {
        // exponential MLE of the scale as a starting point
        const double total = kernel.logy().exp().sum();
        theta[1 + kernel.const_col()] = std::log(total / kernel.events()) / kernel.const_val();
    }
    const Eigen::Index off = fixed_phi ? 1 : 0;
    const Eigen::Index dim = kk + 1 - off;

    auto eval = [&](const Eigen::VectorXd& t) {
        return kernel.derivs(t[0], t.tail(kk));
    };
    LaplaceFit fit;
    auto cur = eval(theta);
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::VectorXd g = cur.grad.tail(dim);
        const Eigen::MatrixXd neg_h = -cur.hess.bottomRightCorner(dim, dim);
        if (g.lpNorm<Eigen::Infinity>() < 1e-9 * (1.0 + std::abs(cur.value))) {
            fit.converged = true;
            break;
        }
        Eigen::VectorXd step;
        double mu = 0.0;
        for (int attempt = 0; attempt < 60; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt(neg_h +
                                            mu * Eigen::MatrixXd::Identity(dim, dim));
            if (llt.info() == Eigen::Success) {
                step = llt.solve(g);
                break;
            }
            mu = mu == 0.0 ? 1e-6 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff()) : mu * 10.0;
        }
        if (step.size() == 0) {
            step = g;
        }
        const double biggest = step.cwiseAbs().maxCoeff();
        if (biggest > 2.0) {
            step *= 2.0 / biggest;
        }
        double t = 1.0;
        bool moved = false;
        while (t > 1e-12) {
            Eigen::VectorXd trial = theta;
            trial.tail(dim) += t * step;
            auto next = eval(trial);
            if (std::isfinite(next.value) && next.value >= cur.value + 1e-4 * t * g.dot(step)) {
                theta = trial;
                cur = std::move(next);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) {
            fit.converged = g.lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + std::abs(cur.value));
            break;
        }
    }
    if (!std::isfinite(cur.value)) {
        throw NumericError("posterior mode search produced a non-finite value");
    }
    fit.mode = theta.tail(dim);
    const Eigen::MatrixXd neg_h = -cur.hess.bottomRightCorner(dim, dim);
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() != Eigen::Success) {
        throw NumericError("posterior curvature at the mode is not negative definite");
    }
    fit.cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    return fit;
}

struct Axis {
    std::vector<double> x;
    std::vector<double> w;  // trapezoid weights
};

inline Axis make_axis(double lo, double hi, std::size_t n) {
    Axis a;
    a.x.resize(n);
    a.w.resize(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        a.x[i] = (i + 1 == n) ? hi : lo + h * static_cast<double>(i);
        a.w[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    }
    return a;
}

struct RowResult {
    double log_max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;                            // relative to log_max
    std::vector<std::vector<double>> beta_marg;  // relative to log_max
};

// Integrates the posterior over the beta tensor grid at a single alpha.
// A constant design column (intercept) factors out of sum_i exp(alpha u_i),
// so only the other columns need a pass over the data.
inline RowResult eval_row(const PosteriorKernel& kernel, double alpha, double log_prior_alpha,
                          const std::vector<Axis>& axes) {
    const Eigen::Index kk = kernel.k();
    const Eigen::Index c = kernel.const_col();
    std::vector<Eigen::Index> free_dims;
    for (Eigen::Index j = 0; j < kk; ++j) {
        if (j != c) {
            free_dims.push_back(j);
        }
    }
    const std::size_t inner = c >= 0 ? axes[static_cast<std::size_t>(c)].x.size() : 1;
    std::size_t outer = 1;
    for (Eigen::Index j : free_dims) {
        outer *= axes[static_cast<std::size_t>(j)].x.size();
    }
    std::vector<double> values(outer * inner);
    const double base = kernel.events() * std::log(alpha) - kernel.sum_d_logy() +
                        alpha * kernel.sum_d_logy() + log_prior_alpha + kernel.beta_log_norm();
    const Eigen::VectorXd& inv_var = kernel.inv_var();
    const Eigen::VectorXd& sdx = kernel.sdx();

    std::vector<std::size_t> idx(free_dims.size(), 0);
    Eigen::ArrayXd u(kernel.n());
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < outer; ++o) {
        // decode the free multi-index, first free dimension slowest
        std::size_t rem = o;
        for (std::size_t f = free_dims.size(); f-- > 0;) {
            const std::size_t len = axes[static_cast<std::size_t>(free_dims[f])].x.size();
            idx[f] = rem % len;
            rem /= len;
        }
        u = kernel.logy();
        double lin = 0.0;
        double quad = 0.0;
        for (std::size_t f = 0; f < free_dims.size(); ++f) {
            const Eigen::Index j = free_dims[f];
            const double b = axes[static_cast<std::size_t>(j)].x[idx[f]];
            u -= b * kernel.x().col(j).array();
            lin += b * sdx[j];
            quad += b * b * inv_var[j];
        }
        const double log_s = std::log((alpha * u).exp().sum());
        for (std::size_t i = 0; i < inner; ++i) {
            double l = lin;
            double q = quad;
            double log_sum = log_s;
            if (c >= 0) {
                const double b = axes[static_cast<std::size_t>(c)].x[i];
                l += b * sdx[c];
                q += b * b * inv_var[c];
                log_sum -= alpha * kernel.const_val() * b;
            }
            double v = base - alpha * l - std::exp(log_sum) - 0.5 * q;
            if (!std::isfinite(v)) {
                v = -std::numeric_limits<double>::infinity();
            }
            values[o * inner + i] = v;
            row_max = std::max(row_max, v);
        }
    }

    RowResult r;
    r.log_max = row_max;
    r.beta_marg.resize(static_cast<std::size_t>(kk));
    for (Eigen::Index j = 0; j < kk; ++j) {
        r.beta_marg[static_cast<std::size_t>(j)].assign(axes[static_cast<std::size_t>(j)].x.size(),
                                                        0.0);
    }
    if (!std::isfinite(row_max)) {
        return r;
    }
    std::vector<std::size_t> full(static_cast<std::size_t>(kk), 0);
    for (std::size_t o = 0; o < outer; ++o) {
        std::size_t rem = o;
        for (std::size_t f = free_dims.size(); f-- > 0;) {
            const std::size_t len = axes[static_cast<std::size_t>(free_dims[f])].x.size();
            full[static_cast<std::size_t>(free_dims[f])] = rem % len;
            rem /= len;
        }
        for (std::size_t i = 0; i < inner; ++i) {
            if (c >= 0) {
                full[static_cast<std::size_t>(c)] = i;
            }
            const double e = std::exp(values[o * inner + i] - row_max);
            if (e == 0.0) {
                continue;
            }
            double w_all = 1.0;
            for (Eigen::Index j = 0; j < kk; ++j) {
                w_all *= axes[static_cast<std::size_t>(j)].w[full[static_cast<std::size_t>(j)]];
            }
            r.sum += w_all * e;
            for (Eigen::Index j = 0; j < kk; ++j) {
                const auto jj = static_cast<std::size_t>(j);
                const double wj = axes[jj].w[full[jj]];
                r.beta_marg[jj][full[jj]] += (w_all / wj) * e;
            }
        }
    }
    return r;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    t = static_cast<unsigned>(std::min<std::size_t>(t, n));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned k = 0; k < t; ++k) {
        pool.emplace_back([&, k] {
            for (std::size_t i = k; i < n; i += t) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

// Summaries of a density tabulated on a uniform grid (trapezoid rule).
inline ParameterSummary summarize_grid(const Axis& axis, const std::vector<double>& density,
                                       double level) {
    ParameterSummary s;
    const std::size_t n = axis.x.size();
    s.marginal.resize(n);
    double mean = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s.marginal[i] = {axis.x[i], density[i]};
        mean += axis.w[i] * axis.x[i] * density[i];
        if (density[i] > density[best]) {
            best = i;
        }
    }
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var += axis.w[i] * (axis.x[i] - mean) * (axis.x[i] - mean) * density[i];
    }
    s.mode = axis.x[best];
    s.mean = mean;
    s.sd = std::sqrt(std::max(var, 0.0));
    // cumulative trapezoid, then linear inverse
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        cum[i] = cum[i - 1] + 0.5 * (density[i] + density[i - 1]) * (axis.x[i] - axis.x[i - 1]);
    }
    auto inv = [&](double q) {
        const double target = q * cum.back();
        const auto it = std::lower_bound(cum.begin(), cum.end(), target);
        if (it == cum.begin()) {
            return axis.x.front();
        }
        if (it == cum.end()) {
            return axis.x.back();
        }
        const std::size_t i = static_cast<std::size_t>(it - cum.begin());
        const double span = cum[i] - cum[i - 1];
        const double frac = span > 0.0 ? (target - cum[i - 1]) / span : 0.0;
        return axis.x[i - 1] + frac * (axis.x[i] - axis.x[i - 1]);
    };
    const double tail = 0.5 * (1.0 - level);
    s.ci = {inv(tail), inv(1.0 - tail)};
    return s;
}

struct GridOutput {
    Axis alpha_axis;
    std::vector<double> alpha_density;
    std::vector<Axis> beta_axes;
    std::vector<std::vector<double>> beta_density;
};

inline GridOutput integrate_grid(const PosteriorKernel& kernel, const Axis& alpha_axis,
                                 const std::vector<double>& log_prior_alpha,
                                 const std::vector<Axis>& beta_axes, unsigned threads) {
    const std::size_t na = alpha_axis.x.size();
    std::vector<RowResult> rows(na);
    parallel_for(na, threads, [&](std::size_t r) {
        rows[r] = eval_row(kernel, alpha_axis.x[r], log_prior_alpha[r], beta_axes);
    });
    double g = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (r.sum > 0.0) {
            g = std::max(g, r.log_max + std::log(r.sum));
        }
    }
    if (!std::isfinite(g)) {
        throw NumericError("grid posterior has no finite mass inside the window");
    }
    GridOutput out;
    out.alpha_axis = alpha_axis;
    out.beta_axes = beta_axes;
    out.alpha_density.assign(na, 0.0);
    out.beta_density.resize(beta_axes.size());
    for (std::size_t j = 0; j < beta_axes.size(); ++j) {
        out.beta_density[j].assign(beta_axes[j].x.size(), 0.0);
    }
    double z = 0.0;
    for (std::size_t r = 0; r < na; ++r) {
        if (!(rows[r].sum > 0.0)) {
            continue;
        }
        const double scale = std::exp(rows[r].log_max - g);
        out.alpha_density[r] = scale * rows[r].sum;
        z += alpha_axis.w[r] * out.alpha_density[r];
        for (std::size_t j = 0; j < beta_axes.size(); ++j) {
            for (std::size_t k = 0; k < beta_axes[j].x.size(); ++k) {
                out.beta_density[j][k] += alpha_axis.w[r] * scale * rows[r].beta_marg[j][k];
            }
        }
    }
    for (double& v : out.alpha_density) {
        v /= z;
    }
    for (auto& col : out.beta_density) {
        for (double& v : col) {
            v /= z;
        }
    }
    return out;
}

inline double edge_ratio(const std::vector<double>& f, bool left) {
    const double peak = *std::max_element(f.begin(), f.end());
    return peak > 0.0 ? (left ? f.front() : f.back()) / peak : 0.0;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Sample quantile, linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = pos - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

// Gaussian KDE with Silverman's bandwidth, evaluated from a linear binning of
// the draws. The grid is clipped to [lo, hi] and renormalised.
inline std::vector<MarginalPoint> kde(const std::vector<double>& draws, double lo, double hi,
                                      std::size_t points = 400) {
    const double n = static_cast<double>(draws.size());
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    double var = 0.0;
    for (double v : draws) {
        var += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(var / std::max(1.0, n - 1.0));
    std::vector<double> sorted = draws;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) {
        spread = sd > 0.0 ? sd : 1e-3 * (1.0 + std::abs(mean));
    }
    const double h = 0.9 * spread * std::pow(n, -0.2);
    const double g_lo = std::max(lo, sorted.front() - 4.0 * h);
    const double g_hi = std::min(hi, sorted.back() + 4.0 * h);

    const std::size_t bins = 2048;
    const double b_lo = sorted.front();
    const double b_w = (sorted.back() - b_lo) / static_cast<double>(bins - 1);
    std::vector<double> counts(bins, 0.0);
    for (double v : draws) {
        if (b_w == 0.0) {
            counts[0] += 1.0;
            continue;
        }
        const double pos = (v - b_lo) / b_w;
        const auto i = std::min(static_cast<std::size_t>(pos), bins - 2);
        const double frac = pos - static_cast<double>(i);
        counts[i] += 1.0 - frac;
        counts[i + 1] += frac;
    }
    const Axis axis = make_axis(g_lo, g_hi, points);
    std::vector<MarginalPoint> out(points);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t k = 0; k < points; ++k) {
        double s = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            if (counts[b] == 0.0) {
                continue;
            }
            const double z = (axis.x[k] - (b_lo + b_w * static_cast<double>(b))) / h;
            if (std::abs(z) < 8.0) {
                s += counts[b] * std::exp(-0.5 * z * z);
            }
        }
        out[k] = {axis.x[k], s * norm};
    }
    double mass = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        mass += axis.w[k] * out[k].density;
    }
    if (mass > 0.0) {
        for (auto& p : out) {
            p.density /= mass;
        }
    }
    return out;
}

// Geyer's initial positive sequence estimator.
inline double effective_sample_size(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 4) {
        return static_cast<double>(n);
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = x[i] - mean;
    }
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
            s += c[i] * c[i + lag];
        }
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) {
        return static_cast<double>(n);
    }
    double sum_pairs = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; 2 * m + 1 < n / 2; ++m) {
        double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if (pair <= 0.0) {
            break;
        }
        pair = std::min(pair, prev_pair);  // monotone
        sum_pairs += pair;
        prev_pair = pair;
    }
    const double tau = std::max(1.0, 2.0 * sum_pairs - 1.0);
    return static_cast<double>(n) / tau;
}

inline ParameterSummary summarize_draws(const std::vector<double>& draws, double lo, double hi,
                                        double level) {
    ParameterSummary s;
    const double n = static_cast<double>(draws.size());
    s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    double var = 0.0;
    for (double v : draws) {
        var += (v - s.mean) * (v - s.mean);
    }
    s.sd = std::sqrt(var / std::max(1.0, n - 1.0));
    std::vector<double> sorted = draws;
    std::sort(sorted.begin(), sorted.end());
    const double tail = 0.5 * (1.0 - level);
    s.ci = {quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
    s.marginal = kde(draws, lo, hi);
    const auto peak = std::max_element(s.marginal.begin(), s.marginal.end(),
                                       [](const auto& a, const auto& b) { return a.density < b.density; });
    s.mode = peak->x;
    return s;
}

inline void copy_alpha_summary(PosteriorResult& r, const ParameterSummary& s) {
    r.alpha_marginal = s.marginal;
    r.alpha_mode = s.mode;
    r.alpha_mean = s.mean;
    r.alpha_sd = s.sd;
    r.alpha_ci = s.ci;
}

inline PosteriorResult run_grid(const PosteriorKernel& kernel, const FitConfig& cfg) {
    const Eigen::Index kk = kernel.k();
    if (kk > 2) {
        throw CapabilityError("fit_grid: " + std::to_string(kk) +
                              " coefficients; the grid engine supports at most 2, use the MCMC engine");
    }
    const LaplaceFit lap = laplace_fit(kernel);
    PosteriorResult res;
    res.engine_used = Engine::Grid;
    res.credible_level = cfg.credible_level;
    if (!lap.converged) {
        res.diagnostics.warnings.push_back("mode search did not fully converge; grid windows may be off-centre");
    }
    const double w = cfg.window_sds;
    const double log_lo = std::log(cfg.alpha_range.lo);
    const double log_hi = std::log(cfg.alpha_range.hi);
    const double phi_hat = lap.mode[0];
    const double phi_sd = std::sqrt(lap.cov(0, 0));
    double p_lo = std::max(log_lo, phi_hat - w * phi_sd);
    double p_hi = std::min(log_hi, phi_hat + w * phi_sd);
    if (!(p_hi > p_lo)) {
        throw NumericError("fit_grid: posterior concentrates outside alpha_range [" +
                           detail::fmt_num(cfg.alpha_range.lo) + ", " +
                           detail::fmt_num(cfg.alpha_range.hi) + "]");
    }
    std::vector<double> b_lo(static_cast<std::size_t>(kk));
    std::vector<double> b_hi(static_cast<std::size_t>(kk));
    for (Eigen::Index j = 0; j < kk; ++j) {
        const double s = std::sqrt(lap.cov(j + 1, j + 1));
        b_lo[static_cast<std::size_t>(j)] = lap.mode[j + 1] - w * s;
        b_hi[static_cast<std::size_t>(j)] = lap.mode[j + 1] + w * s;
    }

    GridOutput grid;
    const double edge_tol = 1e-9;
    for (int round = 0; round < 5; ++round) {
        const Axis alpha_axis = make_axis(std::exp(p_lo), std::exp(p_hi), cfg.grid_points);
        std::vector<double> lpa(alpha_axis.x.size());
        for (std::size_t i = 0; i < lpa.size(); ++i) {
            lpa[i] = log_prior_density(alpha_axis.x[i], kernel.alpha_prior());
        }
        std::vector<Axis> beta_axes;
        for (Eigen::Index j = 0; j < kk; ++j) {
            beta_axes.push_back(make_axis(b_lo[static_cast<std::size_t>(j)],
                                          b_hi[static_cast<std::size_t>(j)], cfg.beta_grid_points));
        }
        grid = integrate_grid(kernel, alpha_axis, lpa, beta_axes, cfg.threads);

        bool widened = false;
        const double p_w = p_hi - p_lo;
        if (p_lo > log_lo && edge_ratio(grid.alpha_density, true) > edge_tol) {
            p_lo = std::max(log_lo, p_lo - 0.5 * p_w);
            widened = true;
        }
        if (p_hi < log_hi && edge_ratio(grid.alpha_density, false) > edge_tol) {
            p_hi = std::min(log_hi, p_hi + 0.5 * p_w);
            widened = true;
        }
        for (std::size_t j = 0; j < static_cast<std::size_t>(kk); ++j) {
            const double bw = b_hi[j] - b_lo[j];
            if (edge_ratio(grid.beta_density[j], true) > edge_tol) {
                b_lo[j] -= 0.5 * bw;
                widened = true;
            }
            if (edge_ratio(grid.beta_density[j], false) > edge_tol) {
                b_hi[j] += 0.5 * bw;
                widened = true;
            }
        }
        if (!widened) {
            break;
        }
        if (round == 4) {
            res.diagnostics.warnings.push_back("grid window still carries mass at an edge after widening");
        }
    }

    copy_alpha_summary(res, summarize_grid(grid.alpha_axis, grid.alpha_density, cfg.credible_level));
    for (std::size_t j = 0; j < grid.beta_axes.size(); ++j) {
        res.beta.push_back(summarize_grid(grid.beta_axes[j], grid.beta_density[j], cfg.credible_level));
    }
    // normal approximation in log(alpha) to the share of mass inside alpha_range
    const double captured =
        normal_cdf((log_hi - phi_hat) / phi_sd) - normal_cdf((log_lo - phi_hat) / phi_sd);
    res.diagnostics.grid_mass_captured = captured;
    if (captured < 0.999) {
        res.diagnostics.warnings.push_back("less than 99.9% of the posterior mass lies inside alpha_range [" +
                                           detail::fmt_num(cfg.alpha_range.lo) + ", " +
                                           detail::fmt_num(cfg.alpha_range.hi) + "]");
    }
    return res;
}

inline PosteriorResult run_mcmc(const PosteriorKernel& kernel, const FitConfig& cfg) {
    const Eigen::Index kk = kernel.k();
    const Eigen::Index dim = kk + 1;
    const LaplaceFit lap = laplace_fit(kernel);
    PosteriorResult res;
    res.engine_used = Engine::Mcmc;
    res.credible_level = cfg.credible_level;

    const double log_lo = std::log(cfg.alpha_range.lo);
    const double log_hi = std::log(cfg.alpha_range.hi);
    Eigen::VectorXd state = lap.mode;
    state[0] = std::clamp(state[0], log_lo, log_hi);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(lap.cov).matrixL();

    auto target = [&](const Eigen::VectorXd& s) {
        if (s[0] < log_lo || s[0] > log_hi) {
            return -std::numeric_limits<double>::infinity();
        }
        return kernel.log_target(s[0], s.tail(kk));
    };
    double lp = target(state);
    if (!std::isfinite(lp)) {
        throw NumericError("fit_mcmc: posterior is not finite at the starting point");
    }

    Rng rng(cfg.seed);
    double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
    const std::size_t kept = cfg.mcmc_iters - cfg.burn_in;
    std::vector<std::vector<double>> draws(static_cast<std::size_t>(dim));
    for (auto& d : draws) {
        d.reserve(kept);
    }
    std::size_t accepted = 0;
    Eigen::VectorXd z(dim);
    for (std::size_t it = 0; it < cfg.mcmc_iters; ++it) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            z[j] = rng.normal();
        }
        const Eigen::VectorXd proposal = state + std::exp(log_scale) * (chol * z);
        const double lp_new = target(proposal);
        const double log_ratio = lp_new - lp;
        const bool accept = std::isfinite(lp_new) && std::log(rng.uniform_open()) < log_ratio;
        if (accept) {
            state = proposal;
            lp = lp_new;
        }
        if (it < cfg.burn_in) {
            // Robbins-Monro step toward 0.234 acceptance
            const double a = std::isfinite(lp_new) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
            log_scale += (a - 0.234) / std::pow(static_cast<double>(it) + 1.0, 0.6);
        } else {
            accepted += accept ? 1 : 0;
            draws[0].push_back(std::exp(state[0]));
            for (Eigen::Index j = 0; j < kk; ++j) {
                draws[static_cast<std::size_t>(j + 1)].push_back(state[j + 1]);
            }
        }
    }

    copy_alpha_summary(res, summarize_draws(draws[0], cfg.alpha_range.lo, cfg.alpha_range.hi,
                                            cfg.credible_level));
    for (Eigen::Index j = 0; j < kk; ++j) {
        res.beta.push_back(summarize_draws(draws[static_cast<std::size_t>(j + 1)],
                                           -std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity(),
                                           cfg.credible_level));
    }
    const double acc = static_cast<double>(accepted) / static_cast<double>(kept);
    double ess = std::numeric_limits<double>::infinity();
    for (const auto& d : draws) {
        ess = std::min(ess, effective_sample_size(d));
    }
    res.diagnostics.acceptance_rate = acc;
    res.diagnostics.ess = ess;
    res.diagnostics.proposal_scale = std::exp(log_scale);
    res.diagnostics.draws = kept;
    if (acc < 0.1 || acc > 0.6) {
        res.diagnostics.warnings.push_back("acceptance rate " + detail::fmt_num(acc) +
                                           " lies outside [0.1, 0.6]");
    }
    if (ess < 100.0) {
        res.diagnostics.warnings.push_back("poor mixing: effective sample size " +
                                           detail::fmt_num(ess) + " is below 100");
    }
    res.alpha_draws = std::move(draws[0]);
    return res;
}

}  // namespace detail

/// Deterministic tensor-grid posterior; K <= 2 coefficients.
inline PosteriorResult fit_grid(const SurvivalDataset& data, const PriorChoice& prior,
                                const FitConfig& cfg) {
    cfg.validate();
    return detail::run_grid(detail::PosteriorKernel(data, prior), cfg);
}

/// Adaptive random-walk Metropolis; any K. Deterministic per cfg.seed.
inline PosteriorResult fit_mcmc(const SurvivalDataset& data, const PriorChoice& prior,
                                const FitConfig& cfg) {
    cfg.validate();
    return detail::run_mcmc(detail::PosteriorKernel(data, prior), cfg);
}

/// Dispatches on cfg.engine. Both reports the grid summaries and records the
/// MCMC alpha mean and the gap between engines in the diagnostics.
inline PosteriorResult fit(const SurvivalDataset& data, const PriorChoice& prior,
                           const FitConfig& cfg) {
    cfg.validate();
    const detail::PosteriorKernel kernel(data, prior);
    switch (cfg.engine) {
        case Engine::Grid: return detail::run_grid(kernel, cfg);
        case Engine::Mcmc: return detail::run_mcmc(kernel, cfg);
        case Engine::Both: break;
    }
    PosteriorResult grid = detail::run_grid(kernel, cfg);
    const PosteriorResult mcmc = detail::run_mcmc(kernel, cfg);
    grid.engine_used = Engine::Both;
    Diagnostics& d = grid.diagnostics;
    d.acceptance_rate = mcmc.diagnostics.acceptance_rate;
    d.ess = mcmc.diagnostics.ess;
    d.proposal_scale = mcmc.diagnostics.proposal_scale;
    d.draws = mcmc.diagnostics.draws;
    d.mcmc_alpha_mean = mcmc.alpha_mean;
    d.engine_gap = std::abs(grid.alpha_mean - mcmc.alpha_mean);
    for (const auto& w : mcmc.diagnostics.warnings) {
        d.warnings.push_back("mcmc: " + w);
    }
    return grid;
}

/// The ten theta values of the default sensitivity protocol.
inline const std::vector<double> kDefaultSweepThetas = {0.5, 1.0, 1.5, 2.0, 2.5,
                                                        3.0, 3.5, 4.0, 4.5, 5.0};

struct SweepEntry {
    double theta = 0.0;
    PosteriorResult result;
};

/// One fit per theta under a PC prior; everything else, including the seed,
/// is held fixed.
inline std::vector<SweepEntry> sensitivity_sweep(const SurvivalDataset& data,
                                                 const std::vector<double>& thetas,
                                                 const std::vector<double>& beta_prior_sd,
                                                 const FitConfig& cfg) {
    if (thetas.empty()) {
        throw DomainError("sensitivity_sweep: need at least one theta");
    }
    std::vector<SweepEntry> out;
    out.reserve(thetas.size());
    for (double theta : thetas) {
        PriorChoice prior{PcPriorSpec{theta}, beta_prior_sd};
        out.push_back({theta, fit(data, prior, cfg)});
    }
    return out;
}

/// Posterior of beta with alpha held fixed, on the same tensor grid as the
/// grid engine (K <= 2).
inline std::vector<ParameterSummary> beta_posterior_given_alpha(const SurvivalDataset& data,
                                                                const std::vector<double>& beta_prior_sd,
                                                                double alpha, const FitConfig& cfg) {
    cfg.validate();
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError("beta_posterior_given_alpha: alpha must be positive and finite");
    }
    const detail::PosteriorKernel kernel(data, PriorChoice{ImproperUniform{}, beta_prior_sd});
    const Eigen::Index kk = kernel.k();
    if (kk > 2) {
        throw CapabilityError("beta_posterior_given_alpha: at most 2 coefficients are supported");
    }
    if (kk == 0) {
        return {};
    }
    const detail::LaplaceFit lap = detail::laplace_fit(kernel, std::log(alpha));
    detail::Axis alpha_axis;
    alpha_axis.x = {alpha};
    alpha_axis.w = {1.0};
    std::vector<detail::Axis> axes;
    for (Eigen::Index j = 0; j < kk; ++j) {
        const double s = std::sqrt(lap.cov(j, j));
        axes.push_back(detail::make_axis(lap.mode[j] - cfg.window_sds * s,
                                         lap.mode[j] + cfg.window_sds * s, cfg.beta_grid_points));
    }
    const auto grid = detail::integrate_grid(kernel, alpha_axis, {0.0}, axes, 1);
    std::vector<ParameterSummary> out;
    for (std::size_t j = 0; j < axes.size(); ++j) {
        out.push_back(detail::summarize_grid(axes[j], grid.beta_density[j], cfg.credible_level));
    }
    return out;
}

}  // namespace pcweibull
