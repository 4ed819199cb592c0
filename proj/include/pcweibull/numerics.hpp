#pragma once

// Numerical kernels shared by the rest of the library: log-gamma and digamma,
// adaptive Gauss-Kronrod quadrature on finite and infinite ranges, Brent root
// finding, and a seedable random stream.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcweibull/errors.hpp"

namespace pcweibull {

inline constexpr double kEulerGamma = std::numbers::egamma_v<double>;

namespace detail {

inline std::string fmt_num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Special functions

/// ln Gamma(x) for x > 0. Lanczos approximation (g = 7, 9 terms) with the
/// reflection formula below 1/2.
inline double ln_gamma(double x) {
    if (!(x > 0.0) || std::isnan(x)) {
        throw DomainError("ln_gamma: argument must be positive, got " + detail::fmt_num(x));
    }
    if (std::isinf(x)) {
        return x;
    }
    if (x < 0.5) {
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - ln_gamma(1.0 - x);
    }
    static constexpr std::array<double, 9> c = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    const double z = x - 1.0;
    double a = c[0];
    for (std::size_t i = 1; i < c.size(); ++i) {
        a += c[i] / (z + static_cast<double>(i));
    }
    const double t = z + 7.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

/// Digamma psi(x) for x > 0: shift up to x >= 6 by recurrence, then the
/// asymptotic series.
inline double digamma(double x) {
    if (!(x > 0.0) || std::isnan(x)) {
        throw DomainError("digamma: argument must be positive, got " + detail::fmt_num(x));
    }
    if (std::isinf(x)) {
        return x;
    }
    double shift = 0.0;
    while (x < 6.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / x;
    const double r2 = r * r;
    // Bernoulli terms B_2k / (2k x^2k), k = 1..8
    const double series =
        r2 * (1.0 / 12 -
              r2 * (1.0 / 120 -
                    r2 * (1.0 / 252 -
                          r2 * (1.0 / 240 -
                                r2 * (1.0 / 132 -
                                      r2 * (691.0 / 32760 -
                                            r2 * (1.0 / 12 - r2 * 3617.0 / 8160)))))));
    return shift + std::log(x) - 0.5 * r - series;
}

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_subdivisions = 200;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
            throw DomainError("QuadratureConfig: tolerances must be positive");
        }
        if (max_subdivisions < 1) {
            throw DomainError("QuadratureConfig: max_subdivisions must be >= 1");
        }
    }
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

namespace detail {

struct KronrodPanel {
    double lo;
    double hi;
    double value;
    double error;
};

// 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK qk15).
template <class F>
KronrodPanel gauss_kronrod15(F& f, double lo, double hi) {
    static constexpr std::array<double, 8> xgk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr std::array<double, 8> wgk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double resk = fc * wgk[7];
    double resg = fc * wg[3];
    double resabs = std::abs(resk);
    std::array<double, 7> f1{};
    std::array<double, 7> f2{};
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        resk += wgk[j] * (f1[j] + f2[j]);
        resabs += wgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) {
            resg += wg[j / 2] * (f1[j] + f2[j]);
        }
    }
    const double mean = 0.5 * resk;
    double resasc = wgk[7] * std::abs(fc - mean);
    for (std::size_t j = 0; j < 7; ++j) {
        resasc += wgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    }
    const double width = std::abs(half);
    resabs *= width;
    resasc *= width;
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();
    if (resabs > tiny / (50.0 * eps)) {
        err = std::max(50.0 * eps * resabs, err);
    }
    return {lo, hi, resk * half, err};
}

template <class F>
QuadratureResult adaptive_gk(F& f, double lo, double hi, const QuadratureConfig& cfg) {
    auto by_error = [](const KronrodPanel& a, const KronrodPanel& b) { return a.error < b.error; };
    std::vector<KronrodPanel> heap;
    heap.reserve(static_cast<std::size_t>(cfg.max_subdivisions) + 1);
    heap.push_back(gauss_kronrod15(f, lo, hi));
    double total = heap.front().value;
    double total_err = heap.front().error;
    for (;;) {
        if (total_err <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total))) {
            break;
        }
        if (static_cast<int>(heap.size()) >= cfg.max_subdivisions) {
            break;
        }
        std::pop_heap(heap.begin(), heap.end(), by_error);
        const KronrodPanel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (mid <= worst.lo || mid >= worst.hi) {
            // panel cannot be split further in double precision
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), by_error);
            break;
        }
        const KronrodPanel left = gauss_kronrod15(f, worst.lo, mid);
        const KronrodPanel right = gauss_kronrod15(f, mid, worst.hi);
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), by_error);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), by_error);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
    }
    QuadratureResult out;
    for (const auto& p : heap) {
        out.value += p.value;
        out.abs_error += p.error;
    }
    out.subdivisions = static_cast<int>(heap.size());
    out.converged = out.abs_error <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(out.value));
    return out;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [lo, hi]. Either bound may be
/// infinite; semi-infinite ranges use y = lo + t/(1-t), doubly infinite ranges
/// y = t/(1-t^2). The integrand is never evaluated at the endpoints.
/// Does not throw on non-convergence; check `converged`.
template <class F>
QuadratureResult integrate_detailed(F&& f, double lo, double hi, const QuadratureConfig& cfg = {}) {
    cfg.validate();
    if (std::isnan(lo) || std::isnan(hi)) {
        throw DomainError("integrate: NaN integration bound");
    }
    if (lo == hi) {
        return {0.0, 0.0, 0, true};
    }
    if (lo > hi) {
        QuadratureResult r = integrate_detailed(f, hi, lo, cfg);
        r.value = -r.value;
        return r;
    }
    auto checked = [&f](double y, double jac) {
        if (!std::isfinite(y) || !std::isfinite(jac)) {
            return 0.0;
        }
        const double v = static_cast<double>(f(y));
        if (v == 0.0) {
            return 0.0;
        }
        const double out = v * jac;
        if (!std::isfinite(out)) {
            throw NumericError("integrate: integrand is not finite at y = " + detail::fmt_num(y));
        }
        return out;
    };
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    if (!lo_inf && !hi_inf) {
        auto g = [&](double y) { return checked(y, 1.0); };
        return detail::adaptive_gk(g, lo, hi, cfg);
    }
    if (!lo_inf) {
        auto g = [&](double t) {
            const double s = 1.0 - t;
            return checked(lo + t / s, 1.0 / (s * s));
        };
        return detail::adaptive_gk(g, 0.0, 1.0, cfg);
    }
    if (!hi_inf) {
        auto g = [&](double t) {
            return checked(hi - (1.0 - t) / t, 1.0 / (t * t));
        };
        return detail::adaptive_gk(g, 0.0, 1.0, cfg);
    }
    auto g = [&](double t) {
        const double s = 1.0 - t * t;
        return checked(t / s, (1.0 + t * t) / (s * s));
    };
    return detail::adaptive_gk(g, -1.0, 1.0, cfg);
}

/// As integrate_detailed, but throws AccuracyError (carrying the best
/// estimate) when the tolerance is not met within max_subdivisions.
template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureConfig& cfg = {}) {
    const QuadratureResult r = integrate_detailed(std::forward<F>(f), lo, hi, cfg);
    if (!r.converged) {
        throw AccuracyError("integrate: tolerance not reached after " +
                                std::to_string(r.subdivisions) + " subdivisions (estimate " +
                                detail::fmt_num(r.value) + ", error " +
                                detail::fmt_num(r.abs_error) + ")",
                            r.value, r.abs_error);
    }
    return r.value;
}

// ---------------------------------------------------------------------------
// Root finding

struct RootBracket {
    double lo;
    double hi;
    double tol = 1e-10;
};

/// Brent's method. Returns x with the bracket shrunk below `tol` (or an exact zero).
template <class F>
double find_root(F&& f, const RootBracket& bracket, int max_iterations = 300) {
    if (!(bracket.lo < bracket.hi)) {
        throw BracketError("find_root: require lo < hi, got [" + detail::fmt_num(bracket.lo) +
                           ", " + detail::fmt_num(bracket.hi) + "]");
    }
    if (!(bracket.tol > 0.0)) {
        throw DomainError("find_root: tolerance must be positive");
    }
    double a = bracket.lo;
    double b = bracket.hi;
    double fa = f(a);
    double fb = f(b);
    if (std::isnan(fa) || std::isnan(fb)) {
        throw NumericError("find_root: function is NaN at a bracket end");
    }
    if (fa == 0.0) {
        return a;
    }
    if (fb == 0.0) {
        return b;
    }
    if ((fa > 0.0) == (fb > 0.0)) {
        throw BracketError("find_root: no sign change on [" + detail::fmt_num(a) + ", " +
                           detail::fmt_num(b) + "]");
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    for (int iter = 0; iter < max_iterations; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * bracket.tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) {
            return b;
        }
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            const double s = fb / fa;
            double p;
            double q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) {
                q = -q;
            }
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : std::copysign(tol1, xm);
        fb = f(b);
        if (std::isnan(fb)) {
            throw NumericError("find_root: function is NaN at x = " + detail::fmt_num(b));
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Random streams

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Single-owner random stream. Same seed, same sequence. Independent
/// sub-streams come from split(); never share one stream across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(detail::splitmix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) {
        if (!(rate > 0.0)) {
            throw DomainError("Rng::exponential: rate must be positive");
        }
        return -std::log(uniform_open()) / rate;
    }

    double normal() { return normal_(engine_); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Derived stream for parallel work; deterministic in (seed, stream).
    Rng split(std::uint64_t stream) const {
        return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(stream + 0x632BE59BD9B4E019ULL)));
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace pcweibull
