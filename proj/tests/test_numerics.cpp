#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pcweibull/numerics.hpp"
#include "pcweibull/weibull.hpp"

using namespace pcweibull;

TEST(LnGamma, KnownValues) {
    EXPECT_NEAR(ln_gamma(1.0), 0.0, 1e-14);
    EXPECT_NEAR(ln_gamma(2.0), 0.0, 1e-14);
    EXPECT_NEAR(ln_gamma(0.5), 0.5723649429247001, 1e-13);
    EXPECT_NEAR(ln_gamma(5.0), std::log(24.0), 1e-13);
    EXPECT_NEAR(ln_gamma(101.0), 363.73937555556347, 1e-10);
}

TEST(LnGamma, AgreesWithStdLgamma) {
    for (double x = 1e-3; x < 200.0; x *= 1.37) {
        EXPECT_NEAR(ln_gamma(x), std::lgamma(x), 1e-12 * std::max(1.0, std::abs(std::lgamma(x))))
            << "x = " << x;
    }
}

TEST(LnGamma, Recurrence) {
    for (double x = 0.1; x <= 50.0; x += 0.173) {
        EXPECT_NEAR(ln_gamma(x + 1.0), ln_gamma(x) + std::log(x), 1e-12) << "x = " << x;
    }
}

TEST(LnGamma, RejectsNonPositive) {
    EXPECT_THROW(ln_gamma(0.0), DomainError);
    EXPECT_THROW(ln_gamma(-1.5), DomainError);
    EXPECT_THROW(ln_gamma(std::nan("")), DomainError);
}

TEST(Digamma, KnownValues) {
    EXPECT_NEAR(digamma(1.0), -kEulerGamma, 1e-12);
    EXPECT_NEAR(digamma(0.5), -kEulerGamma - 2.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(digamma(2.0), 1.0 - kEulerGamma, 1e-12);
    EXPECT_NEAR(kEulerGamma, 0.577216, 5e-7);
}

TEST(Digamma, IsDerivativeOfLnGamma) {
    const double h = 1e-6;
    for (double x = 0.2; x <= 20.0; x += 0.37) {
        const double fd = (ln_gamma(x + h) - ln_gamma(x - h)) / (2.0 * h);
        EXPECT_NEAR(digamma(x), fd, 1e-6 * std::max(1.0, std::abs(fd))) << "x = " << x;
    }
}

TEST(Digamma, RejectsNonPositive) { EXPECT_THROW(digamma(0.0), DomainError); }

TEST(Integrate, ElementaryIntegrals) {
    EXPECT_NEAR(integrate([](double y) { return std::exp(-y); }, 0.0, INFINITY), 1.0, 1e-10);
    EXPECT_NEAR(integrate([](double y) { return y * y; }, 0.0, 1.0), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(integrate([](double y) { return std::exp(-0.5 * y * y); }, -INFINITY, INFINITY),
                std::sqrt(2.0 * std::numbers::pi), 1e-9);
    EXPECT_NEAR(integrate([](double y) { return std::exp(y); }, -INFINITY, 0.0), 1.0, 1e-10);
    EXPECT_NEAR(integrate([](double y) { return y; }, 1.0, 0.0), -0.5, 1e-14);
}

TEST(Integrate, KronrodIsExactForHighDegreePolynomials) {
    // a single 15-point Kronrod panel integrates degree <= 22 exactly
    QuadratureConfig cfg;
    cfg.max_subdivisions = 1;
    const QuadratureResult r =
        integrate_detailed([](double y) { return std::pow(y, 20); }, -1.0, 1.0, cfg);
    EXPECT_NEAR(r.value, 2.0 / 21.0, 1e-14);
}

TEST(Integrate, EndpointSingularity) {
    // integral of y^(-1/2) on (0, 1) is 2
    QuadratureConfig cfg;
    cfg.max_subdivisions = 500;
    EXPECT_NEAR(integrate([](double y) { return 1.0 / std::sqrt(y); }, 0.0, 1.0, cfg), 2.0, 1e-9);
}

TEST(Integrate, NonConvergenceCarriesEstimate) {
    QuadratureConfig cfg;
    cfg.max_subdivisions = 2;
    cfg.abs_tol = 1e-15;
    cfg.rel_tol = 1e-15;
    try {
        integrate([](double y) { return std::sin(50.0 * y) * std::log(y); }, 0.0, 3.0, cfg);
        FAIL() << "expected AccuracyError";
    } catch (const AccuracyError& e) {
        EXPECT_TRUE(std::isfinite(e.estimate()));
        EXPECT_GT(e.abs_error(), 0.0);
    }
}

TEST(Integrate, RejectsInvalidConfig) {
    QuadratureConfig cfg;
    cfg.abs_tol = 0.0;
    EXPECT_THROW(integrate([](double) { return 1.0; }, 0.0, 1.0, cfg), DomainError);
    cfg = {};
    cfg.max_subdivisions = 0;
    EXPECT_THROW(integrate([](double) { return 1.0; }, 0.0, 1.0, cfg), DomainError);
}

TEST(Integrate, WeibullDensitiesAreNormalised) {
    QuadratureConfig cfg;
    cfg.max_subdivisions = 500;
    for (double alpha : {0.5, 1.0, 1.5, 3.0}) {
        for (double lambda : {0.5, 1.0, 2.0}) {
            for (auto param : {Parameterization::P1, Parameterization::P2}) {
                const WeibullParams p{alpha, lambda, param};
                const double mass =
                    integrate([&](double y) { return density(y, p); }, 0.0, INFINITY, cfg);
                EXPECT_NEAR(mass, 1.0, 1e-8) << alpha << " " << lambda;
            }
        }
    }
}

TEST(FindRoot, SimpleFunctions) {
    EXPECT_NEAR(find_root([](double x) { return x - 2.0; }, {0.0, 5.0, 1e-10}), 2.0, 1e-10);
    const double r = find_root([](double x) { return x * x - 2.0; }, {1.0, 2.0, 1e-10});
    EXPECT_NEAR(r, std::sqrt(2.0), 1e-10);
    EXPECT_LE(std::abs(r * r - 2.0), 10 * 1e-10);
}

TEST(FindRoot, RequiresSignChange) {
    EXPECT_THROW(find_root([](double x) { return x * x + 1.0; }, {-1.0, 1.0, 1e-10}),
                 BracketError);
    EXPECT_THROW(find_root([](double x) { return x; }, {1.0, -1.0, 1e-10}), BracketError);
}

TEST(FindRoot, ResubstitutionProperty) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double root = -5.0 + 10.0 * rng.uniform();
        const double slope = 0.1 + 3.0 * rng.uniform();
        auto f = [&](double x) { return std::tanh(slope * (x - root)) + 0.1 * (x - root); };
        const double x = find_root(f, {-6.0, 6.0, 1e-10});
        EXPECT_LE(std::abs(f(x)), 10 * 1e-10 * (slope + 0.1));
    }
}

TEST(Rng, SameSeedSameStream) {
    Rng a = make_rng(42);
    Rng b = make_rng(42);
    for (int i = 0; i < 100; ++i) {
        ASSERT_EQ(a.uniform(), b.uniform());
    }
    Rng c = make_rng(43);
    Rng d = make_rng(42);
    int same = 0;
    for (int i = 0; i < 100; ++i) {
        same += (c.uniform() == d.uniform()) ? 1 : 0;
    }
    EXPECT_LT(same, 3);
}

TEST(Rng, SplitStreamsAreDeterministicAndDistinct) {
    const Rng root(7);
    Rng s1 = root.split(1);
    Rng s1b = root.split(1);
    Rng s2 = root.split(2);
    EXPECT_EQ(s1.uniform(), s1b.uniform());
    EXPECT_NE(s1.uniform(), s2.uniform());
}

TEST(Rng, UniformAndExponentialMeans) {
    Rng rng(2024);
    const int n = 100000;
    double su = 0.0;
    double se = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        se += rng.exponential(2.0);
    }
    EXPECT_NEAR(su / n, 0.5, 0.01);
    EXPECT_NEAR(se / n, 0.5, 0.01);
    EXPECT_THROW(rng.exponential(0.0), DomainError);
}
