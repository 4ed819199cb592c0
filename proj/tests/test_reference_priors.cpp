#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pcweibull/divergence.hpp"
#include "pcweibull/numerics.hpp"
#include "pcweibull/pc_prior.hpp"
#include "pcweibull/reference_priors.hpp"

using namespace pcweibull;

namespace {

QuadratureConfig tight() {
    QuadratureConfig cfg;
    cfg.abs_tol = 1e-11;
    cfg.rel_tol = 1e-11;
    cfg.max_subdivisions = 2000;
    return cfg;
}

const GammaPriorSpec kGammaScale15{1.5, GammaConvention::Scale};
const GammaPriorSpec kGammaScale01{0.1, GammaConvention::Scale};

}  // namespace

TEST(GammaDensity, Examples) {
    EXPECT_NEAR(gamma_density(1.0, kGammaScale15), 0.315, 0.0005);
    EXPECT_NEAR(gamma_density(1.0, {1.5, GammaConvention::Rate}),
                std::pow(1.5, 1.5) / std::tgamma(1.5) * std::exp(-1.5), 1e-14);
    EXPECT_NEAR(gamma_density(1.0, {1.5, GammaConvention::Rate}), 0.4626, 1e-4);
    for (double x : {0.2, 1.0, 3.7}) {
        EXPECT_NEAR(gamma_density(x, {1.0, GammaConvention::Rate}), std::exp(-x), 1e-15);
        EXPECT_NEAR(gamma_density(x, {1.0, GammaConvention::Scale}), std::exp(-x), 1e-15);
    }
    EXPECT_THROW(gamma_density(1.0, {0.0, GammaConvention::Rate}), DomainError);
    EXPECT_THROW(gamma_density(-1.0, kGammaScale15), DomainError);
}

TEST(GammaDensity, Normalised) {
    for (double a : {0.1, 0.5, 1.0, 1.5}) {
        for (auto conv : {GammaConvention::Rate, GammaConvention::Scale}) {
            const GammaPriorSpec spec{a, conv};
            auto f = [&](double x) { return gamma_density(x, spec); };
            // split at 1 so the a < 1 pole at zero gets its own panel tree
            const double mass = integrate(f, 0.0, 1.0, tight()) + integrate(f, 1.0, INFINITY, tight());
            EXPECT_NEAR(mass, 1.0, 1e-8) << a;
        }
    }
}

TEST(GammaDensity, RateFormHasUnitMean) {
    for (double a : {0.1, 0.5, 1.5}) {
        const GammaPriorSpec spec{a, GammaConvention::Rate};
        auto f = [&](double x) { return x * gamma_density(x, spec); };
        EXPECT_NEAR(integrate(f, 0.0, 1.0, tight()) + integrate(f, 1.0, INFINITY, tight()), 1.0,
                    1e-8);
    }
}

TEST(ImproperPrior, IsFlatAndUnnormalisable) {
    EXPECT_EQ(improper_density(0.5), 1.0);
    EXPECT_EQ(improper_density(7.0), 1.0);
    EXPECT_FALSE(ImproperUniform::proper);
    for (double m : {1.0, 10.0, 1000.0}) {
        EXPECT_NEAR(integrate([](double a) { return improper_density(a); }, 0.0, m), m, 1e-9 * m);
    }
    EXPECT_THROW(improper_density(0.0), DomainError);
}

TEST(DistanceTable, KnownRowsScaleOneAndHalf) {
    const std::vector<double> d = {0.0, 0.1, 0.5, 0.8, 1.45};
    const auto rows = distance_table(d, kGammaScale15);
    ASSERT_EQ(rows.size(), 5u);
    const double expect[5][4] = {{1.00, 0.315, 1.00, 0.315},
                                 {0.93, 0.319, 1.08, 0.311},
                                 {0.72, 0.322, 1.53, 0.274},
                                 {0.62, 0.320, 2.09, 0.220},
                                 {0.48, 0.309, 4.93, 0.051}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_NEAR(rows[i].alpha_lower, expect[i][0], 0.01) << i;
        EXPECT_NEAR(rows[i].dens_lower, expect[i][1], 0.002) << i;
        EXPECT_NEAR(rows[i].alpha_upper, expect[i][2], 0.01) << i;
        EXPECT_NEAR(rows[i].dens_upper, expect[i][3], 0.002) << i;
        EXPECT_NEAR(distance(rows[i].alpha_lower).d, d[i], 1e-6);
        EXPECT_NEAR(distance(rows[i].alpha_upper).d, d[i], 1e-6);
        if (d[i] > 0.0) {
            EXPECT_NE(1.0 - rows[i].alpha_lower, rows[i].alpha_upper - 1.0);
        }
    }
    EXPECT_EQ(rows[0].alpha_lower, 1.0);
    EXPECT_EQ(rows[0].alpha_upper, 1.0);
    EXPECT_EQ(rows[0].dens_lower, rows[0].dens_upper);
}

TEST(DistanceTable, KnownRowScaleOneTenth) {
    const std::vector<double> d = {1.45};
    const auto rows = distance_table(d, kGammaScale01);
    EXPECT_NEAR(rows[0].alpha_lower, 0.48, 0.01);
    EXPECT_NEAR(rows[0].dens_lower, 0.002, 0.001);
    EXPECT_LT(rows[0].dens_upper, 1e-5);
}

TEST(DistanceScale, LimitAtBaseModel) {
    const std::vector<double> grid = {1e-6};
    for (Branch b : {Branch::Lower, Branch::Upper}) {
        EXPECT_NEAR(prior_on_distance_scale(kGammaScale15, b, grid)[0].density,
                    gamma_density(1.0, kGammaScale15) / kDistanceSlopeAtOne, 1e-5);
    }
}

TEST(DistanceScale, MatchesDifferencedShapeMass) {
    // density on d equals d/dd of the gamma mass between 1 and alpha(d)
    auto gamma = [](double a) { return gamma_density(a, kGammaScale15); };
    const double h = 1e-4;
    for (double d : {0.1, 0.5, 0.8, 1.45}) {
        for (Branch b : {Branch::Lower, Branch::Upper}) {
            const double a_minus = alpha_from_distance(d - h, b);
            const double a_plus = alpha_from_distance(d + h, b);
            const double fd = std::abs(integrate(gamma, a_minus, a_plus, tight())) / (2.0 * h);
            const double one[] = {d};
            EXPECT_NEAR(prior_on_distance_scale(kGammaScale15, b, one)[0].density, fd, 1e-6) << d;
        }
    }
}

TEST(DistanceScale, PcPriorRecoversExponentialPerBranch) {
    const PcPriorSpec spec{2.5};
    std::vector<double> grid;
    for (double d = 0.0; d < 4.0; d += 0.137) {
        grid.push_back(d);
    }
    for (Branch b : {Branch::Lower, Branch::Upper}) {
        const auto pts = pushforward_to_distance([&](double a) { return density(a, spec); }, b, grid);
        for (const auto& p : pts) {
            EXPECT_NEAR(p.density, 0.5 * 2.5 * std::exp(-2.5 * p.d), 1e-10) << p.d;
        }
    }
}

TEST(DistanceScale, MassIsConservedPerBranch) {
    // Below the shape floor the lower branch has no representable distance; that
    // sliver of gamma mass is accounted for separately.
    const double d_floor = distance(kAlphaFloor).d;
    auto push = [](Branch b) {
        return [b](double d) {
            const double one[] = {d};
            return prior_on_distance_scale(kGammaScale15, b, one)[0].density;
        };
    };
    auto gamma = [](double a) { return gamma_density(a, kGammaScale15); };
    const double lower_d = integrate(push(Branch::Lower), 0.0, 1.0, tight()) +
                           integrate(push(Branch::Lower), 1.0, 10.0, tight()) +
                           integrate(push(Branch::Lower), 10.0, d_floor, tight());
    // alpha(30) on the upper branch is about e^450, where the gamma density has long underflowed
    const double upper_d = integrate(push(Branch::Upper), 0.0, 30.0, tight());
    const double lower_alpha = integrate(gamma, kAlphaFloor, 1.0, tight());
    const double upper_alpha = integrate(gamma, 1.0, INFINITY, tight());
    const double below_floor = integrate(gamma, 0.0, kAlphaFloor, tight());
    EXPECT_NEAR(lower_d, lower_alpha, 1e-6);
    EXPECT_NEAR(upper_d, upper_alpha, 1e-6);
    EXPECT_NEAR(lower_d + upper_d + below_floor, 1.0, 1e-6);
}
