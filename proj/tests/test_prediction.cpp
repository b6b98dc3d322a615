#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/gamma.hpp>
#include <cmath>

#include "arpred/correction.hpp"
#include "arpred/prediction.hpp"

using namespace arpred;
using Catch::Matchers::WithinAbs;

namespace {

// Second-order remainder allowed between a simulated and a closed-form c/n;
// the same o(1/n) allowance the coverage checks use.
constexpr double kRemainder = 0.001;

constexpr double kZ95 = 1.6448536269514722;
constexpr double kZ975 = 1.959963984540054;

// Right-skewed unimodal density for the generic solver.
struct GammaDensity {
    boost::math::gamma_distribution<double> law{3.0, 1.0};
    double pdf(double x) const { return x <= 0.0 ? 0.0 : boost::math::pdf(law, x); }
    double cdf(double x) const { return x <= 0.0 ? 0.0 : boost::math::cdf(law, x); }
    double mode() const { return 2.0; }
    double scale() const { return std::sqrt(3.0); }
};

}  // namespace

TEST_CASE("estimative upper limits", "[prediction]") {
    CHECK_THAT(estimative_upper_limit(Ar1Params(0.5, 1.0), 2.0, 1, 0.05).value, WithinAbs(2.6448536, 1e-7));
    CHECK_THAT(estimative_upper_limit(Ar1Params(0.0, 1.0), 7.0, 1, 0.05).value, WithinAbs(kZ95, 1e-12));
    // two steps: mean 0.5, variance 1.25
    CHECK_THAT(estimative_upper_limit(Ar1Params(0.5, 1.0), 2.0, 2, 0.05).value,
               WithinAbs(0.5 + std::sqrt(1.25) * kZ95, 1e-12));
    CHECK_THROWS_AS(estimative_upper_limit(Ar1Params(0.5, 1.0), 2.0, 1, 1.0), ParameterError);
    CHECK_THROWS_AS(estimative_upper_limit(Ar1Params(0.5, 1.0), 2.0, 0, 0.05), ParameterError);
}

TEST_CASE("equal-density intervals", "[prediction]") {
    const auto a = equal_density_interval(PredictiveDist{0.0, 1.0, 1}, 0.05);
    CHECK_THAT(a.lower, WithinAbs(-1.959964, 1e-6));
    CHECK_THAT(a.upper, WithinAbs(1.959964, 1e-6));
    const auto b = equal_density_interval(PredictiveDist{3.0, 4.0, 1}, 0.05);
    CHECK_THAT(b.lower, WithinAbs(3.0 - 2.0 * 1.959964, 1e-6));
    CHECK_THAT(b.upper, WithinAbs(3.0 + 2.0 * 1.959964, 1e-6));
    CHECK(b.midpoint() == 3.0);
}

TEST_CASE("oracle coverage and interval mass", "[prediction][property]") {
    for (double rho : {-0.8, 0.0, 0.5, 0.95}) {
        for (double y : {-3.0, 0.0, 2.0}) {
            for (double alpha : {0.01, 0.05, 0.2}) {
                const Ar1Params p(rho, 1.7);
                for (int k : {1, 3}) {
                    const auto dist = conditional_predictive(p, y, k);
                    const auto lim = estimative_upper_limit(p, y, k, alpha);
                    CHECK(std::abs(predictive_cdf(dist, lim.value) - (1.0 - alpha)) <= 1e-9);
                    const auto iv = equal_density_interval(dist, alpha);
                    CHECK(std::abs(predictive_cdf(dist, iv.upper) - predictive_cdf(dist, iv.lower) - (1.0 - alpha)) <=
                          1e-9);
                }
            }
        }
    }
}

TEST_CASE("generic equal-density solver", "[prediction]") {
    SECTION("reproduces the Gaussian interval") {
        for (double alpha : {0.01, 0.05, 0.3}) {
            const PredictiveDist d{-1.2, 2.5, 1};
            const auto fast = equal_density_interval(d, alpha);
            const auto slow = solve_equal_density_interval(d, alpha);
            CHECK_THAT(slow.lower, WithinAbs(fast.lower, 1e-8));
            CHECK_THAT(slow.upper, WithinAbs(fast.upper, 1e-8));
        }
    }
    SECTION("skewed density: equal endpoint densities and exact mass") {
        const GammaDensity g;
        for (double alpha : {0.05, 0.1}) {
            const auto iv = solve_equal_density_interval(g, alpha);
            CHECK(std::abs(g.cdf(iv.upper) - g.cdf(iv.lower) - (1.0 - alpha)) <= 1e-9);
            CHECK_THAT(g.pdf(iv.lower), WithinAbs(g.pdf(iv.upper), 1e-8));
            // shorter than the equal-tailed interval
            const double eq_lo = boost::math::quantile(g.law, alpha / 2);
            const double eq_hi = boost::math::quantile(g.law, 1 - alpha / 2);
            CHECK(iv.length() < eq_hi - eq_lo);
        }
    }
}

TEST_CASE("improved upper limit at the reference cell", "[prediction]") {
    const Ar1Params p(0.5, 1.0);
    const auto corr = closed_form_c_limit(p, 2.0, 0.05, 50, EstimatorKind::LeastSquares);
    const auto lim = improved_upper_limit(p, 2.0, 1, 0.05, corr);
    CHECK_THAT(lim.value, WithinAbs(2.6941992, 1e-7));
    CHECK(lim.flavor == Flavor::Improved);
    // independent closed form: d = z y^2 (1 - rho^2) / (2 sigma n), b = 0
    CHECK_THAT(lim.value - 2.6448536269514722, WithinAbs(kZ95 * 4.0 * 0.75 / 100.0, 1e-12));
}

TEST_CASE("improved upper limit agrees with a simulated correction", "[prediction][statistical]") {
    const Ar1Params p(0.5, 1.0);
    const auto sim = simulated_c(p, 2.0, 0.05, 50, 1000000, EstimatorKind::LeastSquares, CorrectionTarget::Limit, 11);
    const auto lim = improved_upper_limit(p, 2.0, 1, 0.05, sim);
    const double f = normal::pdf(kZ95);
    CAPTURE(lim.value, sim.c_over_n, sim.std_error);
    CHECK(std::abs(lim.value - 2.6941992) <= (4.0 * sim.std_error + kRemainder) / f);
}

TEST_CASE("improved interval at the reference cell", "[prediction]") {
    const Ar1Params p(0.0, 1.0);
    const auto corr = closed_form_c_interval(p, 1.0, 0.05, 100, EstimatorKind::LeastSquares);
    const auto iv = improved_interval(p, 1.0, 1, 0.05, corr);
    CHECK_THAT(iv.upper, WithinAbs(1.9697638, 1e-7));
    CHECK_THAT(iv.lower, WithinAbs(-1.9697638, 1e-7));
    CHECK_THAT(iv.upper - kZ975, WithinAbs(0.0097998, 1e-7));
    CHECK_THAT(iv.upper - kZ975, WithinAbs(kZ975 / 200.0, 1e-12));
}

TEST_CASE("improved interval agrees with a simulated correction", "[prediction][statistical]") {
    const Ar1Params p(0.0, 1.0);
    const auto sim =
        simulated_c(p, 1.0, 0.05, 100, 1000000, EstimatorKind::LeastSquares, CorrectionTarget::Interval, 12);
    const auto iv = improved_interval(p, 1.0, 1, 0.05, sim);
    const double f = normal::pdf(kZ975);
    CAPTURE(iv.upper, sim.c_over_n, sim.std_error);
    CHECK(std::abs(iv.upper - 1.9697638) <= (4.0 * sim.std_error + kRemainder) / (2.0 * f));
}

TEST_CASE("improved interval widens for every parameter", "[prediction][property]") {
    for (double rho = -0.95; rho <= 0.951; rho += 0.05) {
        for (double y : {-4.0, -1.0, 0.0, 0.5, 3.0}) {
            for (std::size_t n : {10u, 50u, 400u}) {
                const Ar1Params p(rho, 0.8);
                const auto corr = closed_form_c_interval(p, y, 0.1, n, EstimatorKind::LeastSquares);
                const auto dist = conditional_predictive(p, y, 1);
                const auto base = equal_density_interval(dist, 0.1);
                const double delta = delta_from_c(corr, dist.pdf(base.upper));
                CHECK(delta >= 0.0);
                const auto iv = improved_interval(p, y, 1, 0.1, corr);
                CHECK(iv.length() >= base.length());
            }
        }
    }
}

TEST_CASE("limits and interval lengths increase with the level", "[prediction][property]") {
    const Ar1Params p(0.6, 1.3);
    double prev_lim = -INFINITY, prev_len = 0.0, prev_imp = -INFINITY;
    for (double level = 0.5; level < 0.999; level += 0.01) {
        const double alpha = 1.0 - level;
        const double lim = estimative_upper_limit(p, 1.5, 1, alpha).value;
        const double len = equal_density_interval(conditional_predictive(p, 1.5, 1), alpha).length();
        const double imp =
            improved_upper_limit(p, 1.5, 1, alpha, closed_form_c_limit(p, 1.5, alpha, 200, EstimatorKind::LeastSquares))
                .value;
        CHECK(lim > prev_lim);
        CHECK(len > prev_len);
        CHECK(imp > prev_imp);
        prev_lim = lim;
        prev_len = len;
        prev_imp = imp;
    }
}

TEST_CASE("improved-minus-estimative gap is O(1/n)", "[prediction][property]") {
    const Ar1Params p(0.4, 1.0);
    const double y = 1.7;
    std::vector<double> scaled;
    for (std::size_t n = 25; n <= 25 * 1024; n *= 2) {
        const double z = estimative_upper_limit(p, y, 1, 0.05).value;
        const double zp =
            improved_upper_limit(p, y, 1, 0.05, closed_form_c_limit(p, y, 0.05, n, EstimatorKind::BackwardConditional))
                .value;
        scaled.push_back(static_cast<double>(n) * std::abs(zp - z));
    }
    for (double s : scaled) CHECK(s < 10.0);
    for (std::size_t i = 1; i < scaled.size(); ++i) CHECK_THAT(scaled[i], WithinAbs(scaled.back(), 1e-9));
}

TEST_CASE("corrections must match the request", "[prediction][errors]") {
    const Ar1Params p(0.5, 1.0);
    const auto lim = closed_form_c_limit(p, 2.0, 0.05, 50, EstimatorKind::LeastSquares);
    const auto itv = closed_form_c_interval(p, 2.0, 0.05, 50, EstimatorKind::LeastSquares);
    CHECK_THROWS_AS(improved_upper_limit(p, 2.0, 1, 0.05, itv), ParameterError);
    CHECK_THROWS_AS(improved_interval(p, 2.0, 1, 0.05, lim), ParameterError);
    CHECK_THROWS_AS(improved_upper_limit(p, 2.0, 1, 0.10, lim), ParameterError);
    CHECK_THROWS_AS(solve_equal_density_interval(GammaDensity{}, 0.0), ParameterError);
}

TEST_CASE("density underflow at the limit raises", "[prediction][errors]") {
    CHECK_THROWS_AS(detail::require_density(1e-301, "limit"), NumericError);
    CHECK_THROWS_AS(detail::require_density(std::nan(""), "limit"), NumericError);
    CHECK_NOTHROW(detail::require_density(1e-299, "limit"));
}
