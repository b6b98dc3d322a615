#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "arpred/harness.hpp"

using namespace arpred;
using Catch::Matchers::WithinAbs;

namespace {
constexpr auto LS = EstimatorKind::LeastSquares;
constexpr auto BC = EstimatorKind::BackwardConditional;
}  // namespace

TEST_CASE("method names round-trip", "[harness]") {
    for (auto m : kAllCoverageMethods) CHECK(parse_coverage_method(to_string(m)) == m);
    CHECK_FALSE(parse_coverage_method("bootstrap").has_value());
    CHECK(is_improved(CoverageMethod::ImprovedInterval));
    CHECK(target_of(CoverageMethod::EstimativeInterval) == CorrectionTarget::Interval);
}

TEST_CASE("oracle coverage is exactly nominal", "[harness]") {
    CoverageOptions o;
    o.oracle = true;
    for (auto m : {CoverageMethod::EstimativeLimit, CoverageMethod::EstimativeInterval}) {
        const auto r = conditional_coverage(m, LS, Ar1Params(0.5, 1.0), 2.0, 0.05, 50, 2000, 1, o);
        CHECK(std::abs(r.coverage - 0.95) <= 1e-9);
        CHECK(r.std_error <= 1e-12);
    }
}

TEST_CASE("coverage at the reference cell", "[harness][statistical]") {
    const Ar1Params p(0.5, 1.0);
    const auto est = conditional_coverage(CoverageMethod::EstimativeLimit, LS, p, 2.0, 0.05, 50, 1000000, 7);
    CAPTURE(est.coverage, est.std_error);
    CHECK(std::abs(est.coverage - 0.9449) <= 4.0 * est.std_error + 0.001);
    const auto imp = conditional_coverage(CoverageMethod::ImprovedLimit, LS, p, 2.0, 0.05, 50, 1000000, 7);
    CAPTURE(imp.coverage, imp.std_error);
    CHECK(std::abs(imp.coverage - 0.95) < std::abs(est.coverage - 0.95) / 3.0);
}

TEST_CASE("improved coverage is never worse than estimative", "[harness][statistical][property]") {
    for (double rho : {0.0, 0.5, 0.8}) {
        for (double y : {0.0, 1.0, 2.0}) {
            for (std::size_t n : {25u, 50u, 100u, 200u}) {
                for (auto kind : {LS, BC}) {
                    for (auto [est_m, imp_m] : {std::pair{CoverageMethod::EstimativeLimit, CoverageMethod::ImprovedLimit},
                                                std::pair{CoverageMethod::EstimativeInterval,
                                                          CoverageMethod::ImprovedInterval}}) {
                        const Ar1Params p(rho, 1.0);
                        const auto e = conditional_coverage(est_m, kind, p, y, 0.05, n, 20000, 303);
                        const auto i = conditional_coverage(imp_m, kind, p, y, 0.05, n, 20000, 303);
                        CAPTURE(rho, y, n, to_string(kind), to_string(imp_m), e.error, i.error);
                        CHECK(std::abs(i.error) <= std::abs(e.error) + 2.0 * std::hypot(e.std_error, i.std_error));
                    }
                }
            }
        }
    }
}

TEST_CASE("n times the estimative coverage error approaches c", "[harness][statistical]") {
    const Ar1Params p(0.5, 1.0);
    const double y = 2.0;
    for (std::size_t n : {50u, 100u, 200u, 400u}) {
        const double nn = static_cast<double>(n);
        const auto r = conditional_coverage(CoverageMethod::EstimativeLimit, LS, p, y, 0.05, n, 200000, 55);
        const double c = nn * closed_form_c_limit(p, y, 0.05, n, LS).c_over_n;
        // o(1) allowance: the remainder of n * error is O(1/n).
        const double allowance = 2.0 / nn;
        CAPTURE(n, nn * r.error, c, nn * r.std_error);
        CHECK(std::abs(nn * r.error - c) <= 4.0 * nn * r.std_error + allowance);
    }
}

TEST_CASE("log-log slope fit", "[harness]") {
    std::vector<ScalingPoint> pts;
    for (std::size_t n : {25u, 50u, 100u, 200u}) {
        const double e = 0.3 / std::pow(static_cast<double>(n), 1.5);
        pts.push_back({n, 0.9 - e, -e, e / 100.0, false});
    }
    const auto fit = fit_log_log_slope(pts);
    REQUIRE(fit.fitted);
    CHECK_THAT(fit.slope, WithinAbs(-1.5, 1e-12));
    pts[3].noise_dominated = true;
    pts[3].error = 1.0;  // ignored
    CHECK_THAT(fit_log_log_slope(pts).slope, WithinAbs(-1.5, 1e-12));
    CHECK(fit_log_log_slope(pts).used == 3);
}

TEST_CASE("scaling study validates its grid", "[harness][errors]") {
    const Ar1Params p(0.5, 1.0);
    CHECK_THROWS_AS(scaling_study(CoverageMethod::EstimativeLimit, LS, p, 1.0, 0.1, {25, 50}, 1000, 1), ParameterError);
    CHECK_THROWS_AS(scaling_study(CoverageMethod::EstimativeLimit, LS, p, 1.0, 0.1, {25, 100, 50}, 1000, 1),
                    ParameterError);
    CHECK_THROWS_AS(scaling_study(CoverageMethod::EstimativeLimit, LS, p, 1.0, 0.1, {25, 50, 100}, 1000, 1),
                    ParameterError);
}

TEST_CASE("oracle scaling has no slope", "[harness]") {
    CoverageOptions o;
    o.oracle = true;
    const auto r = scaling_study(CoverageMethod::EstimativeLimit, LS, Ar1Params(0.5, 1.0), 1.0, 0.1,
                                 {25, 50, 100, 200}, 2000, 1, o);
    CHECK_FALSE(r.fitted);
    CHECK_FALSE(r.note.empty());
    for (const auto& pt : r.points) {
        CHECK(pt.noise_dominated);
        CHECK(std::abs(pt.error) <= 4.0 * pt.std_error + 1e-12);
    }
}

TEST_CASE("closed-form improved methods reject Yule-Walker", "[harness][errors]") {
    const Ar1Params p(0.5, 1.0);
    CHECK_THROWS_AS(conditional_coverage(CoverageMethod::ImprovedLimit, EstimatorKind::YuleWalker, p, 1.0, 0.05, 50,
                                         1000, 1),
                    UnsupportedBiasError);
    CHECK_NOTHROW(conditional_coverage(CoverageMethod::EstimativeLimit, EstimatorKind::YuleWalker, p, 1.0, 0.05, 50,
                                       1000, 1));
    CHECK_NOTHROW(conditional_coverage(CoverageMethod::ImprovedInterval, EstimatorKind::YuleWalker, p, 1.0, 0.05, 50,
                                       1000, 1));
}

TEST_CASE("nested simulated corrections track the closed form", "[harness][statistical][slow]") {
    const Ar1Params p(0.5, 1.0);
    CoverageOptions nested;
    nested.improved_source = CorrectionSource::Simulated;
    nested.inner_replicates = 10000;
    const auto sim = conditional_coverage(CoverageMethod::ImprovedLimit, LS, p, 2.0, 0.05, 25, 1000, 17, nested);
    const auto cf = conditional_coverage(CoverageMethod::ImprovedLimit, LS, p, 2.0, 0.05, 25, 1000, 17);
    CAPTURE(sim.coverage, cf.coverage, sim.std_error);
    // Same outer replicates; the two corrections differ by O(1/n^2) plus inner noise.
    CHECK(std::abs(sim.coverage - cf.coverage) <= 4.0 * sim.std_error + 0.005);
    const auto est = conditional_coverage(CoverageMethod::EstimativeLimit, LS, p, 2.0, 0.05, 25, 1000, 17);
    CHECK(sim.coverage > est.coverage);
    // Yule-Walker works once the correction is simulated.
    CHECK_NOTHROW(conditional_coverage(CoverageMethod::ImprovedLimit, EstimatorKind::YuleWalker, p, 2.0, 0.05, 25,
                                       1000, 17, nested));
}

TEST_CASE("efficiency: estimator bias drops out of the improved limit", "[harness][statistical]") {
    const Ar1Params p(0.5, 1.0);
    const double y = 2.0;
    double est_scaled = 0.0;
    double prev_imp = INFINITY;
    for (std::size_t n : {50u, 100u, 200u}) {
        const double nn = static_cast<double>(n);
        const auto r = efficiency_study(p, y, 0.05, n, 1000000, {LS, BC}, CorrectionTarget::Limit, 99);
        REQUIRE(r.entries.size() == 2);
        const auto& bc = r.entries[1];
        est_scaled = nn * std::abs(bc.diff_estimative);
        const double imp_scaled = nn * std::abs(bc.diff_improved);
        CAPTURE(n, est_scaled, imp_scaled, nn * bc.se_diff_estimative);
        // estimative gap matches y * |b_LS - b_BC| = 2
        CHECK(std::abs(est_scaled - 2.0) <= 4.0 * nn * bc.se_diff_estimative);
        CHECK(imp_scaled < prev_imp);
        prev_imp = imp_scaled;
    }
    CHECK(prev_imp <= 0.25 * est_scaled);
}

TEST_CASE("efficiency: theoretical second-order value", "[harness][statistical]") {
    const Ar1Params p(0.5, 1.0);
    const auto r = efficiency_study(p, 2.0, 0.05, 100, 1000000, {LS, BC}, CorrectionTarget::Limit, 123);
    CHECK_THAT(r.exact_value, WithinAbs(1.0 + 1.6448536269514722, 1e-12));
    CHECK_THAT(r.theory_improved - r.exact_value, WithinAbs(0.0246728, 1e-7));
    for (const auto& e : r.entries) {
        CAPTURE(to_string(e.kind), e.mean_improved, e.se_improved);
        CHECK(std::abs(e.mean_improved - r.theory_improved) <= 4.0 * e.se_improved + 0.002);
    }
    const auto iv = efficiency_study(p, 2.0, 0.05, 100, 200000, {LS, BC}, CorrectionTarget::Interval, 123);
    CHECK_THAT(iv.exact_value, WithinAbs(2.0 * 1.959963984540054, 1e-12));
    for (const auto& e : iv.entries) {
        CHECK(std::abs(e.mean_improved - iv.theory_improved) <= 4.0 * e.se_improved + 0.002);
    }
}

TEST_CASE("common random numbers: kind order does not change per-kind results", "[harness][determinism]") {
    const Ar1Params p(0.8, 1.0);
    const auto a = efficiency_study(p, 1.0, 0.1, 60, 20000, {LS, BC}, CorrectionTarget::Limit, 5, 1);
    const auto b = efficiency_study(p, 1.0, 0.1, 60, 20000, {BC, LS}, CorrectionTarget::Limit, 5, 3);
    CHECK(a.entries[0].mean_estimative == b.entries[1].mean_estimative);
    CHECK(a.entries[1].mean_improved == b.entries[0].mean_improved);
    CHECK(a.entries[1].diff_estimative == -b.entries[1].diff_estimative);

    // Coverage runs for different kinds see the same series: in oracle mode the
    // estimator is never consulted and the results coincide bitwise.
    CoverageOptions o;
    o.oracle = true;
    const auto c1 = conditional_coverage(CoverageMethod::EstimativeInterval, LS, p, 1.0, 0.1, 60, 5000, 5, o);
    const auto c2 = conditional_coverage(CoverageMethod::EstimativeInterval, BC, p, 1.0, 0.1, 60, 5000, 5, o);
    CHECK(c1.coverage == c2.coverage);

    // The replicate draw itself takes no estimator argument.
    const auto d1 = detail::draw_conditional(0.8, 1.0, 60, 1.0, 5, 17);
    const auto d2 = detail::draw_conditional(0.8, 1.0, 60, 1.0, 5, 17);
    CHECK(d1.sums.cross == d2.sums.cross);
}

TEST_CASE("coverage is independent of the worker count", "[harness][determinism]") {
    const Ar1Params p(0.5, 1.0);
    CoverageOptions o1, o4;
    o1.workers = 1;
    o4.workers = 4;
    const auto a = conditional_coverage(CoverageMethod::ImprovedInterval, BC, p, 1.5, 0.1, 40, 30000, 8, o1);
    const auto b = conditional_coverage(CoverageMethod::ImprovedInterval, BC, p, 1.5, 0.1, 40, 30000, 8, o4);
    CHECK(a.coverage == b.coverage);
    CHECK(a.std_error == b.std_error);
}
