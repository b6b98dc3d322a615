#pragma once

// Estimative and improved upper prediction limits and equal-density
// prediction intervals for Y_{n+k}.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>

#include "arpred/ar1_model.hpp"
#include "arpred/correction.hpp"
#include "arpred/errors.hpp"
#include "arpred/normal.hpp"

namespace arpred {

enum class Flavor { Estimative, Improved };

[[nodiscard]] constexpr std::string_view to_string(Flavor f) noexcept {
    return f == Flavor::Estimative ? "estimative" : "improved";
}

struct UpperLimit {
    double value = 0.0;
    double alpha = 0.05;
    Flavor flavor = Flavor::Estimative;
};

struct CentralInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.05;
    Flavor flavor = Flavor::Estimative;

    [[nodiscard]] double length() const noexcept { return upper - lower; }
    [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

/// A continuous unimodal density the equal-density solver can work with.
template <class D>
concept UnimodalDensity = requires(const D& d, double x) {
    { d.pdf(x) } -> std::convertible_to<double>;
    { d.cdf(x) } -> std::convertible_to<double>;
    { d.mode() } -> std::convertible_to<double>;
    { d.scale() } -> std::convertible_to<double>;
};

namespace detail {

inline constexpr double kDensityFloor = 1e-300;

/// Point on one side of the mode where the density falls to `level`.
/// `direction` is -1 for the left branch, +1 for the right.
template <UnimodalDensity D>
[[nodiscard]] double density_crossing(const D& dist, double level, int direction) {
    const double mode = dist.mode();
    const double scale = dist.scale();
    double inner = mode;
    double step = scale;
    double outer = mode + direction * step;
    int expansions = 0;
    while (dist.pdf(outer) >= level) {
        inner = outer;
        step *= 2.0;
        outer = mode + direction * step;
        if (++expansions > 2000) throw NumericError("equal-density solver: density never drops below level");
    }
    // pdf(inner) >= level > pdf(outer)
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (inner + outer);
        if (mid == inner || mid == outer) break;
        if (dist.pdf(mid) >= level) {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    return 0.5 * (inner + outer);
}

}  // namespace detail

/// Equal-density interval of any unimodal density, by bisection on the
/// density level: the mass inside {x : f(x) >= h} decreases in h.
template <UnimodalDensity D>
[[nodiscard]] CentralInterval solve_equal_density_interval(const D& dist, double alpha,
                                                           double tolerance = 1e-10) {
    detail::require_alpha(alpha);
    const double target = 1.0 - alpha;
    const double peak = dist.pdf(dist.mode());
    double lo = 0.0;   // mass(lo) > target
    double hi = peak;  // mass(hi) < target
    double lower = dist.mode();
    double upper = dist.mode();
    double mass = 0.0;
    for (int it = 0; it < 300; ++it) {
        const double level = 0.5 * (lo + hi);
        lower = detail::density_crossing(dist, level, -1);
        upper = detail::density_crossing(dist, level, +1);
        mass = dist.cdf(upper) - dist.cdf(lower);
        if (std::abs(mass - target) <= tolerance) return {lower, upper, alpha, Flavor::Estimative};
        if (mass > target) {
            lo = level;
        } else {
            hi = level;
        }
    }
    std::ostringstream msg;
    msg.precision(17);
    msg << "equal-density solver did not converge: alpha=" << alpha << " level in [" << lo << ", " << hi
        << "] mass=" << mass << " target=" << target;
    throw NumericError(msg.str());
}

/// Gaussian fast path: mean -/+ sd * Phi^{-1}(1 - alpha/2).
[[nodiscard]] inline CentralInterval equal_density_interval(const PredictiveDist& dist, double alpha) {
    detail::require_alpha(alpha);
    const double half = dist.sd() * normal::quantile(1.0 - 0.5 * alpha);
    return {dist.mean - half, dist.mean + half, alpha, Flavor::Estimative};
}

[[nodiscard]] inline UpperLimit estimative_upper_limit(const Ar1Params& theta_hat, double y_n, int k,
                                                       double alpha) {
    detail::require_alpha(alpha);
    const PredictiveDist dist = conditional_predictive(theta_hat, y_n, k);
    return {dist.quantile(1.0 - alpha), alpha, Flavor::Estimative};
}

namespace detail {

inline void require_matching(const Correction& corr, CorrectionTarget target, double alpha) {
    if (corr.target != target) {
        throw ParameterError("correction target is " + std::string(to_string(corr.target)) + ", expected " +
                             std::string(to_string(target)));
    }
    if (std::abs(corr.alpha - alpha) > 1e-12) {
        throw ParameterError("correction was computed for alpha=" + std::to_string(corr.alpha) +
                             ", requested alpha=" + std::to_string(alpha));
    }
}

inline void require_density(double f, std::string_view where) {
    if (!(f >= kDensityFloor)) {
        throw NumericError("predictive density at the " + std::string(where) +
                           " underflows (f < 1e-300); shift is undefined");
    }
}

}  // namespace detail

/// z+ = z + d with d = -(c/n) / f(z), corrections taken at the plug-in point.
[[nodiscard]] inline UpperLimit improved_upper_limit(const Ar1Params& theta_hat, double y_n, int k,
                                                     double alpha, const Correction& corr) {
    detail::require_matching(corr, CorrectionTarget::Limit, alpha);
    const PredictiveDist dist = conditional_predictive(theta_hat, y_n, k);
    const double z = dist.quantile(1.0 - alpha);
    const double f = dist.pdf(z);
    detail::require_density(f, "limit");
    return {z + d_from_c(corr, f), alpha, Flavor::Improved};
}

/// [l - delta, u + delta] with delta = -(c/n) / (2 f(u)).
[[nodiscard]] inline CentralInterval improved_interval(const Ar1Params& theta_hat, double y_n, int k,
                                                       double alpha, const Correction& corr) {
    detail::require_matching(corr, CorrectionTarget::Interval, alpha);
    const PredictiveDist dist = conditional_predictive(theta_hat, y_n, k);
    const CentralInterval base = equal_density_interval(dist, alpha);
    const double f = dist.pdf(base.upper);
    detail::require_density(f, "upper endpoint");
    const double delta = delta_from_c(corr, f);
    return {base.lower - delta, base.upper + delta, alpha, Flavor::Improved};
}

}  // namespace arpred
