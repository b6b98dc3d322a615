#pragma once

// The O(1/n) conditional coverage defect c_alpha/n of estimative limits and
// equal-density intervals, and its conversion to the shifts that remove it.
//
// Two routes are provided. The closed form evaluates the second-order
// expansion of the coverage for a k = 1 Gaussian AR(1) with sigma2 known:
//
//   c/n = dG/drho_hat * b / n + 1/2 * d2G/drho_hat2 * i^{rho rho}
//
// with G(rho_hat) the true conditional probability assigned by the limit or
// interval built from rho_hat. The simulated route averages G over
// backward-conditional replicates, which needs no bias formula at all.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "arpred/ar1_model.hpp"
#include "arpred/errors.hpp"
#include "arpred/estimators.hpp"
#include "arpred/normal.hpp"
#include "arpred/random.hpp"
#include "arpred/replicates.hpp"

namespace arpred {

enum class CorrectionTarget { Limit, Interval };
enum class CorrectionSource { ClosedForm, Simulated };

[[nodiscard]] constexpr std::string_view to_string(CorrectionTarget t) noexcept {
    return t == CorrectionTarget::Limit ? "limit" : "interval";
}

[[nodiscard]] constexpr std::string_view to_string(CorrectionSource s) noexcept {
    return s == CorrectionSource::ClosedForm ? "closed" : "simulated";
}

/// A value of c_alpha(theta, y_n) / n.
struct Correction {
    double c_over_n = 0.0;
    double std_error = 0.0;  // zero for the closed form
    CorrectionTarget target = CorrectionTarget::Limit;
    CorrectionSource source = CorrectionSource::ClosedForm;
    std::size_t n = 0;
    double alpha = 0.05;
};

namespace detail {

inline void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0,1), got " + std::to_string(alpha));
    }
}

[[nodiscard]] inline Correction checked(Correction c) {
    if (!(std::abs(c.c_over_n) < 1.0)) {
        throw NumericError("coverage defect out of range: c/n = " + std::to_string(c.c_over_n));
    }
    return c;
}

/// Upper-limit defect at k = 1; zstar = Phi^{-1}(1 - alpha).
[[nodiscard]] inline double limit_c_over_n(double rho, double sigma, double y_n, double zstar,
                                           double bias, std::size_t n) noexcept {
    const double phi = normal::pdf(zstar);
    const double slope = y_n / sigma;
    const double first = phi * slope * bias / static_cast<double>(n);
    const double second = -0.5 * zstar * phi * slope * slope * inverse_information(rho, n);
    return first + second;
}

/// Equal-density interval defect at k = 1; zstar = Phi^{-1}(1 - alpha/2).
/// dG/drho_hat vanishes by symmetry so the bias drops out.
[[nodiscard]] inline double interval_c_over_n(double rho, double sigma, double y_n, double zstar,
                                              std::size_t n) noexcept {
    const double slope = y_n / sigma;
    return -zstar * normal::pdf(zstar) * slope * slope * inverse_information(rho, n);
}

}  // namespace detail

[[nodiscard]] inline Correction closed_form_c_limit(const Ar1Params& params, double y_n, double alpha,
                                                    std::size_t n, EstimatorKind kind) {
    detail::require_alpha(alpha);
    detail::require_length(n);
    const double b = conditional_bias(kind, params, y_n).b;
    const double zstar = normal::quantile(1.0 - alpha);
    return detail::checked({detail::limit_c_over_n(params.rho(), params.sigma(), y_n, zstar, b, n), 0.0,
                            CorrectionTarget::Limit, CorrectionSource::ClosedForm, n, alpha});
}

/// `kind` does not enter the value; it is accepted for interface symmetry.
[[nodiscard]] inline Correction closed_form_c_interval(const Ar1Params& params, double y_n, double alpha,
                                                       std::size_t n, [[maybe_unused]] EstimatorKind kind) {
    detail::require_alpha(alpha);
    detail::require_length(n);
    const double zstar = normal::quantile(1.0 - 0.5 * alpha);
    return detail::checked({detail::interval_c_over_n(params.rho(), params.sigma(), y_n, zstar, n), 0.0,
                            CorrectionTarget::Interval, CorrectionSource::ClosedForm, n, alpha});
}

/// Shift of an upper limit: d = -c/n / f(z).
[[nodiscard]] inline double d_from_c(const Correction& corr, double f_at_limit) {
    if (corr.target != CorrectionTarget::Limit) {
        throw ParameterError("d_from_c needs a limit-target correction");
    }
    if (!(f_at_limit > 0.0)) {
        throw ParameterError("density at the limit must be positive, got " + std::to_string(f_at_limit));
    }
    return -corr.c_over_n / f_at_limit;
}

/// Per-endpoint widening of an equal-density interval, the correction split
/// evenly between the two ends: delta = -c/n / (2 f(u)).
[[nodiscard]] inline double delta_from_c(const Correction& corr, double f_at_u) {
    if (corr.target != CorrectionTarget::Interval) {
        throw ParameterError("delta_from_c needs an interval-target correction");
    }
    if (!(f_at_u > 0.0)) {
        throw ParameterError("density at the endpoint must be positive, got " + std::to_string(f_at_u));
    }
    return -corr.c_over_n / (2.0 * f_at_u);
}

struct SimulationOptions {
    int horizon = 1;
    unsigned workers = default_worker_count();
};

inline constexpr std::uint64_t kMinReplicates = 1000;
inline constexpr std::uint32_t kMaxRedraws = 16;
inline constexpr double kMaxDegenerateFraction = 1e-3;

namespace detail {

struct ConditionalDraw {
    SeriesSums sums;
    std::uint32_t redraws = 0;
};

/// Backward-conditional replicate m. A path on which any estimator's
/// denominator vanishes is redrawn from the next substream.
[[nodiscard]] inline ConditionalDraw draw_conditional(double rho, double sigma, std::size_t n, double y_n,
                                                      std::uint64_t master_seed, std::uint64_t m) {
    for (std::uint32_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
        NormalStream rng({master_seed, m}, attempt);
        const SeriesSums s = backward_sums(rho, sigma, n, y_n, rng);
        if (s.denominator(EstimatorKind::LeastSquares) > 0.0 &&
            s.denominator(EstimatorKind::BackwardConditional) > 0.0) {
            return {s, attempt};
        }
    }
    throw DegenerateSeriesError("replicate " + std::to_string(m) + " degenerate after " +
                                std::to_string(kMaxRedraws) + " redraws");
}

inline void check_redraws(double redraws, std::uint64_t replicates) {
    if (redraws > kMaxDegenerateFraction * static_cast<double>(replicates)) {
        throw DegenerateSeriesError(std::to_string(static_cast<std::uint64_t>(redraws)) + " of " +
                                    std::to_string(replicates) +
                                    " replicates were degenerate (limit 0.1%)");
    }
}

inline void require_replicates(std::uint64_t m) {
    if (m < kMinReplicates) {
        throw ParameterError("replicate count M must be >= 1000, got " + std::to_string(m));
    }
}

/// Probability the true k-step law assigns to the limit or interval built from rho_hat.
[[nodiscard]] inline double assigned_mass(CorrectionTarget target, const PredictiveDist& truth,
                                          const PredictiveDist& plug, double zstar) noexcept {
    if (target == CorrectionTarget::Limit) return truth.cdf(plug.mean + plug.sd() * zstar);
    const double half = plug.sd() * zstar;
    return truth.cdf(plug.mean + half) - truth.cdf(plug.mean - half);
}

[[nodiscard]] inline double target_quantile(CorrectionTarget target, double alpha) {
    return normal::quantile(target == CorrectionTarget::Limit ? 1.0 - alpha : 1.0 - 0.5 * alpha);
}

}  // namespace detail

/// Monte-Carlo estimate of c/n at the plug-in parameter: the mean of
/// G(rho_hat_m) - (1 - alpha) over M backward-conditional replicates.
[[nodiscard]] inline Correction simulated_c(const Ar1Params& params_plug, double y_n, double alpha,
                                            std::size_t n, std::uint64_t replicates, EstimatorKind kind,
                                            CorrectionTarget target, std::uint64_t master_seed,
                                            const SimulationOptions& options = {}) {
    detail::require_alpha(alpha);
    detail::require_length(n);
    detail::require_horizon(options.horizon);
    detail::require_replicates(replicates);

    const double rho = params_plug.rho();
    const double sigma2 = params_plug.sigma2();
    const double sigma = params_plug.sigma();
    const int k = options.horizon;
    const double zstar = detail::target_quantile(target, alpha);
    const double nominal = 1.0 - alpha;
    const PredictiveDist truth = detail::predictive(rho, sigma2, y_n, k);

    const auto moments = run_replicates<2>(replicates, options.workers, [&](std::uint64_t m) {
        const auto draw = detail::draw_conditional(rho, sigma, n, y_n, master_seed, m);
        const double rho_hat = *try_estimate(kind, draw.sums);
        const PredictiveDist plug = detail::predictive(rho_hat, sigma2, y_n, k);
        const double g = detail::assigned_mass(target, truth, plug, zstar);
        return std::array<double, 2>{g - nominal, static_cast<double>(draw.redraws)};
    });
    detail::check_redraws(moments[1].sum.value(), replicates);
    return detail::checked({moments[0].mean(), moments[0].std_error(), target, CorrectionSource::Simulated,
                            n, alpha});
}

}  // namespace arpred
