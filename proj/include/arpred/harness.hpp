#pragma once

// Monte-Carlo studies of conditional coverage and efficiency for estimative
// and improved predictors at k = 1.
//
// Every study draws backward-conditional replicates at the true parameter with
// Y_n pinned, builds the predictor from each replicate's estimate, and
// averages the exact conditional probability the true law assigns to it.
// Replicate m always uses stream (seed, m), so runs that differ only in
// estimator kind, method, or worker count see identical series.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arpred/ar1_model.hpp"
#include "arpred/correction.hpp"
#include "arpred/errors.hpp"
#include "arpred/estimators.hpp"
#include "arpred/normal.hpp"
#include "arpred/prediction.hpp"
#include "arpred/random.hpp"
#include "arpred/replicates.hpp"

namespace arpred {

enum class CoverageMethod { EstimativeLimit, ImprovedLimit, EstimativeInterval, ImprovedInterval };

inline constexpr std::array<CoverageMethod, 4> kAllCoverageMethods = {
    CoverageMethod::EstimativeLimit, CoverageMethod::ImprovedLimit, CoverageMethod::EstimativeInterval,
    CoverageMethod::ImprovedInterval};

[[nodiscard]] constexpr std::string_view to_string(CoverageMethod m) noexcept {
    switch (m) {
        case CoverageMethod::EstimativeLimit: return "estimative_limit";
        case CoverageMethod::ImprovedLimit: return "improved_limit";
        case CoverageMethod::EstimativeInterval: return "estimative_interval";
        case CoverageMethod::ImprovedInterval: return "improved_interval";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<CoverageMethod> parse_coverage_method(std::string_view s) noexcept {
    for (auto m : kAllCoverageMethods) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

[[nodiscard]] constexpr bool is_improved(CoverageMethod m) noexcept {
    return m == CoverageMethod::ImprovedLimit || m == CoverageMethod::ImprovedInterval;
}

[[nodiscard]] constexpr CorrectionTarget target_of(CoverageMethod m) noexcept {
    return (m == CoverageMethod::EstimativeLimit || m == CoverageMethod::ImprovedLimit)
               ? CorrectionTarget::Limit
               : CorrectionTarget::Interval;
}

struct CoverageOptions {
    unsigned workers = default_worker_count();
    /// Freeze rho_hat at the true rho (the known-parameter predictor).
    bool oracle = false;
    /// ClosedForm is the fast path. Simulated re-derives every replicate's
    /// correction by a nested run of `inner_replicates`; expensive, meant for
    /// spot checks.
    CorrectionSource improved_source = CorrectionSource::ClosedForm;
    std::uint64_t inner_replicates = 10000;
};

struct CoverageReport {
    CoverageMethod method = CoverageMethod::EstimativeLimit;
    EstimatorKind kind = EstimatorKind::LeastSquares;
    double rho = 0.0;
    double sigma2 = 1.0;
    double y_n = 0.0;
    double alpha = 0.05;
    std::size_t n = 0;
    std::uint64_t replicates = 0;
    double coverage = 0.0;
    /// coverage - (1 - alpha), accumulated directly for precision.
    double error = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

// Plug-in estimates may leave the stationary region; nested simulation needs a
// valid parameter, so it runs at the estimate pulled just inside the boundary.
inline constexpr double kNestedRhoBound = 0.995;

/// Builds the method's predictor from rho_hat (k = 1, sigma known) and returns
/// the mass the true law assigns to it, minus the nominal level.
class CoverageEvaluator {
public:
    CoverageEvaluator(CoverageMethod method, EstimatorKind kind, const Ar1Params& truth, double y_n,
                      double alpha, std::size_t n, const CoverageOptions& options, std::uint64_t seed)
        : method_(method),
          kind_(kind),
          rho_(truth.rho()),
          sigma_(truth.sigma()),
          sigma2_(truth.sigma2()),
          y_n_(y_n),
          alpha_(alpha),
          n_(n),
          options_(options),
          seed_(seed),
          zstar_(target_quantile(target_of(method), alpha)),
          phi_(normal::pdf(zstar_)) {}

    [[nodiscard]] double operator()(double rho_hat, std::uint64_t m) const {
        const double center = rho_hat * y_n_;
        const double truth_mean = rho_ * y_n_;
        double half = sigma_ * zstar_;
        double shift = 0.0;
        if (is_improved(method_)) shift = improvement(rho_hat, m);
        if (target_of(method_) == CorrectionTarget::Limit) {
            const double limit = center + half + shift;
            return normal::cdf((limit - truth_mean) / sigma_) - (1.0 - alpha_);
        }
        half += shift;
        const double upper = (center + half - truth_mean) / sigma_;
        const double lower = (center - half - truth_mean) / sigma_;
        return (normal::cdf(upper) - normal::cdf(lower)) - (1.0 - alpha_);
    }

private:
    // d for limits, delta for intervals, at the plug-in point (rho_hat, y_n).
    [[nodiscard]] double improvement(double rho_hat, std::uint64_t m) const {
        const double f = phi_ / sigma_;
        const CorrectionTarget target = target_of(method_);
        if (options_.improved_source == CorrectionSource::ClosedForm) {
            if (target == CorrectionTarget::Limit) {
                const double b = bias_coefficient(kind_, rho_hat, sigma2_, y_n_);
                return -limit_c_over_n(rho_hat, sigma_, y_n_, zstar_, b, n_) / f;
            }
            return -interval_c_over_n(rho_hat, sigma_, y_n_, zstar_, n_) / (2.0 * f);
        }
        const double plug = std::clamp(rho_hat, -kNestedRhoBound, kNestedRhoBound);
        SimulationOptions inner;
        inner.workers = 1;
        const Correction c = simulated_c(Ar1Params(plug, sigma2_), y_n_, alpha_, n_, options_.inner_replicates,
                                         kind_, target, mix_seed(seed_, m), inner);
        if (target == CorrectionTarget::Limit) return d_from_c(c, f);
        return delta_from_c(c, f);
    }

    CoverageMethod method_;
    EstimatorKind kind_;
    double rho_;
    double sigma_;
    double sigma2_;
    double y_n_;
    double alpha_;
    std::size_t n_;
    CoverageOptions options_;
    std::uint64_t seed_;
    double zstar_;
    double phi_;
};

inline void require_closed_bias(CoverageMethod method, EstimatorKind kind, const CoverageOptions& options) {
    if (is_improved(method) && target_of(method) == CorrectionTarget::Limit &&
        options.improved_source == CorrectionSource::ClosedForm && !has_closed_form_bias(kind)) {
        throw UnsupportedBiasError("improved limit with closed-form correction needs a known bias; " +
                                   std::string(to_string(kind)) + " has none");
    }
}

}  // namespace detail

/// Monte-Carlo estimate of the conditional coverage H_alpha(theta | y_n).
[[nodiscard]] inline CoverageReport conditional_coverage(CoverageMethod method, EstimatorKind kind,
                                                         const Ar1Params& params_true, double y_n, double alpha,
                                                         std::size_t n, std::uint64_t replicates,
                                                         std::uint64_t seed, const CoverageOptions& options = {}) {
    detail::require_alpha(alpha);
    detail::require_length(n);
    detail::require_replicates(replicates);
    detail::require_closed_bias(method, kind, options);

    const detail::CoverageEvaluator evaluate(method, kind, params_true, y_n, alpha, n, options, seed);
    const double rho = params_true.rho();
    const double sigma = params_true.sigma();

    const auto moments = run_replicates<2>(replicates, options.workers, [&](std::uint64_t m) {
        if (options.oracle) return std::array<double, 2>{evaluate(rho, m), 0.0};
        const auto draw = detail::draw_conditional(rho, sigma, n, y_n, seed, m);
        const double rho_hat = *try_estimate(kind, draw.sums);
        return std::array<double, 2>{evaluate(rho_hat, m), static_cast<double>(draw.redraws)};
    });
    detail::check_redraws(moments[1].sum.value(), replicates);

    CoverageReport report;
    report.method = method;
    report.kind = kind;
    report.rho = rho;
    report.sigma2 = params_true.sigma2();
    report.y_n = y_n;
    report.alpha = alpha;
    report.n = n;
    report.replicates = replicates;
    report.error = moments[0].mean();
    report.coverage = (1.0 - alpha) + report.error;
    report.std_error = moments[0].std_error();
    report.seed = seed;
    return report;
}

struct ScalingPoint {
    std::size_t n = 0;
    double coverage = 0.0;
    double error = 0.0;
    double std_error = 0.0;
    /// |error| within 2 standard errors of zero; excluded from the fit.
    bool noise_dominated = false;
};

struct ScalingReport {
    CoverageMethod method = CoverageMethod::EstimativeLimit;
    EstimatorKind kind = EstimatorKind::LeastSquares;
    std::vector<ScalingPoint> points;
    bool fitted = false;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double slope_std_error = std::numeric_limits<double>::quiet_NaN();
    std::string note;

    [[nodiscard]] bool all_noise_dominated() const noexcept {
        return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.noise_dominated; });
    }
};

struct SlopeFit {
    bool fitted = false;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
};

/// Weighted least-squares slope of log|error| on log n. The standard error of
/// log|error| is se/|error| (delta method), so weights are (|error|/se)^2.
[[nodiscard]] inline SlopeFit fit_log_log_slope(const std::vector<ScalingPoint>& points) {
    double sw = 0.0, swx = 0.0, swy = 0.0;
    std::vector<std::array<double, 3>> used;
    for (const auto& p : points) {
        if (p.noise_dominated) continue;
        const double se = std::max(p.std_error, 1e-300);
        const double w = (p.error / se) * (p.error / se);
        used.push_back({std::log(static_cast<double>(p.n)), std::log(std::abs(p.error)), w});
    }
    SlopeFit fit;
    fit.used = used.size();
    if (used.size() < 2) return fit;
    for (const auto& [x, y, w] : used) {
        sw += w;
        swx += w * x;
        swy += w * y;
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y, w] : used) {
        sxx += w * (x - xbar) * (x - xbar);
        sxy += w * (x - xbar) * (y - ybar);
    }
    if (!(sxx > 0.0)) return fit;
    fit.fitted = true;
    fit.slope = sxy / sxx;
    fit.std_error = 1.0 / std::sqrt(sxx);
    return fit;
}

[[nodiscard]] inline ScalingReport scaling_study(CoverageMethod method, EstimatorKind kind,
                                                 const Ar1Params& params_true, double y_n, double alpha,
                                                 const std::vector<std::size_t>& n_grid, std::uint64_t replicates,
                                                 std::uint64_t seed, const CoverageOptions& options = {}) {
    if (n_grid.size() < 3) throw ParameterError("n_grid needs at least 3 lengths");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
        if (n_grid[i] <= n_grid[i - 1]) throw ParameterError("n_grid must be strictly increasing");
    }
    if (n_grid.back() < 8 * n_grid.front()) throw ParameterError("n_grid must span at least a factor of 8");

    ScalingReport report;
    report.method = method;
    report.kind = kind;
    for (std::size_t n : n_grid) {
        const CoverageReport r =
            conditional_coverage(method, kind, params_true, y_n, alpha, n, replicates, seed, options);
        report.points.push_back({n, r.coverage, r.error, r.std_error, std::abs(r.error) <= 2.0 * r.std_error});
    }
    const SlopeFit fit = fit_log_log_slope(report.points);
    report.fitted = fit.fitted;
    report.slope = fit.slope;
    report.slope_std_error = fit.std_error;
    const auto excluded = report.points.size() - fit.used;
    if (!fit.fitted) {
        report.note = "no slope fit: fewer than 2 cells resolved above noise";
    } else if (excluded > 0) {
        report.note = std::to_string(excluded) + " noise-dominated cell(s) excluded from fit";
    }
    return report;
}

struct EfficiencyEntry {
    EstimatorKind kind = EstimatorKind::LeastSquares;
    double mean_estimative = 0.0;
    double se_estimative = 0.0;
    double mean_improved = 0.0;
    double se_improved = 0.0;
    /// Paired differences against the first kind (common random numbers).
    double diff_estimative = 0.0;
    double se_diff_estimative = 0.0;
    double diff_improved = 0.0;
    double se_diff_improved = 0.0;
};

/// Conditional expected limit (or interval length) per estimator, estimative
/// and improved, with the bias-free second-order theoretical value.
struct EfficiencyReport {
    CorrectionTarget target = CorrectionTarget::Limit;
    double rho = 0.0;
    double sigma2 = 1.0;
    double y_n = 0.0;
    double alpha = 0.05;
    std::size_t n = 0;
    std::uint64_t replicates = 0;
    std::uint64_t seed = 0;
    std::vector<EfficiencyEntry> entries;
    /// z_alpha(theta, y_n) or u - l at the true parameter.
    double exact_value = 0.0;
    /// exact_value plus the second-order term in which the bias does not appear.
    double theory_improved = 0.0;
};

[[nodiscard]] inline EfficiencyReport efficiency_study(const Ar1Params& params_true, double y_n, double alpha,
                                                       std::size_t n, std::uint64_t replicates,
                                                       const std::vector<EstimatorKind>& kinds,
                                                       CorrectionTarget target, std::uint64_t seed,
                                                       unsigned workers = default_worker_count()) {
    detail::require_alpha(alpha);
    detail::require_length(n);
    detail::require_replicates(replicates);
    if (kinds.size() < 2 || kinds.size() > kAllEstimatorKinds.size()) {
        throw ParameterError("efficiency study needs 2 or 3 estimator kinds");
    }
    for (auto kind : kinds) {
        if (!has_closed_form_bias(kind)) {
            throw UnsupportedBiasError("efficiency study needs kinds with known biases; got " +
                                       std::string(to_string(kind)));
        }
    }

    const double rho = params_true.rho();
    const double sigma = params_true.sigma();
    const double sigma2 = params_true.sigma2();
    const double zstar = detail::target_quantile(target, alpha);
    const double f = normal::pdf(zstar) / sigma;
    const std::size_t nk = kinds.size();

    // Per kind: estimative value, improved value, and both paired differences.
    constexpr std::size_t kSlots = 3 * 4;
    const auto moments = run_replicates<kSlots + 1>(replicates, workers, [&](std::uint64_t m) {
        std::array<double, kSlots + 1> out{};
        const auto draw = detail::draw_conditional(rho, sigma, n, y_n, seed, m);
        double est0 = 0.0, imp0 = 0.0;
        for (std::size_t i = 0; i < nk; ++i) {
            const double rho_hat = *try_estimate(kinds[i], draw.sums);
            double est, imp;
            if (target == CorrectionTarget::Limit) {
                est = rho_hat * y_n + sigma * zstar;
                const double b = detail::bias_coefficient(kinds[i], rho_hat, sigma2, y_n);
                imp = est - detail::limit_c_over_n(rho_hat, sigma, y_n, zstar, b, n) / f;
            } else {
                est = 2.0 * sigma * zstar;
                imp = est - detail::interval_c_over_n(rho_hat, sigma, y_n, zstar, n) / f;
            }
            if (i == 0) {
                est0 = est;
                imp0 = imp;
            }
            out[4 * i + 0] = est;
            out[4 * i + 1] = imp;
            out[4 * i + 2] = est - est0;
            out[4 * i + 3] = imp - imp0;
        }
        out[kSlots] = static_cast<double>(draw.redraws);
        return out;
    });
    detail::check_redraws(moments[kSlots].sum.value(), replicates);

    EfficiencyReport report;
    report.target = target;
    report.rho = rho;
    report.sigma2 = sigma2;
    report.y_n = y_n;
    report.alpha = alpha;
    report.n = n;
    report.replicates = replicates;
    report.seed = seed;
    for (std::size_t i = 0; i < nk; ++i) {
        EfficiencyEntry e;
        e.kind = kinds[i];
        e.mean_estimative = moments[4 * i + 0].mean();
        e.se_estimative = moments[4 * i + 0].std_error();
        e.mean_improved = moments[4 * i + 1].mean();
        e.se_improved = moments[4 * i + 1].std_error();
        e.diff_estimative = moments[4 * i + 2].mean();
        e.se_diff_estimative = moments[4 * i + 2].std_error();
        e.diff_improved = moments[4 * i + 3].mean();
        e.se_diff_improved = moments[4 * i + 3].std_error();
        report.entries.push_back(e);
    }
    const double info = detail::inverse_information(rho, n);
    if (target == CorrectionTarget::Limit) {
        report.exact_value = rho * y_n + sigma * zstar;
        // -(f'/2f) (dz/drho)^2 i = (zstar / 2 sigma) y_n^2 i
        report.theory_improved = report.exact_value + zstar / (2.0 * sigma) * y_n * y_n * info;
    } else {
        report.exact_value = 2.0 * sigma * zstar;
        // -1/2 (f'(u)/f(u) - f'(l)/f(l)) y_n^2 i = (zstar / sigma) y_n^2 i
        report.theory_improved = report.exact_value + zstar / sigma * y_n * y_n * info;
    }
    return report;
}

}  // namespace arpred
