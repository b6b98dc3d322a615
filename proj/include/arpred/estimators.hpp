#pragma once

// Estimators of the AR(1) coefficient, their first-order biases conditional on
// the last observation, and the inverse expected information.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "arpred/ar1_model.hpp"
#include "arpred/errors.hpp"
#include "arpred/random.hpp"

namespace arpred {

enum class EstimatorKind { LeastSquares, YuleWalker, BackwardConditional };

inline constexpr std::array<EstimatorKind, 3> kAllEstimatorKinds = {
    EstimatorKind::LeastSquares, EstimatorKind::YuleWalker, EstimatorKind::BackwardConditional};

[[nodiscard]] constexpr std::string_view to_string(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::LeastSquares: return "least_squares";
        case EstimatorKind::YuleWalker: return "yule_walker";
        case EstimatorKind::BackwardConditional: return "backward_conditional";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<EstimatorKind> parse_estimator_kind(std::string_view s) noexcept {
    for (auto kind : kAllEstimatorKinds) {
        if (to_string(kind) == s) return kind;
    }
    return std::nullopt;
}

[[nodiscard]] constexpr bool has_closed_form_bias(EstimatorKind kind) noexcept {
    return kind != EstimatorKind::YuleWalker;
}

/// Coefficient b of n^{-1} in E(rho_hat - rho | Y_n = y_n).
struct ConditionalBias {
    double b = 0.0;
    EstimatorKind kind = EstimatorKind::LeastSquares;
};

/// The sufficient sums shared by all three estimators.
struct SeriesSums {
    double cross = 0.0;     // sum_{t=2..n} y_t y_{t-1}
    double sum_sq = 0.0;    // sum_{t=1..n} y_t^2
    double first_sq = 0.0;  // y_1^2
    double last_sq = 0.0;   // y_n^2

    [[nodiscard]] double denominator(EstimatorKind kind) const noexcept {
        switch (kind) {
            case EstimatorKind::LeastSquares: return sum_sq - last_sq;
            case EstimatorKind::YuleWalker: return sum_sq;
            case EstimatorKind::BackwardConditional: return sum_sq - first_sq;
        }
        return sum_sq;
    }
};

[[nodiscard]] inline SeriesSums series_sums(const TimeSeries& series) noexcept {
    const auto y = series.values();
    SeriesSums s;
    for (std::size_t t = 0; t < y.size(); ++t) {
        s.sum_sq += y[t] * y[t];
        if (t > 0) s.cross += y[t] * y[t - 1];
    }
    s.first_sq = y.front() * y.front();
    s.last_sq = y.back() * y.back();
    return s;
}

/// rho estimate from precomputed sums; nullopt on a zero denominator.
[[nodiscard]] inline std::optional<double> try_estimate(EstimatorKind kind, const SeriesSums& s) noexcept {
    const double denom = s.denominator(kind);
    if (!(denom > 0.0)) return std::nullopt;
    return s.cross / denom;
}

[[nodiscard]] inline double estimate(EstimatorKind kind, const TimeSeries& series) {
    if (auto rho_hat = try_estimate(kind, series_sums(series))) return *rho_hat;
    throw DegenerateSeriesError(std::string(to_string(kind)) +
                                ": zero denominator (all-zero estimation window)");
}

namespace detail {

/// Backward-conditional path at (rho, sigma) pinned at y_n, reduced to its sums
/// on the fly. Consumes the stream in the same order as simulate_backward.
[[nodiscard]] inline SeriesSums backward_sums(double rho, double sigma, std::size_t n, double y_n,
                                              NormalStream& rng) noexcept {
    SeriesSums s;
    double next = y_n;
    s.last_sq = y_n * y_n;
    s.sum_sq = s.last_sq;
    for (std::size_t i = 1; i < n; ++i) {
        const double y = rho * next + sigma * rng();
        s.cross += y * next;
        s.sum_sq += y * y;
        next = y;
    }
    s.first_sq = next * next;
    return s;
}

/// Bias coefficient at an arbitrary real rho (plug-in estimates included).
[[nodiscard]] inline double bias_coefficient(EstimatorKind kind, double rho, double sigma2, double y_n) {
    switch (kind) {
        case EstimatorKind::LeastSquares:
            return y_n * y_n * (1.0 - rho * rho) * rho / sigma2 - 3.0 * rho;
        case EstimatorKind::BackwardConditional:
            return -2.0 * rho;
        case EstimatorKind::YuleWalker:
            break;
    }
    throw UnsupportedBiasError(
        "no closed-form conditional bias for yule_walker; use the simulated correction");
}

[[nodiscard]] inline double inverse_information(double rho, std::size_t n) noexcept {
    return (1.0 - rho * rho) / static_cast<double>(n);
}

}  // namespace detail

[[nodiscard]] inline ConditionalBias conditional_bias(EstimatorKind kind, const Ar1Params& params, double y_n) {
    return {detail::bias_coefficient(kind, params.rho(), params.sigma2(), y_n), kind};
}

/// i^{rho rho} for the conditional Gaussian likelihood with sigma2 known.
[[nodiscard]] inline double inverse_information(const Ar1Params& params, std::size_t n) {
    detail::require_length(n);
    return detail::inverse_information(params.rho(), n);
}

}  // namespace arpred
