#pragma once

// Zero-mean Gaussian AR(1): Y_t = rho * Y_{t-1} + eps_t, eps_t ~ N(0, sigma2).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arpred/errors.hpp"
#include "arpred/normal.hpp"
#include "arpred/random.hpp"

namespace arpred {

/// Model parameter (rho, sigma2) of a stationary AR(1).
class Ar1Params {
public:
    Ar1Params(double rho, double sigma2) : rho_(rho), sigma2_(sigma2) {
        if (!(std::abs(rho) < 1.0)) {
            throw ParameterError("rho must satisfy |rho| < 1, got " + std::to_string(rho));
        }
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
            throw ParameterError("sigma2 must be positive and finite, got " +
                                 std::to_string(sigma2));
        }
    }

    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
    [[nodiscard]] double sigma() const noexcept { return std::sqrt(sigma2_); }
    [[nodiscard]] double stationary_variance() const noexcept {
        return sigma2_ / (1.0 - rho_ * rho_);
    }

    friend bool operator==(const Ar1Params&, const Ar1Params&) = default;

private:
    double rho_;
    double sigma2_;
};

inline constexpr std::size_t kMinSeriesLength = 3;

/// Observations y_1..y_n, n >= 3.
class TimeSeries {
public:
    explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < kMinSeriesLength) {
            throw ParameterError("time series needs at least 3 observations, got " +
                                 std::to_string(values_.size()));
        }
    }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double last() const noexcept { return values_.back(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

/// Gaussian law of Y_{n+k} given Y_n = y_n.
struct PredictiveDist {
    double mean = 0.0;
    double variance = 1.0;
    int horizon = 1;

    [[nodiscard]] double sd() const noexcept { return std::sqrt(variance); }
    [[nodiscard]] double mode() const noexcept { return mean; }
    [[nodiscard]] double scale() const noexcept { return sd(); }
    [[nodiscard]] double cdf(double z) const noexcept { return normal::cdf((z - mean) / sd()); }
    [[nodiscard]] double pdf(double z) const noexcept {
        const double s = sd();
        return normal::pdf((z - mean) / s) / s;
    }
    /// Derivative of the density in z.
    [[nodiscard]] double pdf_derivative(double z) const noexcept {
        return -(z - mean) / variance * pdf(z);
    }
    [[nodiscard]] double quantile(double p) const { return mean + sd() * normal::quantile(p); }
};

namespace detail {

inline void require_horizon(int k) {
    if (k < 1) throw ParameterError("horizon k must be >= 1, got " + std::to_string(k));
}

inline void require_length(std::size_t n) {
    if (n < kMinSeriesLength) {
        throw ParameterError("series length n must be >= 3, got " + std::to_string(n));
    }
}

/// k-step law for an arbitrary real rho. Plug-in estimates may fall outside
/// the stationary region; the k-step conditional law is still well defined.
[[nodiscard]] inline PredictiveDist predictive(double rho, double sigma2, double y_n, int k) noexcept {
    double power = 1.0;
    double var_factor = 0.0;
    for (int j = 0; j < k; ++j) {
        var_factor += power * power;
        power *= rho;
    }
    return PredictiveDist{power * y_n, sigma2 * var_factor, k};
}

}  // namespace detail

[[nodiscard]] inline PredictiveDist conditional_predictive(const Ar1Params& params, double y_n, int k) {
    detail::require_horizon(k);
    return detail::predictive(params.rho(), params.sigma2(), y_n, k);
}

[[nodiscard]] inline double predictive_cdf(const PredictiveDist& dist, double z) noexcept {
    return dist.cdf(z);
}

[[nodiscard]] inline double predictive_pdf(const PredictiveDist& dist, double z) noexcept {
    return dist.pdf(z);
}

[[nodiscard]] inline double predictive_quantile(const PredictiveDist& dist, double p) {
    return dist.quantile(p);
}

/// Stationary path: Y_1 ~ N(0, sigma2 / (1 - rho^2)), then the forward recursion.
[[nodiscard]] inline TimeSeries simulate_forward(const Ar1Params& params, std::size_t n, SeedSpec seed) {
    detail::require_length(n);
    NormalStream rng(seed);
    const double sigma = params.sigma();
    std::vector<double> y(n);
    y[0] = std::sqrt(params.stationary_variance()) * rng();
    for (std::size_t t = 1; t < n; ++t) y[t] = params.rho() * y[t - 1] + sigma * rng();
    return TimeSeries(std::move(y));
}

/// Path drawn from the exact conditional law of (Y_1..Y_n) given Y_n = y_n,
/// using the time-reversed recursion Y_t = rho * Y_{t+1} + eta_t.
[[nodiscard]] inline TimeSeries simulate_backward(const Ar1Params& params, std::size_t n, double y_n,
                                                  SeedSpec seed) {
    detail::require_length(n);
    NormalStream rng(seed);
    const double sigma = params.sigma();
    std::vector<double> y(n);
    y[n - 1] = y_n;
    for (std::size_t t = n - 1; t-- > 0;) y[t] = params.rho() * y[t + 1] + sigma * rng();
    return TimeSeries(std::move(y));
}

}  // namespace arpred
