#pragma once

// Batch front end: JSON run configuration in, CSV report out.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "arpred/ar1_model.hpp"
#include "arpred/correction.hpp"
#include "arpred/errors.hpp"
#include "arpred/estimators.hpp"
#include "arpred/harness.hpp"
#include "arpred/prediction.hpp"
#include "arpred/replicates.hpp"

namespace arpred::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Command { Simulate, Predict, Correct, Coverage, Scaling, Efficiency };

[[nodiscard]] constexpr std::string_view to_string(Command c) noexcept {
    switch (c) {
        case Command::Simulate: return "simulate";
        case Command::Predict: return "predict";
        case Command::Correct: return "correct";
        case Command::Coverage: return "coverage";
        case Command::Scaling: return "scaling";
        case Command::Efficiency: return "efficiency";
    }
    return "unknown";
}

enum class TargetSelection { Limit, Interval, Both };

struct RunConfig {
    Command command = Command::Predict;
    std::optional<double> rho;
    std::optional<double> sigma2;
    std::optional<double> y_n;
    std::vector<double> data;
    double alpha = 0.05;
    int k = 1;
    std::optional<std::size_t> n;
    std::vector<std::size_t> n_grid;
    std::uint64_t replicates = 1000000;
    std::uint64_t inner_replicates = 10000;
    std::vector<EstimatorKind> estimators;
    std::vector<CoverageMethod> methods;
    CorrectionSource correction = CorrectionSource::ClosedForm;
    TargetSelection target = TargetSelection::Both;
    bool backward = false;
    bool oracle = false;
    std::uint64_t seed = 0;
    unsigned workers = default_worker_count();
    std::string out;

    [[nodiscard]] std::vector<CorrectionTarget> targets() const {
        switch (target) {
            case TargetSelection::Limit: return {CorrectionTarget::Limit};
            case TargetSelection::Interval: return {CorrectionTarget::Interval};
            case TargetSelection::Both: break;
        }
        return {CorrectionTarget::Limit, CorrectionTarget::Interval};
    }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void fail(std::string_view key, std::string_view what) {
    throw ConfigError("config key '" + std::string(key) + "': " + std::string(what));
}

inline double get_number(const json& doc, std::string_view key) {
    const auto& v = doc.at(std::string(key));
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
}

inline std::uint64_t get_count(const json& doc, std::string_view key) {
    const auto& v = doc.at(std::string(key));
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        if (v.get<std::int64_t>() < 0) fail(key, "must be non-negative");
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    // Allow 1e6-style literals when they are whole numbers.
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 0.0 && x <= 1.8e19 && x == std::floor(x)) return static_cast<std::uint64_t>(x);
    }
    fail(key, "must be a non-negative integer");
}

inline std::string get_string(const json& doc, std::string_view key) {
    const auto& v = doc.at(std::string(key));
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
}

inline EstimatorKind to_kind(std::string_view key, const std::string& s) {
    if (auto k = parse_estimator_kind(s)) return *k;
    fail(key, "unknown estimator '" + s + "' (least_squares|yule_walker|backward_conditional)");
}

inline const std::set<std::string>& allowed_keys() {
    static const std::set<std::string> keys = {
        "command", "rho",     "sigma2",     "y_n",     "data",   "alpha",   "k",         "n",
        "n_grid",  "M",       "inner_M",    "estimator", "estimators", "methods", "correction",
        "target",  "direction", "oracle",   "seed",    "workers", "out"};
    return keys;
}

}  // namespace detail

/// Parses and validates a JSON run configuration. Unknown keys, missing
/// required keys and domain violations raise ConfigError naming the key.
[[nodiscard]] inline RunConfig parse_config(std::string_view text) {
    using detail::fail;
    using nlohmann::json;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!detail::allowed_keys().contains(key)) fail(key, "unknown key");
    }

    RunConfig cfg;
    if (!doc.contains("command")) fail("command", "required");
    {
        const std::string c = detail::get_string(doc, "command");
        bool found = false;
        for (auto cmd : {Command::Simulate, Command::Predict, Command::Correct, Command::Coverage,
                         Command::Scaling, Command::Efficiency}) {
            if (to_string(cmd) == c) {
                cfg.command = cmd;
                found = true;
            }
        }
        if (!found) fail("command", "unknown command '" + c + "'");
    }
    const Command cmd = cfg.command;

    if (doc.contains("rho")) {
        cfg.rho = detail::get_number(doc, "rho");
        if (!(std::abs(*cfg.rho) < 1.0)) fail("rho", "rho must satisfy |rho| < 1");
    }
    if (doc.contains("sigma2")) {
        cfg.sigma2 = detail::get_number(doc, "sigma2");
        if (!(*cfg.sigma2 > 0.0)) fail("sigma2", "sigma2 must be > 0");
    }
    if (doc.contains("y_n")) cfg.y_n = detail::get_number(doc, "y_n");
    if (doc.contains("data")) {
        const auto& d = doc.at("data");
        if (!d.is_array()) fail("data", "must be an array of numbers");
        for (const auto& v : d) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) fail("data", "must be an array of finite numbers");
            cfg.data.push_back(v.get<double>());
        }
        if (cfg.data.size() < kMinSeriesLength) fail("data", "needs at least 3 observations");
    }
    if (doc.contains("alpha")) {
        cfg.alpha = detail::get_number(doc, "alpha");
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("alpha", "alpha must lie in (0,1)");
    }
    if (doc.contains("k")) {
        const auto k = detail::get_count(doc, "k");
        if (k < 1 || k > 1000) fail("k", "horizon k must be in [1, 1000]");
        cfg.k = static_cast<int>(k);
    }
    if (doc.contains("n")) {
        cfg.n = detail::get_count(doc, "n");
        if (*cfg.n < kMinSeriesLength) fail("n", "n must be >= 3");
    }
    if (doc.contains("n_grid")) {
        const auto& g = doc.at("n_grid");
        if (!g.is_array()) fail("n_grid", "must be an array of lengths");
        for (const auto& v : g) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 3) fail("n_grid", "lengths must be integers >= 3");
            cfg.n_grid.push_back(v.get<std::size_t>());
        }
        if (cfg.n_grid.size() < 3) fail("n_grid", "needs at least 3 lengths");
        for (std::size_t i = 1; i < cfg.n_grid.size(); ++i) {
            if (cfg.n_grid[i] <= cfg.n_grid[i - 1]) fail("n_grid", "must be strictly increasing");
        }
        if (cfg.n_grid.back() < 8 * cfg.n_grid.front()) fail("n_grid", "must span at least a factor of 8");
    }
    if (doc.contains("M")) {
        cfg.replicates = detail::get_count(doc, "M");
        if (cfg.replicates < kMinReplicates) fail("M", "M must be >= 1000");
    }
    if (doc.contains("inner_M")) {
        cfg.inner_replicates = detail::get_count(doc, "inner_M");
        if (cfg.inner_replicates < kMinReplicates) fail("inner_M", "inner_M must be >= 1000");
    }
    if (doc.contains("estimator") && doc.contains("estimators")) {
        fail("estimators", "give either 'estimator' or 'estimators', not both");
    }
    if (doc.contains("estimator")) {
        cfg.estimators.push_back(detail::to_kind("estimator", detail::get_string(doc, "estimator")));
    }
    if (doc.contains("estimators")) {
        const auto& e = doc.at("estimators");
        if (!e.is_array() || e.empty()) fail("estimators", "must be a non-empty array of estimator names");
        for (const auto& v : e) {
            if (!v.is_string()) fail("estimators", "entries must be strings");
            cfg.estimators.push_back(detail::to_kind("estimators", v.get<std::string>()));
        }
    }
    if (doc.contains("methods")) {
        const auto& e = doc.at("methods");
        if (!e.is_array() || e.empty()) fail("methods", "must be a non-empty array of method names");
        for (const auto& v : e) {
            if (!v.is_string()) fail("methods", "entries must be strings");
            auto m = parse_coverage_method(v.get<std::string>());
            if (!m) fail("methods", "unknown method '" + v.get<std::string>() + "'");
            cfg.methods.push_back(*m);
        }
    }
    if (doc.contains("correction")) {
        const std::string s = detail::get_string(doc, "correction");
        if (s == "closed") {
            cfg.correction = CorrectionSource::ClosedForm;
        } else if (s == "simulated") {
            cfg.correction = CorrectionSource::Simulated;
        } else {
            fail("correction", "must be 'closed' or 'simulated'");
        }
    }
    if (doc.contains("target")) {
        const std::string s = detail::get_string(doc, "target");
        if (s == "limit") {
            cfg.target = TargetSelection::Limit;
        } else if (s == "interval") {
            cfg.target = TargetSelection::Interval;
        } else if (s == "both") {
            cfg.target = TargetSelection::Both;
        } else {
            fail("target", "must be 'limit', 'interval' or 'both'");
        }
    } else if (cmd == Command::Efficiency) {
        cfg.target = TargetSelection::Limit;
    }
    if (doc.contains("direction")) {
        const std::string s = detail::get_string(doc, "direction");
        if (s != "forward" && s != "backward") fail("direction", "must be 'forward' or 'backward'");
        cfg.backward = (s == "backward");
    }
    if (doc.contains("oracle")) {
        if (!doc.at("oracle").is_boolean()) fail("oracle", "must be a boolean");
        cfg.oracle = doc.at("oracle").get<bool>();
    }
    if (doc.contains("seed")) cfg.seed = detail::get_count(doc, "seed");
    if (doc.contains("workers")) {
        const auto w = detail::get_count(doc, "workers");
        if (w < 1 || w > 4096) fail("workers", "must be in [1, 4096]");
        cfg.workers = static_cast<unsigned>(w);
    }
    if (doc.contains("out")) cfg.out = detail::get_string(doc, "out");

    // Command-specific requirements.
    auto require = [&](std::string_view key, bool present) {
        if (!present) fail(key, "required for command '" + std::string(to_string(cmd)) + "'");
    };
    require("sigma2", cfg.sigma2.has_value());
    if (cmd == Command::Predict && !cfg.data.empty()) {
        if (cfg.rho || cfg.y_n) fail("data", "give either 'data' or 'rho'/'y_n', not both");
        if (!cfg.n) cfg.n = cfg.data.size();
    } else {
        require("rho", cfg.rho.has_value());
        if (!cfg.data.empty()) fail("data", "only used by command 'predict'");
    }
    if (cmd == Command::Simulate) {
        require("n", cfg.n.has_value());
        if (cfg.backward) require("y_n", cfg.y_n.has_value());
    } else if (cmd == Command::Scaling) {
        require("n_grid", !cfg.n_grid.empty());
        require("y_n", cfg.y_n.has_value());
    } else {
        require("n", cfg.n.has_value());
        if (cfg.data.empty()) require("y_n", cfg.y_n.has_value());
    }
    if (cmd != Command::Predict && cmd != Command::Simulate && cfg.k != 1) {
        fail("k", "command '" + std::string(to_string(cmd)) + "' supports k = 1 only");
    }
    if (cmd == Command::Predict && cfg.k != 1 && cfg.correction == CorrectionSource::ClosedForm) {
        fail("k", "closed-form correction needs k = 1; use \"correction\": \"simulated\"");
    }

    if (cfg.estimators.empty()) {
        if (cmd == Command::Efficiency) {
            cfg.estimators = {EstimatorKind::LeastSquares, EstimatorKind::BackwardConditional};
        } else {
            cfg.estimators = {EstimatorKind::LeastSquares};
        }
    }
    if ((cmd == Command::Predict) && cfg.estimators.size() != 1) {
        fail("estimators", "command 'predict' takes exactly one estimator");
    }
    if (cfg.methods.empty()) {
        if (cmd == Command::Scaling) {
            cfg.methods = {CoverageMethod::EstimativeLimit, CoverageMethod::ImprovedLimit};
        } else {
            cfg.methods.assign(kAllCoverageMethods.begin(), kAllCoverageMethods.end());
        }
    }

    // A closed-form limit correction needs the conditional bias.
    bool needs_bias = false;
    switch (cmd) {
        case Command::Predict:
        case Command::Correct:
            needs_bias = cfg.correction == CorrectionSource::ClosedForm && cfg.target != TargetSelection::Interval;
            break;
        case Command::Coverage:
        case Command::Scaling:
            for (auto m : cfg.methods) {
                if (m == CoverageMethod::ImprovedLimit && cfg.correction == CorrectionSource::ClosedForm) {
                    needs_bias = true;
                }
            }
            break;
        case Command::Efficiency:
            needs_bias = true;
            if (cfg.estimators.size() < 2 || cfg.estimators.size() > 3) {
                fail("estimators", "efficiency needs 2 or 3 estimators");
            }
            break;
        case Command::Simulate:
            break;
    }
    if (needs_bias) {
        for (auto kind : cfg.estimators) {
            if (!has_closed_form_bias(kind)) {
                fail("estimator", "no closed-form conditional bias for " + std::string(arpred::to_string(kind)) +
                                      "; use \"correction\": \"simulated\"");
            }
        }
    }
    return cfg;
}

/// Resolved configuration, recorded next to every report.
[[nodiscard]] inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = std::string(to_string(cfg.command));
    if (cfg.rho) j["rho"] = *cfg.rho;
    if (cfg.sigma2) j["sigma2"] = *cfg.sigma2;
    if (cfg.y_n) j["y_n"] = *cfg.y_n;
    if (!cfg.data.empty()) j["data"] = cfg.data;
    j["alpha"] = cfg.alpha;
    j["k"] = cfg.k;
    if (cfg.n) j["n"] = *cfg.n;
    if (!cfg.n_grid.empty()) j["n_grid"] = cfg.n_grid;
    j["M"] = cfg.replicates;
    j["inner_M"] = cfg.inner_replicates;
    auto& est = j["estimators"] = nlohmann::json::array();
    for (auto k : cfg.estimators) est.push_back(std::string(arpred::to_string(k)));
    auto& meth = j["methods"] = nlohmann::json::array();
    for (auto m : cfg.methods) meth.push_back(std::string(arpred::to_string(m)));
    j["correction"] = std::string(arpred::to_string(cfg.correction));
    j["target"] = cfg.target == TargetSelection::Both ? "both"
                  : cfg.target == TargetSelection::Limit ? "limit"
                                                         : "interval";
    j["direction"] = cfg.backward ? "backward" : "forward";
    j["oracle"] = cfg.oracle;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    if (!cfg.out.empty()) j["out"] = cfg.out;
    return j;
}

/// Shortest-round-trip-safe decimal form: 17 significant digits.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct RunResult {
    std::size_t rows = 0;
    std::vector<std::string> failures;
    [[nodiscard]] bool ok() const noexcept { return failures.empty(); }
};

namespace detail {

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(std::initializer_list<std::string_view> cols) { write_line(cols); }

    CsvWriter& operator<<(double x) { return field(format_double(x)); }
    CsvWriter& operator<<(std::uint64_t x) { return field(std::to_string(x)); }
    CsvWriter& operator<<(unsigned long long x) = delete;
    CsvWriter& operator<<(int x) { return field(std::to_string(x)); }
    CsvWriter& operator<<(std::string_view s) { return field(std::string(s)); }
    CsvWriter& operator<<(const char* s) { return field(s); }
    CsvWriter& blank() { return field(""); }

    void end_row() {
        os_ << '\n';
        first_ = true;
        ++rows_;
    }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }

private:
    CsvWriter& field(const std::string& s) {
        if (!first_) os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }
    void write_line(std::initializer_list<std::string_view> cols) {
        bool first = true;
        for (auto c : cols) {
            if (!first) os_ << ',';
            os_ << c;
            first = false;
        }
        os_ << '\n';
    }

    std::ostream& os_;
    bool first_ = true;
    std::size_t rows_ = 0;
};

template <class Fn>
void run_cell(RunResult& result, std::ostream& diag, const std::string& label, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        result.failures.push_back(label + ": " + e.what());
        diag << "cell failed [" << label << "]: " << e.what() << '\n';
    }
}

inline std::uint64_t as_u64(std::size_t v) { return static_cast<std::uint64_t>(v); }

inline void run_simulate(const RunConfig& cfg, CsvWriter& csv) {
    const Ar1Params params(*cfg.rho, *cfg.sigma2);
    const SeedSpec seed{cfg.seed, 0};
    const TimeSeries series =
        cfg.backward ? simulate_backward(params, *cfg.n, *cfg.y_n, seed) : simulate_forward(params, *cfg.n, seed);
    csv.header({"t", "value"});
    for (std::size_t t = 0; t < series.size(); ++t) {
        csv << as_u64(t + 1) << series[t];
        csv.end_row();
    }
}

inline Correction correction_for(const RunConfig& cfg, const Ar1Params& params, double y_n, EstimatorKind kind,
                                 CorrectionTarget target, int k) {
    if (cfg.correction == CorrectionSource::ClosedForm) {
        return target == CorrectionTarget::Limit ? closed_form_c_limit(params, y_n, cfg.alpha, *cfg.n, kind)
                                                 : closed_form_c_interval(params, y_n, cfg.alpha, *cfg.n, kind);
    }
    SimulationOptions opts;
    opts.horizon = k;
    opts.workers = cfg.workers;
    return simulated_c(params, y_n, cfg.alpha, *cfg.n, cfg.replicates, kind, target, cfg.seed, opts);
}

inline void run_predict(const RunConfig& cfg, CsvWriter& csv, RunResult& result, std::ostream& diag) {
    const EstimatorKind kind = cfg.estimators.front();
    double rho_hat;
    double y_n;
    if (!cfg.data.empty()) {
        rho_hat = estimate(kind, TimeSeries(cfg.data));
        y_n = cfg.data.back();
    } else {
        rho_hat = *cfg.rho;
        y_n = *cfg.y_n;
    }
    csv.header({"target", "estimator", "correction", "rho_hat", "sigma2", "y_n", "alpha", "k", "n",
                "estimative_lower", "estimative_upper", "improved_lower", "improved_upper", "c_over_n",
                "std_error", "seed"});
    for (auto target : cfg.targets()) {
        run_cell(result, diag, "predict/" + std::string(arpred::to_string(target)), [&] {
            const Ar1Params theta_hat(rho_hat, *cfg.sigma2);
            const Correction corr = correction_for(cfg, theta_hat, y_n, kind, target, cfg.k);
            double est_lo, est_hi, imp_lo, imp_hi;
            const double inf = std::numeric_limits<double>::infinity();
            if (target == CorrectionTarget::Limit) {
                est_lo = imp_lo = -inf;
                est_hi = estimative_upper_limit(theta_hat, y_n, cfg.k, cfg.alpha).value;
                imp_hi = improved_upper_limit(theta_hat, y_n, cfg.k, cfg.alpha, corr).value;
            } else {
                const auto est = equal_density_interval(conditional_predictive(theta_hat, y_n, cfg.k), cfg.alpha);
                const auto imp = improved_interval(theta_hat, y_n, cfg.k, cfg.alpha, corr);
                est_lo = est.lower;
                est_hi = est.upper;
                imp_lo = imp.lower;
                imp_hi = imp.upper;
            }
            csv << arpred::to_string(target) << arpred::to_string(kind) << arpred::to_string(corr.source) << rho_hat
                << *cfg.sigma2 << y_n << cfg.alpha << cfg.k << as_u64(*cfg.n) << est_lo << est_hi << imp_lo
                << imp_hi << corr.c_over_n << corr.std_error << cfg.seed;
            csv.end_row();
        });
    }
}

inline void run_correct(const RunConfig& cfg, CsvWriter& csv, RunResult& result, std::ostream& diag) {
    const Ar1Params params(*cfg.rho, *cfg.sigma2);
    const double y_n = *cfg.y_n;
    csv.header({"target", "estimator", "source", "rho", "sigma2", "y_n", "alpha", "n", "M", "c_over_n",
                "std_error", "shift", "seed"});
    const PredictiveDist dist = conditional_predictive(params, y_n, 1);
    for (auto kind : cfg.estimators) {
        for (auto target : cfg.targets()) {
            const std::string label = std::string(arpred::to_string(kind)) + "/" + std::string(arpred::to_string(target));
            run_cell(result, diag, label, [&] {
                const Correction corr = correction_for(cfg, params, y_n, kind, target, 1);
                double shift;
                if (target == CorrectionTarget::Limit) {
                    shift = d_from_c(corr, dist.pdf(dist.quantile(1.0 - cfg.alpha)));
                } else {
                    shift = delta_from_c(corr, dist.pdf(equal_density_interval(dist, cfg.alpha).upper));
                }
                const std::uint64_t m = corr.source == CorrectionSource::Simulated ? cfg.replicates : 0;
                csv << arpred::to_string(target) << arpred::to_string(kind) << arpred::to_string(corr.source) << *cfg.rho
                    << *cfg.sigma2 << y_n << cfg.alpha << as_u64(*cfg.n) << m << corr.c_over_n << corr.std_error
                    << shift << cfg.seed;
                csv.end_row();
            });
        }
    }
}

inline CoverageOptions coverage_options(const RunConfig& cfg) {
    CoverageOptions o;
    o.workers = cfg.workers;
    o.oracle = cfg.oracle;
    o.improved_source = cfg.correction;
    o.inner_replicates = cfg.inner_replicates;
    return o;
}

inline void run_coverage(const RunConfig& cfg, CsvWriter& csv, RunResult& result, std::ostream& diag) {
    const Ar1Params params(*cfg.rho, *cfg.sigma2);
    csv.header({"method", "kind", "rho", "sigma2", "y_n", "alpha", "n", "M", "coverage", "std_error", "seed"});
    for (auto method : cfg.methods) {
        for (auto kind : cfg.estimators) {
            const std::string label = std::string(arpred::to_string(method)) + "/" + std::string(arpred::to_string(kind));
            run_cell(result, diag, label, [&] {
                const CoverageReport r = conditional_coverage(method, kind, params, *cfg.y_n, cfg.alpha, *cfg.n,
                                                              cfg.replicates, cfg.seed, coverage_options(cfg));
                csv << arpred::to_string(method) << arpred::to_string(kind) << r.rho << r.sigma2 << r.y_n << r.alpha
                    << as_u64(r.n) << r.replicates << r.coverage << r.std_error << r.seed;
                csv.end_row();
            });
        }
    }
}

inline void run_scaling(const RunConfig& cfg, CsvWriter& csv, RunResult& result, std::ostream& diag) {
    const Ar1Params params(*cfg.rho, *cfg.sigma2);
    csv.header({"row", "method", "kind", "rho", "sigma2", "y_n", "alpha", "n", "M", "coverage", "error",
                "std_error", "noise_dominated", "slope", "slope_std_error", "seed"});
    for (auto method : cfg.methods) {
        for (auto kind : cfg.estimators) {
            const std::string label = std::string(arpred::to_string(method)) + "/" + std::string(arpred::to_string(kind));
            run_cell(result, diag, label, [&] {
                const ScalingReport r = scaling_study(method, kind, params, *cfg.y_n, cfg.alpha, cfg.n_grid,
                                                      cfg.replicates, cfg.seed, coverage_options(cfg));
                for (const auto& p : r.points) {
                    csv << "data" << arpred::to_string(method) << arpred::to_string(kind) << *cfg.rho << *cfg.sigma2
                        << *cfg.y_n << cfg.alpha << as_u64(p.n) << cfg.replicates << p.coverage << p.error
                        << p.std_error << (p.noise_dominated ? "true" : "false");
                    csv.blank().blank() << cfg.seed;
                    csv.end_row();
                }
                csv << "slope" << arpred::to_string(method) << arpred::to_string(kind) << *cfg.rho << *cfg.sigma2
                    << *cfg.y_n << cfg.alpha;
                csv.blank() << cfg.replicates;
                csv.blank().blank().blank().blank();
                if (r.fitted) {
                    csv << r.slope << r.slope_std_error;
                } else {
                    csv.blank().blank();
                }
                csv << cfg.seed;
                csv.end_row();
                if (!r.note.empty()) diag << label << ": " << r.note << '\n';
            });
        }
    }
}

inline void run_efficiency(const RunConfig& cfg, CsvWriter& csv, RunResult& result, std::ostream& diag) {
    const Ar1Params params(*cfg.rho, *cfg.sigma2);
    csv.header({"row", "target", "kind", "rho", "sigma2", "y_n", "alpha", "n", "M", "mean_estimative",
                "se_estimative", "mean_improved", "se_improved", "diff_estimative", "se_diff_estimative",
                "diff_improved", "se_diff_improved", "exact_value", "theory_improved", "seed"});
    for (auto target : cfg.targets()) {
        run_cell(result, diag, "efficiency/" + std::string(arpred::to_string(target)), [&] {
            const EfficiencyReport r = efficiency_study(params, *cfg.y_n, cfg.alpha, *cfg.n, cfg.replicates,
                                                        cfg.estimators, target, cfg.seed, cfg.workers);
            for (const auto& e : r.entries) {
                csv << "kind" << arpred::to_string(target) << arpred::to_string(e.kind) << r.rho << r.sigma2 << r.y_n
                    << r.alpha << as_u64(r.n) << r.replicates << e.mean_estimative << e.se_estimative
                    << e.mean_improved << e.se_improved << e.diff_estimative << e.se_diff_estimative
                    << e.diff_improved << e.se_diff_improved << r.exact_value << r.theory_improved << r.seed;
                csv.end_row();
            }
        });
    }
}

}  // namespace detail

/// Runs every cell of the configured command, writing CSV rows to `csv` and
/// failures to `diag`. Output depends only on the configuration (never on the
/// worker count).
inline RunResult run(const RunConfig& cfg, std::ostream& csv_out, std::ostream& diag) {
    RunResult result;
    detail::CsvWriter csv(csv_out);
    switch (cfg.command) {
        case Command::Simulate:
            detail::run_cell(result, diag, "simulate", [&] { detail::run_simulate(cfg, csv); });
            break;
        case Command::Predict: detail::run_predict(cfg, csv, result, diag); break;
        case Command::Correct: detail::run_correct(cfg, csv, result, diag); break;
        case Command::Coverage: detail::run_coverage(cfg, csv, result, diag); break;
        case Command::Scaling: detail::run_scaling(cfg, csv, result, diag); break;
        case Command::Efficiency: detail::run_efficiency(cfg, csv, result, diag); break;
    }
    result.rows = csv.rows();
    return result;
}

}  // namespace arpred::cli
