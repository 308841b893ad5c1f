#pragma once

#include "gpvol/garch.hpp"
#include "gpvol/gp.hpp"
#include "gpvol/inference.hpp"
#include "gpvol/metrics.hpp"
#include "gpvol/returns.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpvol {

enum class StrategyTag { GpAbs, GpSquared, GpAbsEnvelope, GpCombinedEnvelope, Garch, EGarch, GjrGarch };

std::string_view to_string(StrategyTag tag);
StrategyTag parse_strategy_tag(std::string_view name);
bool is_gp(StrategyTag tag);

struct Strategy {
    StrategyTag tag = StrategyTag::GpAbs;
    std::optional<KernelFamily> kernel = KernelFamily::Matern32;  // present iff GP tag
    bool hyper_update = false;
    ProxyKind target = ProxyKind::Abs;  // GARCH only: compare sqrt(sigma^2) to |r| or sigma^2 to r^2

    static Strategy gp(StrategyTag tag, KernelFamily family, bool hyper_update = false);
    static Strategy garch(StrategyTag tag, ProxyKind target = ProxyKind::Abs);

    void validate() const;
    /// Realized proxy the forecasts are scored against: Abs or Squared.
    ProxyKind proxy() const;
    /// e.g. "gp-abs/matern32", "gp-abs/matern32+update", "garch/abs".
    std::string label() const;
};

struct RollingConfig {
    std::size_t training = 100;
    std::size_t window = 100;
    std::size_t segment = 3140;
    double z = 1.96;
    std::optional<double> floor;  // default: computed from the training returns
    std::uint64_t seed = 20240601;
    SimplexConfig simplex;
    SimplexConfig garch_simplex{.max_iterations = 2000, .f_tolerance = 1e-9, .restarts = 4};
    double prior_stddev = 1.5;
    std::optional<HyperPrior> prior;  // overrides the data-scaled default
    bool garch_refit = false;         // warm refit on the trailing window every step

    void validate() const;
};

struct Interval {
    double point = 0.0;
    double low = 0.0;
    double up = 0.0;
};

/// exp(m), exp(m - z sd), exp(m + z sd).
Interval back_transform(const Posterior& post, double z);

struct Combined {
    double value = 0.0;
    bool fallback = false;  // one side absent; the other side returned as is
};

/// Mean of the two sides. Throws InvalidInput when both are absent or a side is non-positive.
Combined combine_envelopes(std::optional<double> pos, std::optional<double> neg);

/// Rolling log-space GP: fixed-size window, Cholesky up/downdates, optional warm
/// hyperparameter updates. In envelope mode the window holds the maxima envelope of
/// the observed source series, maintained causally.
class RollingGp {
public:
    struct Options {
        KernelFamily family = KernelFamily::Matern32;
        std::size_t window = 100;
        bool hyper_update = false;
        bool envelope = false;
        SimplexConfig simplex;
        double prior_stddev = 1.5;
        std::optional<HyperPrior> prior;
    };

    explicit RollingGp(Options opts);

    /// MAP estimate on the (envelope of the) last `window` training points and factorization.
    void train(std::span<const Observation> source);
    /// Predictive distribution at x. Constant windows return prior variance, flagged degenerate.
    Posterior predict(double x) const;
    /// Absorbs the next source point. Returns false when a hyperparameter update failed
    /// and the previous hyperparameters were kept.
    bool observe(const Observation& obs);

    const CholeskyState& state() const { return state_; }
    const MapResult& hyper() const { return hyper_; }
    const HyperPrior& prior() const { return prior_; }
    std::size_t failures() const { return failures_; }

private:
    void slide();

    Options opts_;
    HyperPrior prior_;
    MapResult hyper_;
    CholeskyState state_;
    // Last two source points, for deciding whether the trailing endpoint stays.
    std::optional<Observation> before_last_;
    std::optional<Observation> last_;
    std::size_t failures_ = 0;
};

/// Posterior of an envelope GP at the next raw time index.
Posterior envelope_forecast_step(const RollingGp& envelope_gp, double x_next);

struct ForecastRecord {
    TimeIndex time = 0;
    double forecast = 0.0;  // natural space, same scale as the realized proxy
    double low = 0.0;
    double up = 0.0;
    double realized = 0.0;  // floored proxy at this step
    double ret = 0.0;       // raw return at this step
    double log_mean = 0.0;  // log of the forecast for GP strategies
    double log_var = 0.0;
    double pos = 0.0;       // side forecasts of the combined envelope, 0 when unused
    double neg = 0.0;
    bool flagged = false;   // fallback, degenerate window or failed update
};

struct BacktestReport {
    Strategy strategy;
    double floor = 0.0;
    std::vector<ForecastRecord> records;
    MetricSuite metrics;
    MetricSuite no_change;  // h_t = realized proxy at t-1
    ResidualStats residuals;
    std::size_t flagged = 0;
    std::size_t inference_failures = 0;
    std::optional<MapResult> final_hyper;
    std::optional<GarchParams> garch_params;
};

/// One-step-ahead rolling backtest over a single segment. The first cfg.training returns
/// are the training set; every later return is forecast from strictly earlier data.
/// GARCH fit failure aborts with FitFailed.
BacktestReport run_backtest(const PriceSeries& prices, const Strategy& strategy, const RollingConfig& cfg);

/// Same, starting from returns.
BacktestReport run_backtest(const ReturnSeries& returns, const Strategy& strategy, const RollingConfig& cfg);

/// Calibration divisor used for residuals: sqrt(2/pi) for |r|-scale GP forecasts, 1 otherwise.
double residual_calibration(const Strategy& strategy);

} // namespace gpvol
