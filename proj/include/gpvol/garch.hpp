#pragma once

#include "gpvol/error.hpp"
#include "gpvol/nelder_mead.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace gpvol {

enum class GarchVariant { Vanilla, EGarch, Gjr };

std::string_view to_string(GarchVariant v);

struct GarchSpec {
    GarchVariant variant = GarchVariant::Vanilla;
    int p = 1;  // lagged variances
    int q = 1;  // lagged squared returns (or g(r) terms for EGARCH)
    int r = 1;  // leverage terms, GJR only

    void validate() const;
    /// Number of past returns the recursion reads.
    int return_lags() const;
};

struct GarchParams {
    double alpha0 = 0.0;
    std::vector<double> alpha;  // q entries
    std::vector<double> beta;   // p entries
    std::vector<double> gamma;  // r entries, GJR only
    double theta = 0.0;         // EGARCH sign coefficient
    double lambda = 0.0;        // EGARCH magnitude coefficient

    /// Vanilla/GJR: positivity plus sum(alpha) + sum(beta) + sum(gamma)/2 < 1.
    /// EGARCH: |sum(beta)| < 1.
    void validate(const GarchSpec& spec) const;
    double persistence(const GarchSpec& spec) const;
};

/// Recursion buffers, newest first: variances holds sigma^2_{t-1..t-p}; returns holds
/// r_{t-2}, r_{t-3}, ... (the newest return r_{t-1} is passed to variance_step).
struct GarchState {
    std::vector<double> variances;
    std::vector<double> returns;

    /// Pre-sample initialization: every past variance and squared return set to sample_var.
    static GarchState presample(const GarchSpec& spec, double sample_var);
};

/// sigma_t^2 given r_{t-1} = r_prev. Throws InvalidInput on a non-positive vanilla/GJR result.
double variance_step(const GarchSpec& spec, const GarchParams& params, const GarchState& state, double r_prev);

/// Shifts r_prev and its freshly computed variance into the buffers.
void push(GarchState& state, double r_prev, double variance);

/// Same recursion as variance_step, named for its role at the end of the data.
double forecast_one_step(const GarchSpec& spec, const GarchParams& params, const GarchState& state,
                         double latest_return);

/// Conditional variances sigma_t^2 for t = 0..n-1 plus the buffers after the last return.
struct GarchFilter {
    std::vector<double> variances;
    GarchState state;
    double last_return = 0.0;
};

GarchFilter filter(const GarchSpec& spec, const GarchParams& params, std::span<const double> returns,
                   double presample_var);

/// Gaussian log-likelihood with pre-sample variance = sample variance of the returns.
double log_likelihood(const GarchSpec& spec, const GarchParams& params, std::span<const double> returns);

double sample_variance(std::span<const double> xs);

struct GarchFit {
    GarchParams params;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

class FitFailed : public Error {
public:
    FitFailed(const std::string& what, GarchParams best) : Error(what), best_(std::move(best)) {}
    const GarchParams& best_so_far() const noexcept { return best_; }

private:
    GarchParams best_;
};

/// Maximum likelihood over an unconstrained transform of the parameters.
/// Needs at least 50 returns; cfg.restarts descents, the first from a fixed default start.
GarchFit fit(const GarchSpec& spec, std::span<const double> returns, const SimplexConfig& cfg);

/// Warm-started refit: one descent from `start`.
GarchFit refit(const GarchSpec& spec, std::span<const double> returns, const GarchParams& start,
               const SimplexConfig& cfg);

/// Unconditional variance of a stationary vanilla/GJR process (symmetric returns assumed for GJR).
double unconditional_variance(const GarchSpec& spec, const GarchParams& params);

} // namespace gpvol
