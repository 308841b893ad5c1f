#pragma once

#include "gpvol/garch.hpp"
#include "gpvol/gp.hpp"
#include "gpvol/nelder_mead.hpp"
#include "gpvol/returns.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gpvol {

/// One zero-mean draw at `times`; i.i.d. N(0, sigma_n^2) added when with_noise.
std::vector<double> sample_gp(const KernelSpec& spec, std::span<const double> times, std::uint64_t seed,
                              bool with_noise);

/// n returns after 500 discarded burn-in steps. Non-stationary params throw InvalidInput.
ReturnSeries simulate_garch(const GarchSpec& spec, const GarchParams& params, std::size_t n, std::uint64_t seed);

/// r_t ~ N(0, (base + amplitude sin(2 pi t / period))^2), t = 1..n.
struct SinVol {
    double amplitude = 0.5e-3;
    double period = 500.0;
    double base = 1e-3;

    double sigma(double t) const;
    void validate() const;
};

ReturnSeries simulate_sinvol(const SinVol& spec, std::size_t n, std::uint64_t seed);

/// log|r_t| is a noisy GP draw shifted by log_level; signs are fair coin flips.
struct GpDraw {
    KernelSpec kernel = KernelSpec::make(KernelFamily::Matern32, 0.5, 50.0, 0.8);
    double log_level = -6.907755278982137;  // log 1e-3
};

struct GarchSim {
    GarchSpec spec;
    GarchParams params;
};

struct SynthSpec {
    std::variant<GpDraw, GarchSim, SinVol> generator = SinVol{};
    std::size_t n = 3140;
    std::uint64_t seed = 1;
};

ReturnSeries generate(const SynthSpec& spec);

/// Prices p_0 = start, p_t = p_{t-1} exp(r_t); p_0 is stamped one step before the first return.
PriceSeries prices_from_returns(const ReturnSeries& r, double start = 100.0);

struct RecoveryConfig {
    KernelSpec truth = KernelSpec::make(KernelFamily::SquaredExponential, 1.0, 20.0, 0.1);
    int n_sets = 100;
    int n_points = 1000;
    std::vector<double> fractions{0.05, 0.2, 0.5, 0.95, 1.0};
    SimplexConfig simplex{.max_iterations = 400, .f_tolerance = 1e-4, .restarts = 8};
    /// Subsamples larger than this start from the previous fraction's estimate instead of a multi-start.
    std::size_t cold_limit = 300;
    SimplexConfig warm{.max_iterations = 100, .f_tolerance = 1e-2, .restarts = 1, .warm_step = 0.1};
    std::uint64_t seed = 7;

    void validate() const;
};

struct RecoveryCell {
    KernelSpec recovered;
    double rmse_data = 0.0;      // posterior mean vs the observed (noisy) values at every point
    double rmse_function = 0.0;  // posterior mean vs the noise-free draw
    bool failed = false;
    std::string error;
};

struct RecoveryReport {
    KernelSpec truth;
    std::vector<double> fractions;              // ascending
    std::vector<std::vector<RecoveryCell>> sets;  // [set][fraction]
    std::vector<double> median_rmse_data;
    std::vector<double> median_rmse_function;
    std::vector<Eigen::VectorXd> median_log_params;
    std::size_t failures = 0;
};

RecoveryReport recovery_experiment(const RecoveryConfig& cfg);

} // namespace gpvol
