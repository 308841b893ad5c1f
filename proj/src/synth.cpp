#include "gpvol/synth.hpp"

#include "gpvol/error.hpp"
#include "gpvol/inference.hpp"
#include "gpvol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>

namespace gpvol {

std::vector<double> sample_gp(const KernelSpec& spec, std::span<const double> times, std::uint64_t seed,
                              bool with_noise) {
    spec.validate();
    Eigen::VectorXd noiseless = spec.log_params;
    noiseless[2] = -std::numeric_limits<double>::infinity();
    std::vector<Observation> obs;
    obs.reserve(times.size());
    for (double t : times) obs.push_back({t, 0.0});
    // The quasi-periodic noise term lives inside the kernel, so it is removed the same way.
    const CholeskyState state = CholeskyState::build(KernelSpec::from_log(spec.family, noiseless), obs);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    const Eigen::VectorXd f = state.factor().triangularView<Eigen::Lower>() * z;

    std::vector<double> out(f.data(), f.data() + n);
    if (with_noise) {
        const double sn = spec.noise_std();
        for (double& v : out) v += sn * normal(rng);
    }
    return out;
}

ReturnSeries simulate_garch(const GarchSpec& spec, const GarchParams& params, std::size_t n, std::uint64_t seed) {
    params.validate(spec);
    constexpr std::size_t burn_in = 500;
    double start_var = 0.0;
    if (spec.variant == GarchVariant::EGarch)
        start_var = std::exp(params.alpha0 / (1.0 - params.persistence(spec)));
    else
        start_var = unconditional_variance(spec, params);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    GarchState state = GarchState::presample(spec, start_var);
    double r_prev = std::sqrt(start_var);
    ReturnSeries out;
    out.values.reserve(n);
    out.timestamps.reserve(n);
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        const double v = variance_step(spec, params, state, r_prev);
        const double r = std::sqrt(v) * normal(rng);
        push(state, r_prev, v);
        r_prev = r;
        if (t >= burn_in) {
            out.timestamps.push_back(static_cast<TimeIndex>(t - burn_in + 1));
            out.values.push_back(r);
        }
    }
    return out;
}

double SinVol::sigma(double t) const { return base + amplitude * std::sin(2.0 * std::numbers::pi * t / period); }

void SinVol::validate() const {
    if (!(amplitude >= 0.0) || !(base > amplitude) || !(period > 0.0))
        throw InvalidInput("sinvol: need base > amplitude >= 0 and period > 0");
}

ReturnSeries simulate_sinvol(const SinVol& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ReturnSeries out;
    for (std::size_t i = 1; i <= n; ++i) {
        out.timestamps.push_back(static_cast<TimeIndex>(i));
        out.values.push_back(spec.sigma(static_cast<double>(i)) * normal(rng));
    }
    return out;
}

ReturnSeries generate(const SynthSpec& spec) {
    if (spec.n < 2) throw InvalidInput("synth: need n >= 2");
    if (const auto* s = std::get_if<SinVol>(&spec.generator)) return simulate_sinvol(*s, spec.n, spec.seed);
    if (const auto* g = std::get_if<GarchSim>(&spec.generator))
        return simulate_garch(g->spec, g->params, spec.n, spec.seed);

    const auto& d = std::get<GpDraw>(spec.generator);
    std::vector<double> times(spec.n);
    std::iota(times.begin(), times.end(), 1.0);
    const std::vector<double> y = sample_gp(d.kernel, times, spec.seed, true);
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::bernoulli_distribution coin;
    ReturnSeries out;
    for (std::size_t i = 0; i < spec.n; ++i) {
        out.timestamps.push_back(static_cast<TimeIndex>(i + 1));
        const double mag = std::exp(d.log_level + y[i]);
        out.values.push_back(coin(rng) ? mag : -mag);
    }
    return out;
}

PriceSeries prices_from_returns(const ReturnSeries& r, double start) {
    if (r.values.empty()) throw InvalidInput("prices_from_returns: empty returns");
    if (!(start > 0.0)) throw InvalidInput("prices_from_returns: start price must be positive");
    PriceSeries p;
    p.timestamps.push_back(r.timestamps.front() - 1);
    p.prices.push_back(start);
    double log_p = std::log(start);
    for (std::size_t i = 0; i < r.size(); ++i) {
        log_p += r.values[i];
        p.timestamps.push_back(r.timestamps[i]);
        p.prices.push_back(std::exp(log_p));
    }
    return p;
}

void RecoveryConfig::validate() const {
    truth.validate();
    simplex.validate();
    warm.validate();
    if (n_sets < 1 || n_points < 8) throw InvalidInput("recovery: need n_sets >= 1 and n_points >= 8");
    if (fractions.empty()) throw InvalidInput("recovery: fractions must be non-empty");
    for (double f : fractions)
        if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("recovery: fractions must lie in (0, 1]");
}

namespace {

double rmse(std::span<const double> a, std::span<const double> b) {
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(ss / static_cast<double>(a.size()));
}

} // namespace

RecoveryReport recovery_experiment(const RecoveryConfig& cfg) {
    cfg.validate();
    RecoveryReport rep;
    rep.truth = cfg.truth;
    rep.fractions = cfg.fractions;
    std::sort(rep.fractions.begin(), rep.fractions.end());

    const auto n = static_cast<std::size_t>(cfg.n_points);
    std::vector<double> times(n);
    std::iota(times.begin(), times.end(), 0.0);
    Eigen::VectorXd noiseless = cfg.truth.log_params;
    noiseless[2] = -std::numeric_limits<double>::infinity();

    std::mt19937_64 seeder(cfg.seed);
    for (int s = 0; s < cfg.n_sets; ++s) {
        const std::uint64_t set_seed = seeder();
        // Shared latent draw, then observation noise on top.
        const std::vector<double> f = sample_gp(cfg.truth, times, set_seed, false);
        std::mt19937_64 rng(set_seed + 1);
        std::normal_distribution<double> normal;
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = f[i] + cfg.truth.noise_std() * normal(rng);

        std::vector<RecoveryCell> row;
        std::optional<MapResult> previous;
        for (double frac : rep.fractions) {
            RecoveryCell cell;
            const std::size_t m = std::clamp<std::size_t>(
                static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))), 8, n);
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::vector<std::size_t> chosen;
            std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), m, rng);
            std::vector<Observation> window;
            window.reserve(m);
            for (std::size_t i : chosen) window.push_back({times[i], y[i]});

            try {
                const HyperPrior prior = HyperPrior::defaults_for(cfg.truth.family, window);
                SimplexConfig sc = cfg.simplex;
                sc.seed = set_seed;
                const MapResult est = previous && m > cfg.cold_limit
                                          ? warm_update(*previous, window, prior, cfg.warm)
                                          : map_estimate(window, cfg.truth.family, prior, sc);
                previous = est;
                const CholeskyState state = CholeskyState::build(est.spec, window);
                const std::vector<double> pred = posterior_means(state, times);
                cell.recovered = est.spec;
                cell.rmse_data = rmse(pred, y);
                cell.rmse_function = rmse(pred, f);
            } catch (const Error& e) {
                cell.failed = true;
                cell.error = e.what();
                ++rep.failures;
            }
            row.push_back(std::move(cell));
        }
        rep.sets.push_back(std::move(row));
    }

    const int dim = parameter_count(cfg.truth.family);
    for (std::size_t j = 0; j < rep.fractions.size(); ++j) {
        std::vector<double> data, func;
        std::vector<std::vector<double>> params(static_cast<std::size_t>(dim));
        for (const auto& row : rep.sets) {
            if (row[j].failed) continue;
            data.push_back(row[j].rmse_data);
            func.push_back(row[j].rmse_function);
            for (int k = 0; k < dim; ++k) params[k].push_back(row[j].recovered.log_params[k]);
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.median_rmse_data.push_back(data.empty() ? nan : median(data));
        rep.median_rmse_function.push_back(func.empty() ? nan : median(func));
        Eigen::VectorXd med = Eigen::VectorXd::Constant(dim, nan);
        for (int k = 0; k < dim; ++k)
            if (!params[k].empty()) med[k] = median(params[k]);
        rep.median_log_params.push_back(med);
    }
    return rep;
}

} // namespace gpvol
