#include "gpvol/inference.hpp"

#include "gpvol/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace gpvol {

namespace {

constexpr std::size_t kMinWindow = 8;

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
    double span = 0.0;
};

WindowStats stats_of(std::span<const Observation> window) {
    WindowStats s;
    if (window.empty()) return s;
    for (const auto& o : window) s.mean += o.y;
    s.mean /= static_cast<double>(window.size());
    double ss = 0.0;
    for (const auto& o : window) ss += (o.y - s.mean) * (o.y - s.mean);
    s.stddev = window.size() > 1 ? std::sqrt(ss / static_cast<double>(window.size() - 1)) : 0.0;
    s.span = window.back().t - window.front().t;
    return s;
}

} // namespace

void HyperPrior::validate(KernelFamily family) const {
    const int dim = parameter_count(family);
    if (mean.size() != dim || stddev.size() != dim)
        throw InvalidInput("hyper prior: dimension does not match the kernel family");
    for (int i = 0; i < dim; ++i)
        if (!(stddev[i] > 0.0) || !std::isfinite(stddev[i]) || !std::isfinite(mean[i]))
            throw InvalidInput("hyper prior: standard deviations must be positive and means finite");
}

double HyperPrior::penalty(const Eigen::VectorXd& log_params) const {
    return 0.5 * ((log_params - mean).array() / stddev.array()).square().sum();
}

HyperPrior HyperPrior::defaults_for(KernelFamily family, std::span<const Observation> window, double stddev) {
    const WindowStats st = stats_of(window);
    const double sy = std::max(st.stddev, 1e-6);
    const double span = std::max(st.span, 1.0);
    HyperPrior p;
    const int dim = parameter_count(family);
    p.mean.resize(dim);
    p.stddev = Eigen::VectorXd::Constant(dim, stddev);
    p.mean[0] = std::log(sy);
    p.mean[1] = std::log(span / 10.0);
    p.mean[2] = std::log(0.1 * sy);
    if (family == KernelFamily::QuasiPeriodic) {
        p.mean[3] = std::log(span / 4.0);
        p.mean[4] = 0.0;
    }
    return p;
}

bool is_constant_window(std::span<const Observation> window) {
    if (window.size() < 2) return true;
    const WindowStats st = stats_of(window);
    return st.stddev <= 1e-12 * std::max(1.0, std::abs(st.mean));
}

double neg_log_posterior(const KernelSpec& spec, std::span<const Observation> window, const HyperPrior& prior) {
    if (prior.mean.size() != spec.log_params.size())
        throw InvalidInput("neg_log_posterior: prior dimension does not match kernel");
    if (!spec.log_params.allFinite()) return std::numeric_limits<double>::infinity();
    try {
        const CholeskyState state = CholeskyState::build(spec, window);
        return neg_log_marginal(state) + prior.penalty(spec.log_params);
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
    }
}

namespace {

// The output scale is profiled out exactly. The simplex sees
// z = [log l, log(sigma_n / sigma_h), (log T, log w)], and for each z the optimal
// s = log sigma_h solves a one-dimensional convex problem:
//   f(s) = q e^{-2s} / 2 + n s + (s - m0)^2 / (2 s0^2) + (s + log rho - m2)^2 / (2 s2^2) + const,
// where q = r' R^-1 r and R is the covariance at sigma_h = 1.
struct Profile {
    KernelFamily family;
    std::span<const Observation> window;
    const HyperPrior& prior;

    Eigen::VectorXd reduce(const Eigen::VectorXd& full) const {
        Eigen::VectorXd z(full.size() - 1);
        z[0] = full[1];
        z[1] = std::max(full[2] - full[0], -30.0);
        for (Eigen::Index k = 3; k < full.size(); ++k) z[k - 1] = full[k];
        return z;
    }

    Eigen::VectorXd expand(const Eigen::VectorXd& z, double s) const {
        Eigen::VectorXd full(z.size() + 1);
        full[0] = s;
        full[1] = z[0];
        full[2] = s + z[1];
        for (Eigen::Index k = 2; k < z.size(); ++k) full[k + 1] = z[k];
        return full;
    }

    // Profiled negative log posterior; writes the full log-parameters to *full_out.
    double operator()(const Eigen::VectorXd& z, Eigen::VectorXd* full_out = nullptr) const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        if (!z.allFinite()) return inf;
        double q = 0.0, half_logdet = 0.0;
        const auto n = static_cast<double>(window.size());
        try {
            const CholeskyState unit = CholeskyState::build(KernelSpec{family, expand(z, 0.0)}, window);
            const double mu = unit.window_mean();
            Eigen::VectorXd resid(static_cast<Eigen::Index>(window.size()));
            for (std::size_t i = 0; i < window.size(); ++i) resid[static_cast<Eigen::Index>(i)] = window[i].y - mu;
            q = unit.factor().triangularView<Eigen::Lower>().solve(resid).squaredNorm();
            half_logdet = unit.factor().diagonal().array().log().sum();
        } catch (const NumericalError&) {
            return inf;
        }
        const double m0 = prior.mean[0], w0 = 1.0 / (prior.stddev[0] * prior.stddev[0]);
        const double m2 = prior.mean[2] - z[1], w2 = 1.0 / (prior.stddev[2] * prior.stddev[2]);
        const auto objective = [&](double s) {
            return 0.5 * q * std::exp(-2.0 * s) + n * s + 0.5 * w0 * (s - m0) * (s - m0) +
                   0.5 * w2 * (s - m2) * (s - m2);
        };
        // Newton from the unpenalized optimum; f is strictly convex.
        double s = q > 0.0 ? 0.5 * std::log(q / n) : (w0 * m0 + w2 * m2) / (w0 + w2);
        for (int it = 0; it < 100; ++it) {
            const double e = q * std::exp(-2.0 * s);
            const double g = -e + n + w0 * (s - m0) + w2 * (s - m2);
            const double h = 2.0 * e + w0 + w2;
            double step = g / h;
            // Guard the exponential branch against overshooting to the left.
            step = std::clamp(step, -5.0, 5.0);
            s -= step;
            if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(s))) break;
        }
        const Eigen::VectorXd full = expand(z, s);
        if (full_out) *full_out = full;
        double rest = 0.0;
        for (Eigen::Index k = 1; k < full.size(); ++k) {
            if (k == 2) continue;
            const double d = (full[k] - prior.mean[k]) / prior.stddev[k];
            rest += 0.5 * d * d;
        }
        // q e^{-2s}/2 + n s + sum log L_ii(R) + n/2 log 2 pi + penalties
        return objective(s) + half_logdet + 0.5 * n * std::log(2.0 * std::numbers::pi) + rest;
    }
};

} // namespace

MapResult map_estimate(std::span<const Observation> window, KernelFamily family, const HyperPrior& prior,
                       const SimplexConfig& cfg) {
    if (window.size() < kMinWindow)
        throw InvalidInput("map_estimate: window must hold at least 8 observations");
    prior.validate(family);
    cfg.validate();

    if (is_constant_window(window)) {
        MapResult r;
        r.spec = KernelSpec::from_log(family, prior.mean);
        r.nlp = neg_log_posterior(r.spec, window, prior);
        r.degenerate = true;
        return r;
    }

    const Profile profile{family, window, prior};
    const Objective objective = [&](const Eigen::VectorXd& z) { return profile(z); };

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto dim = prior.mean.size();

    MapResult best;
    best.nlp = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        Eigen::VectorXd start(dim);
        for (Eigen::Index k = 0; k < dim; ++k) start[k] = prior.mean[k] + 2.0 * prior.stddev[k] * unit(rng);
        const SimplexResult res = nelder_mead(objective, profile.reduce(start), cfg.initial_step, cfg);
        if (std::isfinite(res.value) && (!found || res.value < best.nlp)) {
            found = true;
            Eigen::VectorXd full;
            profile(res.x, &full);
            best.spec = KernelSpec::from_log(family, full);
            best.nlp = res.value;
            best.iterations = res.iterations;
            best.restart_index = r;
        }
    }
    if (!found) {
        std::ostringstream msg;
        msg << "map_estimate: all " << cfg.restarts << " restarts rejected (n=" << window.size()
            << ", family=" << to_string(family) << ")";
        throw EstimationFailed(msg.str());
    }
    return best;
}

MapResult warm_update(const MapResult& prev, std::span<const Observation> window, const HyperPrior& prior,
                      const SimplexConfig& cfg) {
    if (window.size() < kMinWindow)
        throw InvalidInput("warm_update: window must hold at least 8 observations");
    const KernelFamily family = prev.spec.family;
    prior.validate(family);
    cfg.validate();

    MapResult kept = prev;
    kept.nlp = neg_log_posterior(prev.spec, window, prior);
    kept.iterations = 0;
    kept.degenerate = false;
    if (is_constant_window(window)) {
        kept.degenerate = true;
        return kept;
    }

    const Profile profile{family, window, prior};
    const Objective objective = [&](const Eigen::VectorXd& z) { return profile(z); };
    const SimplexResult res = nelder_mead(objective, profile.reduce(prev.spec.log_params), cfg.warm_step, cfg);
    if (std::isfinite(res.value) && res.value < kept.nlp) {
        MapResult out;
        Eigen::VectorXd full;
        profile(res.x, &full);
        out.spec = KernelSpec::from_log(family, full);
        out.nlp = res.value;
        out.iterations = res.iterations;
        out.restart_index = prev.restart_index;
        return out;
    }
    if (!std::isfinite(kept.nlp))
        throw EstimationFailed("warm_update: previous hyperparameters and descent both rejected");
    return kept;
}

} // namespace gpvol
