#include "gpvol/garch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace gpvol {

std::string_view to_string(GarchVariant v) {
    switch (v) {
    case GarchVariant::Vanilla: return "garch";
    case GarchVariant::EGarch: return "egarch";
    case GarchVariant::Gjr: return "gjr";
    }
    return "unknown";
}

void GarchSpec::validate() const {
    if (p < 0 || q < 1) throw InvalidInput("garch spec: need p >= 0 and q >= 1");
    if (variant == GarchVariant::Gjr && (r < 1 || r > q)) throw InvalidInput("garch spec: GJR needs 1 <= r <= q");
}

int GarchSpec::return_lags() const { return variant == GarchVariant::Gjr ? std::max(q, r) : q; }

double GarchParams::persistence(const GarchSpec& spec) const {
    double s = 0.0;
    for (double b : beta) s += b;
    if (spec.variant == GarchVariant::EGarch) return s;
    for (double a : alpha) s += a;
    for (double g : gamma) s += 0.5 * g;
    return s;
}

void GarchParams::validate(const GarchSpec& spec) const {
    spec.validate();
    if (static_cast<int>(alpha.size()) != spec.q || static_cast<int>(beta.size()) != spec.p)
        throw InvalidInput("garch params: coefficient counts do not match (p, q)");
    if (spec.variant == GarchVariant::Gjr && static_cast<int>(gamma.size()) != spec.r)
        throw InvalidInput("garch params: GJR needs r leverage coefficients");
    if (spec.variant == GarchVariant::EGarch) {
        if (!(std::abs(persistence(spec)) < 1.0)) throw InvalidInput("garch params: EGARCH needs |sum beta| < 1");
        return;
    }
    if (!(alpha0 > 0.0)) throw InvalidInput("garch params: alpha0 must be positive");
    auto nonneg = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    };
    if (!nonneg(alpha) || !nonneg(beta) || !nonneg(gamma))
        throw InvalidInput("garch params: coefficients must be non-negative");
    if (!(persistence(spec) < 1.0)) throw InvalidInput("garch params: not covariance stationary");
}

GarchState GarchState::presample(const GarchSpec& spec, double sample_var) {
    GarchState s;
    s.variances.assign(static_cast<std::size_t>(std::max(spec.p, 1)), sample_var);
    s.returns.assign(static_cast<std::size_t>(std::max(spec.return_lags() - 1, 0)), std::sqrt(sample_var));
    return s;
}

namespace {

// r_{t-j} for j >= 1, with r_{t-1} = r_prev.
inline double lagged_return(const GarchState& s, double r_prev, int j) {
    return j == 1 ? r_prev : s.returns[static_cast<std::size_t>(j - 2)];
}

} // namespace

double variance_step(const GarchSpec& spec, const GarchParams& params, const GarchState& state, double r_prev) {
    if (spec.variant == GarchVariant::EGarch) {
        double lv = params.alpha0;
        for (int j = 1; j <= spec.q; ++j) {
            const double x = lagged_return(state, r_prev, j);
            lv += params.alpha[j - 1] * (params.theta * x + params.lambda * std::abs(x));
        }
        for (int i = 1; i <= spec.p; ++i) lv += params.beta[i - 1] * std::log(state.variances[i - 1]);
        return std::exp(lv);
    }
    double v = params.alpha0;
    for (int j = 1; j <= spec.q; ++j) {
        const double x = lagged_return(state, r_prev, j);
        v += params.alpha[j - 1] * x * x;
    }
    for (int i = 1; i <= spec.p; ++i) v += params.beta[i - 1] * state.variances[i - 1];
    if (spec.variant == GarchVariant::Gjr) {
        for (int k = 1; k <= spec.r; ++k) {
            const double x = lagged_return(state, r_prev, k);
            if (x < 0.0) v += params.gamma[k - 1] * x * x;
        }
    }
    if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidInput("garch: non-positive conditional variance (parameter constraints violated)");
    return v;
}

void push(GarchState& state, double r_prev, double variance) {
    if (!state.variances.empty()) {
        std::rotate(state.variances.rbegin(), state.variances.rbegin() + 1, state.variances.rend());
        state.variances.front() = variance;
    }
    if (!state.returns.empty()) {
        std::rotate(state.returns.rbegin(), state.returns.rbegin() + 1, state.returns.rend());
        state.returns.front() = r_prev;
    }
}

double forecast_one_step(const GarchSpec& spec, const GarchParams& params, const GarchState& state,
                         double latest_return) {
    return variance_step(spec, params, state, latest_return);
}

GarchFilter filter(const GarchSpec& spec, const GarchParams& params, std::span<const double> returns,
                   double presample_var) {
    GarchFilter out;
    out.state = GarchState::presample(spec, presample_var);
    out.variances.reserve(returns.size());
    double r_prev = std::sqrt(presample_var);
    for (double r : returns) {
        const double v = variance_step(spec, params, out.state, r_prev);
        out.variances.push_back(v);
        push(out.state, r_prev, v);
        r_prev = r;
    }
    out.last_return = r_prev;
    return out;
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double log_likelihood(const GarchSpec& spec, const GarchParams& params, std::span<const double> returns) {
    const GarchFilter f = filter(spec, params, returns, sample_variance(returns));
    constexpr double log2pi = 1.8378770664093453;
    double ll = 0.0;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double v = f.variances[t];
        ll -= 0.5 * (log2pi + std::log(v) + returns[t] * returns[t] / v);
    }
    return ll;
}

double unconditional_variance(const GarchSpec& spec, const GarchParams& params) {
    if (spec.variant == GarchVariant::EGarch) throw InvalidInput("unconditional_variance: vanilla/GJR only");
    return params.alpha0 / (1.0 - params.persistence(spec));
}

namespace {

// Unconstrained coordinates.
// Vanilla/GJR: [log alpha0, logit P, z_1..z_{K-1}], shares = softmax(0, z), K = q + p (+ r).
// EGARCH: [alpha0, alpha_2..alpha_q, atanh(p beta_i).., theta sd, lambda sd] with alpha_1 = 1.
struct Transform {
    GarchSpec spec;
    double scale;  // sample sd, for EGARCH theta/lambda

    int components() const {
        return spec.q + spec.p + (spec.variant == GarchVariant::Gjr ? spec.r : 0);
    }

    int dimension() const {
        if (spec.variant == GarchVariant::EGarch) return 1 + (spec.q - 1) + spec.p + 2;
        return 1 + components();
    }

    GarchParams to_params(const Eigen::VectorXd& x) const {
        GarchParams g;
        if (spec.variant == GarchVariant::EGarch) {
            int k = 0;
            g.alpha0 = x[k++];
            g.alpha.push_back(1.0);
            for (int j = 1; j < spec.q; ++j) g.alpha.push_back(x[k++]);
            for (int i = 0; i < spec.p; ++i) g.beta.push_back(std::tanh(x[k++]) / spec.p);
            g.theta = x[k++] / scale;
            g.lambda = x[k++] / scale;
            return g;
        }
        g.alpha0 = std::exp(x[0]);
        const double persistence = 1.0 / (1.0 + std::exp(-x[1]));
        const int kc = components();
        std::vector<double> w(static_cast<std::size_t>(kc));
        w[0] = 0.0;
        for (int k = 1; k < kc; ++k) w[k] = x[1 + k];
        const double mx = *std::max_element(w.begin(), w.end());
        double sum = 0.0;
        for (double& v : w) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : w) v /= sum;
        int k = 0;
        for (int j = 0; j < spec.q; ++j) g.alpha.push_back(persistence * w[k++]);
        for (int i = 0; i < spec.p; ++i) g.beta.push_back(persistence * w[k++]);
        if (spec.variant == GarchVariant::Gjr)
            for (int j = 0; j < spec.r; ++j) g.gamma.push_back(2.0 * persistence * w[k++]);
        return g;
    }

    Eigen::VectorXd from_params(const GarchParams& g) const {
        Eigen::VectorXd x(dimension());
        if (spec.variant == GarchVariant::EGarch) {
            int k = 0;
            x[k++] = g.alpha0;
            const double a1 = g.alpha.empty() || g.alpha[0] == 0.0 ? 1.0 : g.alpha[0];
            for (int j = 1; j < spec.q; ++j) x[k++] = g.alpha[j] / a1;
            for (int i = 0; i < spec.p; ++i)
                x[k++] = std::atanh(std::clamp(g.beta[i] * spec.p, -0.999999, 0.999999));
            x[k++] = g.theta * a1 * scale;
            x[k++] = g.lambda * a1 * scale;
            return x;
        }
        const double floor = 1e-8;
        std::vector<double> parts;
        for (double a : g.alpha) parts.push_back(std::max(a, floor));
        for (double b : g.beta) parts.push_back(std::max(b, floor));
        for (double c : g.gamma) parts.push_back(std::max(0.5 * c, floor));
        double total = 0.0;
        for (double v : parts) total += v;
        total = std::clamp(total, 1e-6, 1.0 - 1e-6);
        x[0] = std::log(std::max(g.alpha0, 1e-300));
        x[1] = std::log(total / (1.0 - total));
        for (std::size_t k = 1; k < parts.size(); ++k) x[1 + static_cast<Eigen::Index>(k)] = std::log(parts[k] / parts[0]);
        return x;
    }

    GarchParams default_start(double var) const {
        GarchParams g;
        if (spec.variant == GarchVariant::EGarch) {
            const double b = 0.8;
            g.alpha.assign(static_cast<std::size_t>(spec.q), 0.0);
            g.alpha[0] = 1.0;
            g.beta.assign(static_cast<std::size_t>(spec.p), spec.p > 0 ? b / spec.p : 0.0);
            g.theta = -0.05 / scale;
            g.lambda = 0.15 / scale;
            const double bsum = spec.p > 0 ? b : 0.0;
            g.alpha0 = (1.0 - bsum) * std::log(var) - 0.15 * std::sqrt(2.0 / std::numbers::pi);
            return g;
        }
        const double a = 0.1, b = 0.8, c = spec.variant == GarchVariant::Gjr ? 0.05 : 0.0;
        g.alpha.assign(static_cast<std::size_t>(spec.q), a / spec.q);
        g.beta.assign(static_cast<std::size_t>(spec.p), spec.p > 0 ? b / spec.p : 0.0);
        if (spec.variant == GarchVariant::Gjr) g.gamma.assign(static_cast<std::size_t>(spec.r), c / spec.r);
        g.alpha0 = var * (1.0 - g.persistence(spec));
        return g;
    }
};

double mean_negative_ll(const GarchSpec& spec, const GarchParams& g, std::span<const double> returns) {
    try {
        const double ll = log_likelihood(spec, g, returns);
        return std::isfinite(ll) ? -ll / static_cast<double>(returns.size())
                                 : std::numeric_limits<double>::infinity();
    } catch (const InvalidInput&) {
        return std::numeric_limits<double>::infinity();
    }
}

void check_fit_input(const GarchSpec& spec, std::span<const double> returns, double var) {
    spec.validate();
    if (returns.size() < 50) throw InvalidInput("garch fit: need at least 50 returns");
    if (!(var > 1e-300) || !std::isfinite(var))
        throw FitFailed("garch fit: degenerate (constant) return series", GarchParams{});
}

} // namespace

GarchFit fit(const GarchSpec& spec, std::span<const double> returns, const SimplexConfig& cfg) {
    const double var = sample_variance(returns);
    check_fit_input(spec, returns, var);
    cfg.validate();
    const Transform tr{spec, std::sqrt(var)};
    const Objective objective = [&](const Eigen::VectorXd& x) {
        return mean_negative_ll(spec, tr.to_params(x), returns);
    };

    const Eigen::VectorXd base = tr.from_params(tr.default_start(var));
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        Eigen::VectorXd start = base;
        if (r > 0)
            for (Eigen::Index k = 0; k < start.size(); ++k) start[k] += 1.5 * unit(rng);
        const SimplexResult res = nelder_mead(objective, start, cfg.initial_step, cfg);
        any_converged = any_converged || res.converged;
        if (res.value < best.value) best = res;
    }
    if (!std::isfinite(best.value))
        throw FitFailed("garch fit: every start rejected", tr.to_params(base));
    GarchParams params = tr.to_params(best.x);
    if (!any_converged)
        throw FitFailed("garch fit: simplex did not converge within " + std::to_string(cfg.max_iterations) +
                            " iterations",
                        params);
    return GarchFit{params, -best.value * static_cast<double>(returns.size()), best.iterations, best.converged};
}

GarchFit refit(const GarchSpec& spec, std::span<const double> returns, const GarchParams& start,
               const SimplexConfig& cfg) {
    const double var = sample_variance(returns);
    check_fit_input(spec, returns, var);
    cfg.validate();
    const Transform tr{spec, std::sqrt(var)};
    const Objective objective = [&](const Eigen::VectorXd& x) {
        return mean_negative_ll(spec, tr.to_params(x), returns);
    };
    const double start_value = mean_negative_ll(spec, start, returns);
    const SimplexResult res = nelder_mead(objective, tr.from_params(start), cfg.warm_step, cfg);
    if (!(res.value < start_value)) {
        if (!std::isfinite(start_value)) throw FitFailed("garch refit: start and descent rejected", start);
        return GarchFit{start, -start_value * static_cast<double>(returns.size()), 0, true};
    }
    return GarchFit{tr.to_params(res.x), -res.value * static_cast<double>(returns.size()), res.iterations,
                    res.converged};
}

} // namespace gpvol
