#include "gpvol/gp.hpp"

#include "gpvol/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace gpvol {

std::string_view to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::SquaredExponential: return "se";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::QuasiPeriodic: return "qp";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "se" || name == "SE") return KernelFamily::SquaredExponential;
    if (name == "matern32" || name == "matern" || name == "m32") return KernelFamily::Matern32;
    if (name == "qp" || name == "QP" || name == "quasi-periodic") return KernelFamily::QuasiPeriodic;
    throw InvalidInput("unknown kernel family '" + std::string(name) + "'");
}

int parameter_count(KernelFamily family) { return family == KernelFamily::QuasiPeriodic ? 5 : 3; }

KernelSpec KernelSpec::make(KernelFamily family, double output_scale, double length_scale, double noise_std,
                            double period, double roughness) {
    KernelSpec s;
    s.family = family;
    s.log_params.resize(parameter_count(family));
    s.log_params[0] = std::log(output_scale);
    s.log_params[1] = std::log(length_scale);
    s.log_params[2] = std::log(noise_std);
    if (family == KernelFamily::QuasiPeriodic) {
        s.log_params[3] = std::log(period);
        s.log_params[4] = std::log(roughness);
    }
    s.validate();
    return s;
}

KernelSpec KernelSpec::from_log(KernelFamily family, Eigen::VectorXd log_params) {
    KernelSpec s;
    s.family = family;
    s.log_params = std::move(log_params);
    s.validate();
    return s;
}

double KernelSpec::period() const {
    return family == KernelFamily::QuasiPeriodic ? std::exp(log_params[3]) : 0.0;
}

double KernelSpec::roughness() const {
    return family == KernelFamily::QuasiPeriodic ? std::exp(log_params[4]) : 0.0;
}

void KernelSpec::validate() const {
    if (log_params.size() != parameter_count(family))
        throw InvalidInput("kernel spec: expected " + std::to_string(parameter_count(family)) +
                           " hyperparameters, got " + std::to_string(log_params.size()));
    for (Eigen::Index i = 0; i < log_params.size(); ++i) {
        const double v = log_params[i];
        const bool noise = i == 2;
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity() ||
            (!noise && !std::isfinite(v)))
            throw InvalidInput("kernel spec: hyperparameter " + std::to_string(i) + " out of range");
    }
}

namespace {

// Natural-space coefficients hoisted out of the inner assembly loops.
struct Coeffs {
    KernelFamily family;
    double amp2;
    double inv_len;
    double noise2;
    double pi_over_period = 0.0;
    double inv_two_w2 = 0.0;

    explicit Coeffs(const KernelSpec& s)
        : family(s.family), amp2(std::exp(2.0 * s.log_params[0])), inv_len(std::exp(-s.log_params[1])),
          noise2(std::exp(2.0 * s.log_params[2])) {
        if (family == KernelFamily::QuasiPeriodic) {
            pi_over_period = std::numbers::pi * std::exp(-s.log_params[3]);
            inv_two_w2 = 0.5 * std::exp(-2.0 * s.log_params[4]);
        }
    }

    double operator()(double d) const {
        switch (family) {
        case KernelFamily::SquaredExponential: {
            const double u = d * inv_len;
            return amp2 * std::exp(-0.5 * u * u);
        }
        case KernelFamily::Matern32: {
            const double u = std::numbers::sqrt3 * d * inv_len;
            return amp2 * (1.0 + u) * std::exp(-u);
        }
        case KernelFamily::QuasiPeriodic: {
            const double s = std::sin(pi_over_period * d);
            const double u = d * inv_len;
            return amp2 * std::exp(-s * s * inv_two_w2 - u * u);
        }
        }
        return 0.0;
    }
};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

double signal_covariance(const KernelSpec& spec, double d) { return Coeffs(spec)(std::abs(d)); }

double kernel_eval(const KernelSpec& spec, double xi, double xj) {
    const Coeffs c(spec);
    double k = c(std::abs(xi - xj));
    if (spec.family == KernelFamily::QuasiPeriodic && xi == xj) k += c.noise2;
    return k;
}

double noisy_variance(const KernelSpec& spec) {
    const Coeffs c(spec);
    return c(0.0) + c.noise2;
}

CholeskyState::CholeskyState(KernelSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

CholeskyState CholeskyState::build(const KernelSpec& spec, std::span<const Observation> window) {
    CholeskyState s(spec);
    s.times_.reserve(window.size());
    s.values_.reserve(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (i > 0 && !(window[i].t > window[i - 1].t))
            throw InvalidInput("build_covariance: times must be strictly increasing");
        s.times_.push_back(window[i].t);
        s.values_.push_back(window[i].y);
    }
    s.refactor(0.0);
    return s;
}

void CholeskyState::refactor(double start_jitter) {
    const auto n = static_cast<Eigen::Index>(times_.size());
    const Coeffs c(spec_);
    const auto fill = [&](double jitter) {
        factor_.resize(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            factor_(j, j) = c(0.0) + c.noise2 + jitter;
            for (Eigen::Index i = j + 1; i < n; ++i) factor_(i, j) = c(times_[i] - times_[j]);
        }
    };
    const double mean_diag = n > 0 ? c(0.0) + c.noise2 : 1.0;

    // Jitter ladder: 0 (or the inherited value), then 1e-10 .. 1e-4 times the mean diagonal.
    double jitter = start_jitter;
    for (;;) {
        fill(jitter);
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(factor_);
        bool ok = llt.info() == Eigen::Success;
        if (ok) {
            for (Eigen::Index i = 0; i < n; ++i)
                if (!(factor_(i, i) > 0.0) || !std::isfinite(factor_(i, i))) ok = false;
        }
        if (ok) {
            factor_.triangularView<Eigen::StrictlyUpper>().setZero();
            jitter_ = jitter;
            return;
        }
        const double next = jitter == 0.0 ? 1e-10 * mean_diag : jitter * 10.0;
        if (next > 1e-4 * mean_diag * (1.0 + 1e-9) || !std::isfinite(next)) {
            std::ostringstream msg;
            msg << "covariance not positive definite after jitter " << jitter << " (n=" << n
                << ", mean diag=" << mean_diag << ", family=" << to_string(spec_.family)
                << ", log params=" << spec_.log_params.transpose() << ")";
            factor_.resize(0, 0);
            throw NumericalError(msg.str());
        }
        jitter = next;
    }
}

void CholeskyState::append(const Observation& obs) {
    if (!times_.empty() && !(obs.t > times_.back()))
        throw InvalidInput("chol_append: new time must exceed every window time");
    const auto n = static_cast<Eigen::Index>(times_.size());
    const Coeffs c(spec_);

    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = c(obs.t - times_[i]);
    const double vnn = c(0.0) + c.noise2 + jitter_;

    Eigen::VectorXd row = n > 0 ? factor_.triangularView<Eigen::Lower>().solve(k) : Eigen::VectorXd();
    const double pivot2 = vnn - (n > 0 ? row.squaredNorm() : 0.0);

    times_.push_back(obs.t);
    values_.push_back(obs.y);

    if (!(pivot2 > 1e-14 * vnn) || !std::isfinite(pivot2)) {
        ++refactorizations_;
        refactor(jitter_);
        return;
    }
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 1, n + 1);
    grown.topLeftCorner(n, n) = factor_;
    grown.block(n, 0, 1, n) = row.transpose();
    grown(n, n) = std::sqrt(pivot2);
    factor_ = std::move(grown);
}

void CholeskyState::drop_oldest() {
    const auto n = static_cast<Eigen::Index>(times_.size());
    if (n < 2) throw InvalidInput("chol_drop_oldest: window must hold at least 2 observations");
    const Eigen::Index m = n - 1;

    // V' = L22 L22' + l21 l21': rank-one update of the trailing block by Givens rotations.
    Eigen::MatrixXd l = factor_.bottomRightCorner(m, m);
    Eigen::VectorXd x = factor_.col(0).tail(m);
    bool ok = true;
    for (Eigen::Index k = 0; k < m && ok; ++k) {
        const double lkk = l(k, k);
        const double r = std::hypot(lkk, x[k]);
        if (!(r > 0.0) || !std::isfinite(r) || !(lkk > 0.0)) {
            ok = false;
            break;
        }
        const double cs = r / lkk;
        const double sn = x[k] / lkk;
        l(k, k) = r;
        for (Eigen::Index i = k + 1; i < m; ++i) {
            l(i, k) = (l(i, k) + sn * x[i]) / cs;
            x[i] = cs * x[i] - sn * l(i, k);
        }
    }

    times_.erase(times_.begin());
    values_.erase(values_.begin());
    if (!ok) {
        ++refactorizations_;
        refactor(jitter_);
        return;
    }
    factor_ = std::move(l);
}

void CholeskyState::drop_newest() {
    if (times_.empty()) throw InvalidInput("drop_newest: window is empty");
    const auto m = static_cast<Eigen::Index>(times_.size()) - 1;
    times_.pop_back();
    values_.pop_back();
    factor_ = factor_.topLeftCorner(m, m).eval();
}

double CholeskyState::window_mean() const { return mean_of(values_); }

Eigen::MatrixXd CholeskyState::covariance() const {
    const auto n = static_cast<Eigen::Index>(times_.size());
    const Coeffs c(spec_);
    Eigen::MatrixXd v(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) v(i, j) = c(std::abs(times_[i] - times_[j]));
    v.diagonal().array() += c.noise2 + jitter_;
    return v;
}

Posterior posterior_at(const CholeskyState& state, double x_star) {
    const KernelSpec& spec = state.spec();
    const Coeffs c(spec);
    const double prior_var = c(0.0) + c.noise2;
    Posterior post;
    const auto n = static_cast<Eigen::Index>(state.size());
    if (n == 0) {
        post.variance = prior_var;
        post.degenerate = true;
        return post;
    }
    const auto& times = state.times();
    const auto& ys = state.values();
    post.interpolation = x_star <= times.back();

    const double mu = state.window_mean();
    Eigen::VectorXd k(n), resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k[i] = c(std::abs(x_star - times[i]));
        resid[i] = ys[i] - mu;
    }
    const auto lower = state.factor().triangularView<Eigen::Lower>();
    const Eigen::VectorXd v = lower.solve(k);
    const Eigen::VectorXd alpha = lower.solve(resid);
    post.mean = mu + v.dot(alpha);
    post.variance = std::max(0.0, prior_var - v.squaredNorm());
    return post;
}

std::vector<double> posterior_means(const CholeskyState& state, std::span<const double> xs) {
    const auto n = static_cast<Eigen::Index>(state.size());
    const double mu = n > 0 ? state.window_mean() : 0.0;
    std::vector<double> out(xs.size(), mu);
    if (n == 0) return out;
    const Coeffs c(state.spec());
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = state.values()[i] - mu;
    const auto lower = state.factor().triangularView<Eigen::Lower>();
    Eigen::VectorXd alpha = lower.solve(resid);
    lower.transpose().solveInPlace(alpha);
    const auto& times = state.times();
    for (std::size_t j = 0; j < xs.size(); ++j) {
        double m = mu;
        for (Eigen::Index i = 0; i < n; ++i) m += c(std::abs(xs[j] - times[i])) * alpha[i];
        out[j] = m;
    }
    return out;
}

double neg_log_marginal(const CholeskyState& state) {
    const auto n = static_cast<Eigen::Index>(state.size());
    if (n == 0) return 0.0;
    const double mu = state.window_mean();
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = state.values()[i] - mu;
    const Eigen::VectorXd alpha = state.factor().triangularView<Eigen::Lower>().solve(resid);
    const double log_det_half = state.factor().diagonal().array().log().sum();
    return 0.5 * alpha.squaredNorm() + log_det_half +
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

} // namespace gpvol
