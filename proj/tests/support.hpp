#pragma once

#include "gpvol/gp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace gpvol::testing {

// Kernels written out from their definitions, independent of the library's assembly code.
inline double oracle_kernel(const KernelSpec& s, double d) {
    const double sh = std::exp(s.log_params[0]);
    const double l = std::exp(s.log_params[1]);
    d = std::abs(d);
    switch (s.family) {
    case KernelFamily::SquaredExponential: return sh * sh * std::exp(-d * d / (2.0 * l * l));
    case KernelFamily::Matern32: {
        const double u = std::sqrt(3.0) * d / l;
        return sh * sh * (1.0 + u) * std::exp(-u);
    }
    case KernelFamily::QuasiPeriodic: {
        const double T = std::exp(s.log_params[3]);
        const double w = std::exp(s.log_params[4]);
        const double sn = std::sin(std::numbers::pi * d / T);
        return sh * sh * std::exp(-sn * sn / (2.0 * w * w) - d * d / (l * l));
    }
    }
    return 0.0;
}

struct DenseResult {
    double mean = 0.0;
    double variance = 0.0;
    double nlml = 0.0;
};

// Posterior of a new noisy observation and the negative log marginal likelihood,
// computed with an explicit dense inverse and determinant.
inline DenseResult dense_oracle(const KernelSpec& s, const std::vector<double>& t, const std::vector<double>& y,
                                double x_star, double jitter = 0.0) {
    const auto n = static_cast<Eigen::Index>(t.size());
    const double sn2 = std::exp(2.0 * s.log_params[2]);
    Eigen::MatrixXd V(n, n);
    Eigen::VectorXd k(n), r(n);
    double mu = 0.0;
    for (double v : y) mu += v;
    mu /= static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) V(i, j) = oracle_kernel(s, t[i] - t[j]) + (i == j ? sn2 + jitter : 0.0);
        k[i] = oracle_kernel(s, x_star - t[i]);
        r[i] = y[i] - mu;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
    const Eigen::MatrixXd Vinv = lu.inverse();
    DenseResult out;
    out.mean = mu + k.dot(Vinv * r);
    out.variance = oracle_kernel(s, 0.0) + sn2 - k.dot(Vinv * k);
    out.nlml = 0.5 * r.dot(Vinv * r) + 0.5 * std::log(lu.determinant()) +
               0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return out;
}

// Hand-rolled generator for randomized property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    std::uint64_t bits() { return rng_(); }

    KernelFamily family() {
        switch (integer(0, 2)) {
        case 0: return KernelFamily::SquaredExponential;
        case 1: return KernelFamily::Matern32;
        default: return KernelFamily::QuasiPeriodic;
        }
    }

    KernelSpec kernel(KernelFamily f) {
        return KernelSpec::make(f, uniform(0.3, 2.0), uniform(0.5, 5.0), uniform(0.05, 0.5), uniform(1.0, 6.0),
                                uniform(0.5, 2.0));
    }

    // Strictly increasing times with gaps in [0.2, 2].
    std::vector<double> times(int n) {
        std::vector<double> t;
        double x = uniform(-3.0, 3.0);
        for (int i = 0; i < n; ++i) {
            t.push_back(x);
            x += uniform(0.2, 2.0);
        }
        return t;
    }

    std::vector<double> values(int n, double scale = 1.0) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i) v.push_back(scale * normal());
        return v;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline std::vector<Observation> zip(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<Observation> w;
    for (std::size_t i = 0; i < t.size(); ++i) w.push_back({t[i], y[i]});
    return w;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace gpvol::testing
