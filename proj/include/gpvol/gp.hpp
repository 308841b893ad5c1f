#pragma once

#include "gpvol/returns.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gpvol {

enum class KernelFamily { SquaredExponential, Matern32, QuasiPeriodic };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Number of hyperparameters: 3 for SE and Matern-3/2, 5 for quasi-periodic.
int parameter_count(KernelFamily family);

/// Kernel family plus hyperparameters stored as natural logs, in the order
/// [sigma_h, length, sigma_n] and, for the quasi-periodic family, [period, roughness].
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern32;
    Eigen::VectorXd log_params;

    static KernelSpec make(KernelFamily family, double output_scale, double length_scale, double noise_std,
                           double period = 1.0, double roughness = 1.0);
    static KernelSpec from_log(KernelFamily family, Eigen::VectorXd log_params);

    double output_scale() const { return std::exp(log_params[0]); }
    double length_scale() const { return std::exp(log_params[1]); }
    double noise_std() const { return std::exp(log_params[2]); }
    double period() const;
    double roughness() const;

    /// sigma_n may be exactly zero (noiseless interpolation); everything else must be > 0 and finite.
    void validate() const;
};

/// Noise-free covariance at separation d >= 0.
double signal_covariance(const KernelSpec& spec, double d);

/// Kernel as written for each family. The quasi-periodic kernel carries its own
/// sigma_n^2 term when xi == xj; SE and Matern-3/2 do not.
double kernel_eval(const KernelSpec& spec, double xi, double xj);

/// Diagonal of V: k(x, x) + sigma_n^2.
double noisy_variance(const KernelSpec& spec);

/// Rolling window of (time, y) observations with the lower Cholesky factor of
/// V = K + (sigma_n^2 + jitter) I. Mutations keep the factor consistent with V.
class CholeskyState {
public:
    CholeskyState() = default;
    explicit CholeskyState(KernelSpec spec);

    /// Full factorization with the jitter ladder. Throws NumericalError when the ladder is exhausted.
    static CholeskyState build(const KernelSpec& spec, std::span<const Observation> window);

    /// Extends the factor by one row. t must exceed every window time.
    void append(const Observation& obs);
    /// Removes the oldest observation via a rank-one update of the trailing block.
    void drop_oldest();
    /// Removes the newest observation; the leading block of L is already its factor.
    void drop_newest();

    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    const KernelSpec& spec() const { return spec_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    const Eigen::MatrixXd& factor() const { return factor_; }
    double jitter() const { return jitter_; }
    /// Number of times an incremental update fell back to full refactorization.
    std::size_t refactorizations() const { return refactorizations_; }

    /// Sample mean of y over the window (the constant prior mean).
    double window_mean() const;
    /// V assembled directly from the kernel, jitter included.
    Eigen::MatrixXd covariance() const;

private:
    void refactor(double start_jitter);

    KernelSpec spec_;
    std::vector<double> times_;
    std::vector<double> values_;
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
    std::size_t refactorizations_ = 0;
};

/// Predictive distribution of a new noisy observation at x_star, in log-proxy space.
struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
    bool interpolation = false;  // x_star not later than the newest window time
    bool degenerate = false;     // empty or constant window, prior variance returned
};

Posterior posterior_at(const CholeskyState& state, double x_star);

/// Posterior means at many query points with a single solve against the window.
std::vector<double> posterior_means(const CholeskyState& state, std::span<const double> xs);

/// 0.5 (y - mu)' V^-1 (y - mu) + sum log L_ii + (n / 2) log 2 pi, mu = window mean.
double neg_log_marginal(const CholeskyState& state);

} // namespace gpvol
