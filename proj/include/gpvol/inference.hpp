#pragma once

#include "gpvol/gp.hpp"
#include "gpvol/nelder_mead.hpp"

#include <span>

namespace gpvol {

/// Independent Gaussian prior over the log-hyperparameters.
struct HyperPrior {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    void validate(KernelFamily family) const;
    /// sum_k (theta_k - mu_k)^2 / (2 s_k^2)
    double penalty(const Eigen::VectorXd& log_params) const;

    /// Data-scaled defaults: sigma_h at the sample std of y, length at span/10,
    /// sigma_n at 0.1 sample std, period at span/4, roughness at 1; all stds 1.5.
    static HyperPrior defaults_for(KernelFamily family, std::span<const Observation> window,
                                   double stddev = 1.5);
};

struct MapResult {
    KernelSpec spec;
    double nlp = 0.0;
    int iterations = 0;
    int restart_index = 0;
    bool degenerate = false;  // constant window: prior mean returned without search
};

/// Negative log marginal likelihood plus the prior penalty. Returns +inf when the
/// covariance cannot be factorized, which the simplex treats as a rejected point.
double neg_log_posterior(const KernelSpec& spec, std::span<const Observation> window, const HyperPrior& prior);

/// Multi-start MAP estimate: cfg.restarts descents from uniform starts in the prior's +-2 sd box.
MapResult map_estimate(std::span<const Observation> window, KernelFamily family, const HyperPrior& prior,
                       const SimplexConfig& cfg);

/// One descent started at prev's optimum; returns the better of prev (re-scored on the
/// new window) and the descended point.
MapResult warm_update(const MapResult& prev, std::span<const Observation> window, const HyperPrior& prior,
                      const SimplexConfig& cfg);

/// True when the window's y values are constant to within rounding.
bool is_constant_window(std::span<const Observation> window);

} // namespace gpvol
