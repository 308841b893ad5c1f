#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace gpvol {

/// Settings for the Nelder-Mead descents used by hyperparameter and GARCH estimation.
struct SimplexConfig {
    int max_iterations = 500;
    double f_tolerance = 1e-8;   // stop when max f - min f over the simplex falls below this
    double x_tolerance = 1e-10;  // or when every vertex is this close to the best one
    int restarts = 32;
    std::uint64_t seed = 20240601;
    double initial_step = 0.5;   // simplex edge for cold starts (in the optimizer's coordinates)
    double warm_step = 0.1;      // simplex edge for warm-started descents

    void validate() const;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
/// Non-finite objective values are treated as +infinity, i.e. rejected points.
SimplexResult nelder_mead(const Objective& f, const Eigen::VectorXd& start, double step,
                          const SimplexConfig& cfg);

} // namespace gpvol
