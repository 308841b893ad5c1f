#pragma once

#include <optional>
#include <span>
#include <vector>

namespace gpvol {

/// The six evaluation measures. mdrae is empty when every no-change denominator is zero.
struct MetricSuite {
    double mse1 = 0.0;
    double mse2 = 0.0;
    double mae1 = 0.0;
    double mae2 = 0.0;
    std::optional<double> mdrae;
    double smape = 0.0;
    std::size_t n = 0;
    std::size_t n_mdrae = 0;  // terms with sigma_t != sigma_{t-1}
    std::size_t n_smape = 0;  // terms with sigma_t + h_t > 0
};

/// sigma: realized proxy, h: forecasts. sigma_before, when given, is the realized value
/// preceding sigma[0] so that the first MdRAE term is defined.
MetricSuite compute_suite(std::span<const double> sigma, std::span<const double> h,
                          std::optional<double> sigma_before = std::nullopt);

/// Median of a copy of xs. Empty input throws InvalidInput.
double median(std::vector<double> xs);

inline constexpr double kAbsCalibration = 0.7978845608028654;  // sqrt(2 / pi) = E|z|

struct ResidualStats {
    std::vector<double> residuals;  // r_t / h_t
    double mean = 0.0;
    double stddev = 0.0;
    double calibration = 1.0;        // factor the forecasts are divided by for calibrated_*
    double calibrated_mean = 0.0;
    double calibrated_stddev = 0.0;
    std::size_t excluded = 0;        // non-positive forecasts skipped
};

/// e_t = r_t / h_t; calibrated statistics use h_t / calibration.
ResidualStats residual_stats(std::span<const double> r, std::span<const double> h, double calibration);

} // namespace gpvol
