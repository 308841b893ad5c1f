#include "gpvol/metrics.hpp"

#include "gpvol/error.hpp"

#include <algorithm>
#include <cmath>

namespace gpvol {

double median(std::vector<double> xs) {
    if (xs.empty()) throw InvalidInput("median of an empty sequence");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    const double upper = xs[mid];
    if (xs.size() % 2 == 1) return upper;
    const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

MetricSuite compute_suite(std::span<const double> sigma, std::span<const double> h,
                          std::optional<double> sigma_before) {
    if (sigma.size() != h.size()) throw InvalidInput("compute_suite: length mismatch");
    if (sigma.size() < 2) throw InvalidInput("compute_suite: need at least 2 points");
    MetricSuite m;
    m.n = sigma.size();
    double smape_sum = 0.0;
    std::vector<double> rae;
    rae.reserve(sigma.size());
    for (std::size_t t = 0; t < sigma.size(); ++t) {
        const double e = sigma[t] - h[t];
        const double e2 = e * (sigma[t] + h[t]);
        m.mse1 += e * e;
        m.mse2 += e2 * e2;
        m.mae1 += std::abs(e);
        m.mae2 += std::abs(e2);
        const double denom = sigma[t] + h[t];
        if (denom > 0.0) {
            smape_sum += 200.0 * std::abs(e) / denom;
            ++m.n_smape;
        }
        const std::optional<double> prev = t > 0 ? std::optional<double>(sigma[t - 1]) : sigma_before;
        if (prev && sigma[t] != *prev) rae.push_back(std::abs(e / (sigma[t] - *prev)));
    }
    const double n = static_cast<double>(m.n);
    m.mse1 /= n;
    m.mse2 /= n;
    m.mae1 /= n;
    m.mae2 /= n;
    m.smape = m.n_smape > 0 ? smape_sum / static_cast<double>(m.n_smape) : 0.0;
    m.n_mdrae = rae.size();
    if (!rae.empty()) m.mdrae = median(std::move(rae));
    return m;
}

namespace {

void moments(std::span<const double> xs, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

ResidualStats residual_stats(std::span<const double> r, std::span<const double> h, double calibration) {
    if (r.size() != h.size()) throw InvalidInput("residual_stats: length mismatch");
    if (!(calibration > 0.0)) throw InvalidInput("residual_stats: calibration must be positive");
    ResidualStats s;
    s.calibration = calibration;
    s.residuals.reserve(r.size());
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (!(h[t] > 0.0)) {
            ++s.excluded;
            continue;
        }
        s.residuals.push_back(r[t] / h[t]);
    }
    moments(s.residuals, s.mean, s.stddev);
    s.calibrated_mean = s.mean * calibration;
    s.calibrated_stddev = s.stddev * calibration;
    return s;
}

} // namespace gpvol
