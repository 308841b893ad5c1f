#include "gpvol/nelder_mead.hpp"

#include "gpvol/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace gpvol {

void SimplexConfig::validate() const {
    if (max_iterations <= 0 || !(f_tolerance > 0.0) || !(x_tolerance > 0.0) || restarts < 1 ||
        !(initial_step > 0.0) || !(warm_step > 0.0))
        throw InvalidInput("simplex config: all settings must be positive and restarts >= 1");
}

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

double safe_eval(const Objective& f, const Eigen::VectorXd& x, int& evals) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

} // namespace

SimplexResult nelder_mead(const Objective& f, const Eigen::VectorXd& start, double step,
                          const SimplexConfig& cfg) {
    cfg.validate();
    const auto n = start.size();
    SimplexResult out;

    std::vector<Eigen::VectorXd> pts(n + 1, start);
    std::vector<double> vals(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) pts[i + 1][i] += step;
    for (Eigen::Index i = 0; i <= n; ++i) vals[i] = safe_eval(f, pts[i], out.evaluations);

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::vector<Eigen::VectorXd> p2(n + 1);
        std::vector<double> v2(n + 1);
        for (std::size_t i = 0; i < order.size(); ++i) {
            p2[i] = std::move(pts[order[i]]);
            v2[i] = vals[order[i]];
        }
        pts.swap(p2);
        vals.swap(v2);
    };

    Eigen::VectorXd centroid(n);
    for (; out.iterations < cfg.max_iterations; ++out.iterations) {
        sort_simplex();
        if (!std::isfinite(vals[0])) break;  // every vertex rejected
        const double spread = vals[n] - vals[0];
        double diameter = 0.0;
        for (Eigen::Index i = 1; i <= n; ++i)
            diameter = std::max(diameter, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
        if (std::isfinite(vals[n]) && (spread < cfg.f_tolerance || diameter < cfg.x_tolerance)) {
            out.converged = true;
            break;
        }

        centroid.setZero();
        for (Eigen::Index i = 0; i < n; ++i) centroid += pts[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + kReflect * (centroid - pts[n]);
        const double fr = safe_eval(f, xr, out.evaluations);
        if (fr < vals[0]) {
            const Eigen::VectorXd xe = centroid + kExpand * (xr - centroid);
            const double fe = safe_eval(f, xe, out.evaluations);
            if (fe < fr) {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if (fr < vals[n - 1]) {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        const bool outside = fr < vals[n];
        const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + kContract * (xr - centroid))
                                           : Eigen::VectorXd(centroid + kContract * (pts[n] - centroid));
        const double fc = safe_eval(f, xc, out.evaluations);
        if (fc < (outside ? fr : vals[n])) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for (Eigen::Index i = 1; i <= n; ++i) {
            pts[i] = pts[0] + kShrink * (pts[i] - pts[0]);
            vals[i] = safe_eval(f, pts[i], out.evaluations);
        }
    }
    sort_simplex();
    out.x = pts[0];
    out.value = vals[0];
    return out;
}

} // namespace gpvol
