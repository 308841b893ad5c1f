#include "doctest.h"

#include "gpvol/error.hpp"
#include "gpvol/gp.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace gpvol;
using gpvol::testing::Gen;

TEST_CASE("kernel values") {
    const auto se = KernelSpec::make(KernelFamily::SquaredExponential, 1.5, 2.0, 0.1);
    const auto m32 = KernelSpec::make(KernelFamily::Matern32, 1.5, 2.0, 0.1);
    CHECK(signal_covariance(se, 0.0) == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(signal_covariance(m32, 0.0) == doctest::Approx(2.25).epsilon(1e-15));
    const auto unit = KernelSpec::make(KernelFamily::SquaredExponential, 1.0, 1.0, 0.1);
    CHECK(signal_covariance(unit, std::sqrt(2.0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(signal_covariance(m32, 3.0) == doctest::Approx(testing::oracle_kernel(m32, 3.0)).epsilon(1e-14));
    CHECK(kernel_eval(se, 1.0, 1.0) == signal_covariance(se, 0.0));
}

TEST_CASE("quasi-periodic kernel carries its own noise on the diagonal") {
    const auto qp = KernelSpec::make(KernelFamily::QuasiPeriodic, 1.0, 3.0, 0.2, 2.0, 1.0);
    CHECK(kernel_eval(qp, 1.0, 1.0) == doctest::Approx(1.04).epsilon(1e-14));
    CHECK(kernel_eval(qp, 1.0, 3.0) == doctest::Approx(testing::oracle_kernel(qp, 2.0)).epsilon(1e-14));
    // V has sigma_n^2 once on the diagonal, not twice.
    const std::vector<Observation> w{{0.0, 0.0}, {1.0, 1.0}};
    const auto st = CholeskyState::build(qp, w);
    CHECK(st.covariance()(0, 0) == doctest::Approx(1.04).epsilon(1e-14));
}

TEST_CASE("kernel spec validation") {
    Eigen::VectorXd bad(3);
    bad << 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_AS(KernelSpec::from_log(KernelFamily::Matern32, bad), InvalidInput);
    CHECK_THROWS_AS(KernelSpec::from_log(KernelFamily::QuasiPeriodic, Eigen::VectorXd::Zero(3)), InvalidInput);
    Eigen::VectorXd noiseless(3);
    noiseless << 0.0, 0.0, -std::numeric_limits<double>::infinity();
    CHECK_NOTHROW(KernelSpec::from_log(KernelFamily::Matern32, noiseless));
    CHECK(parse_kernel_family("matern32") == KernelFamily::Matern32);
    CHECK_THROWS_AS(parse_kernel_family("rbf2"), InvalidInput);
}

TEST_CASE("single point factor") {
    const auto s = KernelSpec::make(KernelFamily::SquaredExponential, 1.0, 1.0, 0.1);
    const std::vector<Observation> w{{0.0, 0.3}};
    const auto st = CholeskyState::build(s, w);
    CHECK(st.factor()(0, 0) == doctest::Approx(std::sqrt(1.01)).epsilon(1e-15));
    CHECK(st.covariance()(0, 0) == doctest::Approx(1.01).epsilon(1e-15));
}

TEST_CASE("distant points decouple") {
    const auto s = KernelSpec::make(KernelFamily::SquaredExponential, 1.0, 1.0, 0.1);
    const std::vector<Observation> w{{0.0, 0.3}, {1e4, -0.3}};
    const auto st = CholeskyState::build(s, w);
    CHECK(st.factor()(1, 0) == 0.0);
}

TEST_CASE("factor reproduces V on random windows") {
    Gen g(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto spec = g.kernel(g.family());
        const int n = g.integer(1, 12);
        const auto st = CholeskyState::build(spec, testing::zip(g.times(n), g.values(n)));
        const Eigen::MatrixXd L = st.factor();
        CHECK(testing::max_abs_diff(L * L.transpose(), st.covariance()) <= 1e-10);
        CHECK(L.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("posterior and marginal likelihood match the dense oracle") {
    Gen g(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto spec = g.kernel(g.family());
        const int n = g.integer(1, 8);
        const auto t = g.times(n);
        const auto y = g.values(n, g.uniform(0.2, 3.0));
        const double x = t.back() + g.uniform(-4.0, 4.0);
        const auto st = CholeskyState::build(spec, testing::zip(t, y));
        const auto post = posterior_at(st, x);
        const auto ref = testing::dense_oracle(spec, t, y, x, st.jitter());
        CHECK(std::abs(post.mean - ref.mean) <= 1e-10);
        CHECK(std::abs(post.variance - ref.variance) <= 1e-10);
        CHECK(std::abs(neg_log_marginal(st) - ref.nlml) <= 1e-10);
        const std::vector<double> xs{x, t.front()};
        const auto means = posterior_means(st, xs);
        CHECK(std::abs(means[0] - post.mean) <= 1e-10);
        CHECK(std::abs(means[1] - posterior_at(st, t.front()).mean) <= 1e-10);
    }
}

TEST_CASE("noiseless interpolation and prior reversion") {
    Eigen::VectorXd lp(3);
    lp << 0.0, 0.0, -std::numeric_limits<double>::infinity();
    const auto noiseless = KernelSpec::from_log(KernelFamily::Matern32, lp);
    const std::vector<Observation> one{{2.0, 0.7}};
    const auto st = CholeskyState::build(noiseless, one);
    const auto p = posterior_at(st, 2.0);
    CHECK(std::abs(p.mean - 0.7) <= 1e-10);
    CHECK(std::abs(p.variance) <= 1e-10);
    CHECK(p.interpolation);

    const auto spec = KernelSpec::make(KernelFamily::SquaredExponential, 1.2, 1.0, 0.1);
    const std::vector<Observation> w{{0.0, 1.0}, {1.0, 2.0}, {2.0, 0.0}};
    const auto st2 = CholeskyState::build(spec, w);
    const auto far = posterior_at(st2, 1e3);
    CHECK(far.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(far.variance == doctest::Approx(noisy_variance(spec)).epsilon(1e-12));
    CHECK_FALSE(far.interpolation);
}

TEST_CASE("marginal likelihood of a single zero residual") {
    const auto spec = KernelSpec::make(KernelFamily::SquaredExponential, 1.0, 1.0, 1e-300);
    const std::vector<Observation> w{{0.0, 5.0}};
    const auto st = CholeskyState::build(spec, w);
    CHECK(neg_log_marginal(st) == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("append matches a fresh build") {
    Gen g(8);
    const auto spec = KernelSpec::make(KernelFamily::Matern32, 0.8, 3.0, 0.2);
    CholeskyState st(spec);
    st.append({0.0, 0.4});
    CHECK(st.factor()(0, 0) == doctest::Approx(std::sqrt(noisy_variance(spec))).epsilon(1e-15));
    std::vector<Observation> all{{0.0, 0.4}};
    for (int i = 1; i <= 100; ++i) {
        const Observation o{static_cast<double>(i) + g.uniform(0.0, 0.5), g.normal()};
        st.append(o);
        all.push_back(o);
    }
    const auto fresh = CholeskyState::build(spec, all);
    CHECK(testing::max_abs_diff(st.factor(), fresh.factor()) <= 1e-8);
    CHECK_THROWS_AS(st.append({0.0, 0.0}), InvalidInput);
}

TEST_CASE("drop oldest and newest") {
    const auto spec = KernelSpec::make(KernelFamily::SquaredExponential, 1.0, 2.0, 0.3);
    const std::vector<Observation> two{{0.0, 1.0}, {1.0, 2.0}};
    auto st = CholeskyState::build(spec, two);
    st.drop_oldest();
    REQUIRE(st.size() == 1);
    CHECK(st.times()[0] == 1.0);
    CHECK(st.factor()(0, 0) == doctest::Approx(std::sqrt(noisy_variance(spec))).epsilon(1e-14));

    auto st2 = CholeskyState::build(spec, two);
    st2.drop_newest();
    REQUIRE(st2.size() == 1);
    CHECK(st2.times()[0] == 0.0);
    CHECK(st2.values()[0] == 1.0);
}

TEST_CASE("rolling window round trip against recompute") {
    Gen g(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = g.kernel(g.family());
        const int w = g.integer(2, 30);
        auto t = g.times(w);
        auto y = g.values(w);
        auto st = CholeskyState::build(spec, testing::zip(t, y));
        for (int step = 0; step < 50; ++step) {
            const Observation o{t.back() + g.uniform(0.2, 2.0), g.normal()};
            st.append(o);
            st.drop_oldest();
            t.erase(t.begin());
            y.erase(y.begin());
            t.push_back(o.t);
            y.push_back(o.y);
        }
        const auto fresh = CholeskyState::build(spec, testing::zip(t, y));
        CHECK(testing::max_abs_diff(st.factor(), fresh.factor()) <= 1e-8);
        CHECK(st.times() == t);
    }
}

TEST_CASE("jitter ladder rescues a singular noiseless covariance") {
    Eigen::VectorXd lp(3);
    lp << 0.0, std::log(50.0), -std::numeric_limits<double>::infinity();
    const auto spec = KernelSpec::from_log(KernelFamily::SquaredExponential, lp);
    std::vector<Observation> w;
    for (int i = 0; i < 40; ++i) w.push_back({i * 0.01, 0.0});
    const auto st = CholeskyState::build(spec, w);
    CHECK(st.jitter() > 0.0);
    const Eigen::MatrixXd L = st.factor();
    CHECK(testing::max_abs_diff(L * L.transpose(), st.covariance()) <= 1e-10);
}
