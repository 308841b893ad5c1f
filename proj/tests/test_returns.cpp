#include "doctest.h"

#include "gpvol/error.hpp"
#include "gpvol/returns.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace gpvol;

namespace {

PriceSeries prices(std::vector<double> p) {
    PriceSeries s;
    for (std::size_t i = 0; i < p.size(); ++i) s.timestamps.push_back(static_cast<TimeIndex>(i));
    s.prices = std::move(p);
    return s;
}

ReturnSeries returns(std::vector<double> r) {
    ReturnSeries s;
    for (std::size_t i = 0; i < r.size(); ++i) s.timestamps.push_back(static_cast<TimeIndex>(i));
    s.values = std::move(r);
    return s;
}

ProxySeries proxy(std::vector<double> v) {
    ProxySeries s;
    for (std::size_t i = 0; i < v.size(); ++i) s.timestamps.push_back(static_cast<TimeIndex>(i));
    s.values = std::move(v);
    return s;
}

} // namespace

TEST_CASE("arithmetic returns") {
    CHECK(arithmetic_returns(prices({100, 100})).values == std::vector<double>{0.0});
    CHECK(arithmetic_returns(prices({100, 110})).values[0] == doctest::Approx(0.10).epsilon(1e-14));
    const auto r = arithmetic_returns(prices({100, 90, 99}));
    REQUIRE(r.size() == 2);
    CHECK(r.values[0] == doctest::Approx(-0.10).epsilon(1e-14));
    CHECK(r.values[1] == doctest::Approx(0.10).epsilon(1e-14));
    CHECK(r.timestamps == std::vector<TimeIndex>{1, 2});
}

TEST_CASE("log returns") {
    CHECK(log_returns(prices({100, 100})).values[0] == 0.0);
    CHECK(log_returns(prices({1, std::numbers::e})).values[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(log_returns(prices({100, 110})).values[0] == doctest::Approx(std::log(1.1)).epsilon(1e-15));
}

TEST_CASE("price validation") {
    CHECK_THROWS_AS(log_returns(prices({100})), InvalidInput);
    CHECK_THROWS_AS(log_returns(prices({100, 0})), InvalidInput);
    CHECK_THROWS_AS(log_returns(prices({100, -1})), InvalidInput);
    PriceSeries p = prices({1, 2, 3});
    p.timestamps[2] = 1;
    CHECK_THROWS_AS(arithmetic_returns(p), InvalidInput);
}

TEST_CASE("proxies") {
    const auto r = returns({-0.2, 0.1});
    CHECK(make_proxy(r, ProxyKind::Abs, 1e-12).values == std::vector<double>{0.2, 0.1});
    const auto sq = make_proxy(r, ProxyKind::Squared, 1e-12).values;
    CHECK(sq[0] == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(sq[1] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(make_proxy(returns({0.0}), ProxyKind::Abs, 1e-6).values[0] == 1e-6);
    CHECK_THROWS_AS(make_proxy(r, ProxyKind::Abs, 0.0), InvalidInput);
    CHECK_THROWS_AS(make_proxy(r, ProxyKind::Positive, 1e-6), InvalidInput);
}

TEST_CASE("default floor") {
    const std::vector<double> r{0.0, -0.3, 0.1, 0.0};
    CHECK(default_floor(r) == 0.05);
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(default_floor(zeros) == 1e-12);
}

TEST_CASE("signed split") {
    auto s = split_signed(returns({0.3, -0.2, 0.1}), 1e-12);
    CHECK(s.positive.timestamps == std::vector<TimeIndex>{0, 2});
    CHECK(s.positive.values == std::vector<double>{0.3, 0.1});
    CHECK(s.negative.timestamps == std::vector<TimeIndex>{1});
    CHECK(s.negative.values == std::vector<double>{0.2});

    s = split_signed(returns({-1, -2}), 1e-12);
    CHECK(s.positive_empty);
    CHECK(s.negative.values == std::vector<double>{1, 2});

    s = split_signed(returns({0.0}), 1e-9);
    CHECK(s.positive.values == std::vector<double>{1e-9});
    CHECK(s.negative_empty);
}

TEST_CASE("envelope extraction") {
    auto e = extract_envelope(proxy({1, 3, 2, 5, 4}), EnvelopeSide::Maxima);
    CHECK(e.timestamps == std::vector<TimeIndex>{0, 1, 3, 4});
    CHECK(e.values == std::vector<double>{1, 3, 5, 4});

    e = extract_envelope(proxy({5, 1, 5}), EnvelopeSide::Minima);
    CHECK(e.values == std::vector<double>{5, 1, 5});

    e = extract_envelope(proxy({2, 2, 2, 2}), EnvelopeSide::Maxima);
    CHECK(e.size() == 4);

    CHECK_THROWS_AS(extract_envelope(proxy({1, 2}), EnvelopeSide::Maxima), InvalidInput);
    CHECK(extract_envelope(proxy({1, 2, 3}), EnvelopeSide::Maxima).kind == ProxyKind::AbsEnvelope);
}

TEST_CASE("envelope properties on random series") {
    testing::Gen g(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = g.integer(3, 60);
        std::vector<double> v;
        for (int i = 0; i < n; ++i) v.push_back(std::exp(g.normal()));
        const auto s = proxy(v);
        const auto mx = extract_envelope(s, EnvelopeSide::Maxima);
        const auto mn = extract_envelope(s, EnvelopeSide::Minima);
        // Subsequence with endpoints, ordered, each interior point dominating its raw neighbours.
        CHECK(mx.timestamps.front() == 0);
        CHECK(mx.timestamps.back() == n - 1);
        for (std::size_t k = 0; k < mx.size(); ++k) {
            const auto i = static_cast<std::size_t>(mx.timestamps[k]);
            CHECK(mx.values[k] == v[i]);
            if (k > 0) CHECK(mx.timestamps[k] > mx.timestamps[k - 1]);
            if (i > 0 && i + 1 < v.size()) CHECK((v[i] >= v[i - 1] && v[i] >= v[i + 1]));
        }
        for (std::size_t k = 0; k < mn.size(); ++k) {
            const auto i = static_cast<std::size_t>(mn.timestamps[k]);
            if (i > 0 && i + 1 < v.size()) CHECK((v[i] <= v[i - 1] && v[i] <= v[i + 1]));
        }
    }
}

TEST_CASE("log space") {
    CHECK(to_log_space(proxy({1.0}))[0].y == 0.0);
    CHECK(to_log_space(proxy({std::exp(2.0)}))[0].y == doctest::Approx(2.0).epsilon(1e-15));
    const auto o = to_log_space(proxy({0.5, 2.0}));
    CHECK(o[0].y == doctest::Approx(-0.6931471805599453).epsilon(1e-14));
    CHECK(o[1].y == doctest::Approx(0.6931471805599453).epsilon(1e-14));
    CHECK(o[1].t == 1.0);
}
