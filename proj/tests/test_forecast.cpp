#include "doctest.h"

#include "gpvol/error.hpp"
#include "gpvol/forecast.hpp"
#include "gpvol/synth.hpp"
#include "support.hpp"

#include <cmath>

using namespace gpvol;

namespace {

ReturnSeries sinvol_series(std::size_t n, std::uint64_t seed) {
    SynthSpec s;
    s.n = n;
    s.seed = seed;
    return generate(s);
}

std::vector<Observation> log_abs(const ReturnSeries& r, std::size_t n) {
    std::vector<Observation> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<double>(i), std::log(std::abs(r.values[i]))});
    return out;
}

} // namespace

TEST_CASE("back transform") {
    auto iv = back_transform(Posterior{.mean = 0.0, .variance = 0.0}, 1.96);
    CHECK(iv.point == 1.0);
    CHECK(iv.low == 1.0);
    CHECK(iv.up == 1.0);
    iv = back_transform(Posterior{.mean = 0.0, .variance = 1.0}, 1.96);
    CHECK(iv.low == doctest::Approx(0.1408584209).epsilon(1e-9));
    CHECK(iv.up == doctest::Approx(7.0993270652).epsilon(1e-9));
    testing::Gen g(2);
    for (int i = 0; i < 100; ++i) {
        const Posterior p{.mean = g.uniform(-5, 2), .variance = g.uniform(1e-4, 3)};
        const auto b = back_transform(p, g.uniform(0.5, 3));
        CHECK(b.up - b.point > b.point - b.low);
        CHECK(b.low < b.point);
    }
}

TEST_CASE("combining envelopes") {
    CHECK(combine_envelopes(0.4, 0.4).value == 0.4);
    const auto c = combine_envelopes(0.2, 0.4);
    CHECK(c.value == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_FALSE(c.fallback);
    const auto one = combine_envelopes(std::nullopt, 0.7);
    CHECK(one.value == 0.7);
    CHECK(one.fallback);
    CHECK_THROWS_AS(combine_envelopes(std::nullopt, std::nullopt), InvalidInput);
    CHECK_THROWS_AS(combine_envelopes(-1.0, 0.5), InvalidInput);
}

TEST_CASE("strategy names") {
    for (auto tag : {StrategyTag::GpAbs, StrategyTag::GpSquared, StrategyTag::GpAbsEnvelope,
                     StrategyTag::GpCombinedEnvelope, StrategyTag::Garch, StrategyTag::EGarch, StrategyTag::GjrGarch})
        CHECK(parse_strategy_tag(to_string(tag)) == tag);
    CHECK_THROWS_AS(parse_strategy_tag("arima"), InvalidInput);
    CHECK(Strategy::gp(StrategyTag::GpAbs, KernelFamily::Matern32, true).label() == "gp-abs/matern32+update");
    CHECK(Strategy::garch(StrategyTag::Garch).label() == "garch/abs");
    CHECK(Strategy::gp(StrategyTag::GpSquared, KernelFamily::Matern32).proxy() == ProxyKind::Squared);
}

TEST_CASE("causal envelope window equals the tail of the batch envelope") {
    const auto r = sinvol_series(400, 3);
    const auto src = log_abs(r, 400);
    RollingGp::Options o;
    o.envelope = true;
    o.window = 30;
    o.simplex.restarts = 2;
    RollingGp gp(o);
    gp.train(std::span<const Observation>(src).first(100));
    for (std::size_t t = 100; t < src.size(); ++t) {
        gp.observe(src[t]);
        ProxySeries prefix;
        for (std::size_t i = 0; i <= t; ++i) {
            prefix.timestamps.push_back(static_cast<TimeIndex>(i));
            prefix.values.push_back(std::abs(r.values[i]));
        }
        const auto env = extract_envelope(prefix, EnvelopeSide::Maxima);
        std::vector<double> tail;
        for (std::size_t k = env.size() - std::min<std::size_t>(30, env.size()); k < env.size(); ++k)
            tail.push_back(static_cast<double>(env.timestamps[k]));
        REQUIRE(gp.state().times() == tail);
    }
}

TEST_CASE("rolling GP factor stays consistent and reverts far ahead") {
    const auto r = sinvol_series(600, 5);
    const auto src = log_abs(r, 600);
    RollingGp::Options o;
    o.simplex.restarts = 4;
    RollingGp gp(o);
    gp.train(std::span<const Observation>(src).first(100));
    for (std::size_t t = 100; t < src.size(); ++t) gp.observe(src[t]);
    const auto fresh = CholeskyState::build(gp.hyper().spec, [&] {
        std::vector<Observation> w(src.end() - 100, src.end());
        return w;
    }());
    CHECK(testing::max_abs_diff(gp.state().factor(), fresh.factor()) <= 1e-8);
    const auto far = envelope_forecast_step(gp, 1e7);
    CHECK(far.mean == doctest::Approx(gp.state().window_mean()).epsilon(1e-9));
    CHECK(far.variance == doctest::Approx(noisy_variance(gp.hyper().spec)).epsilon(1e-9));
}

TEST_CASE("constant proxy is forecast exactly") {
    ReturnSeries r;
    for (int i = 0; i < 200; ++i) {
        r.timestamps.push_back(i + 1);
        r.values.push_back(i % 3 == 0 ? -0.002 : 0.002);
    }
    const auto rep = run_backtest(r, Strategy::gp(StrategyTag::GpAbs, KernelFamily::Matern32), RollingConfig{});
    REQUIRE(rep.records.size() == 100);
    for (const auto& rec : rep.records) CHECK(std::abs(rec.forecast / 0.002 - 1.0) < 0.05);
}

TEST_CASE("forecasts never see the value they forecast") {
    const auto base = sinvol_series(180, 8);
    RollingConfig cfg;
    cfg.simplex.restarts = 3;
    cfg.floor = 1e-9;
    const std::vector<Strategy> strategies{
        Strategy::gp(StrategyTag::GpAbs, KernelFamily::Matern32),
        Strategy::gp(StrategyTag::GpAbsEnvelope, KernelFamily::SquaredExponential),
        Strategy::gp(StrategyTag::GpCombinedEnvelope, KernelFamily::Matern32, true),
        Strategy::garch(StrategyTag::Garch),
        Strategy::garch(StrategyTag::GjrGarch, ProxyKind::Squared),
    };
    for (const auto& s : strategies) {
        CAPTURE(s.label());
        const auto a = run_backtest(base, s, cfg);
        for (std::size_t t : {std::size_t{120}, std::size_t{150}}) {
            auto moved = base;
            moved.values[t] = -5.0 * moved.values[t] + 0.01;
            const auto b = run_backtest(moved, s, cfg);
            for (std::size_t k = 0; k + cfg.training <= t; ++k) CHECK(a.records[k].forecast == b.records[k].forecast);
            CHECK(a.records[t - cfg.training + 1].forecast != b.records[t - cfg.training + 1].forecast);
        }
    }
}

TEST_CASE("combined envelope is the mean of its sides") {
    const auto r = sinvol_series(600, 2);
    const auto rep = run_backtest(r, Strategy::gp(StrategyTag::GpCombinedEnvelope, KernelFamily::Matern32),
                                  RollingConfig{});
    for (const auto& rec : rep.records) {
        REQUIRE(rec.pos > 0.0);
        REQUIRE(rec.neg > 0.0);
        CHECK(rec.forecast == 0.5 * (rec.pos + rec.neg));
        CHECK(rec.low < rec.forecast);
        CHECK(rec.up > rec.forecast);
    }
}

TEST_CASE("one-sided training falls back to the surviving side") {
    auto r = sinvol_series(300, 6);
    for (std::size_t i = 0; i < 100; ++i) r.values[i] = std::abs(r.values[i]);
    const auto rep = run_backtest(r, Strategy::gp(StrategyTag::GpCombinedEnvelope, KernelFamily::Matern32),
                                  RollingConfig{});
    CHECK(rep.flagged == rep.records.size());
    for (const auto& rec : rep.records) CHECK(rec.neg == 0.0);
}

TEST_CASE("GP forecaster beats the no-change model on sinusoidal volatility") {
    const auto r = sinvol_series(3140, 1);
    const auto rep = run_backtest(r, Strategy::gp(StrategyTag::GpAbs, KernelFamily::Matern32), RollingConfig{});
    REQUIRE(rep.metrics.mdrae);
    CHECK(*rep.metrics.mdrae < 1.0);
    CHECK(*rep.no_change.mdrae == 1.0);
    CHECK(rep.metrics.smape < rep.no_change.smape);
}

TEST_CASE("envelope forecasts follow the volatility cycle") {
    const auto r = sinvol_series(3140, 4);
    const SinVol sv;
    const auto rep = run_backtest(r, Strategy::gp(StrategyTag::GpCombinedEnvelope, KernelFamily::Matern32, false),
                                  RollingConfig{});
    // Phase-binned forecast profile against the true sigma profile, both normalised by their means.
    constexpr int bins = 4;
    std::vector<double> f(bins, 0.0), s(bins, 0.0);
    std::vector<int> c(bins, 0);
    for (const auto& rec : rep.records) {
        const double phase = std::fmod(static_cast<double>(rec.time), sv.period) / sv.period;
        const int b = std::min(bins - 1, static_cast<int>(phase * bins));
        f[b] += rec.forecast;
        s[b] += sv.sigma(static_cast<double>(rec.time));
        ++c[b];
    }
    double fm = 0.0, sm = 0.0;
    for (int b = 0; b < bins; ++b) {
        f[b] /= c[b];
        s[b] /= c[b];
        fm += f[b] / bins;
        sm += s[b] / bins;
    }
    const int peak = static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
    CHECK(peak == static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()));
    CHECK(std::abs((f[peak] / fm) / (s[peak] / sm) - 1.0) < 0.15);
}

TEST_CASE("GARCH intervals bracket the forecast") {
    const auto r = sinvol_series(400, 9);
    for (auto target : {ProxyKind::Abs, ProxyKind::Squared}) {
        const auto rep = run_backtest(r, Strategy::garch(StrategyTag::Garch, target), RollingConfig{});
        REQUIRE(rep.garch_params);
        for (const auto& rec : rep.records) {
            CHECK(rec.low < rec.forecast);
            CHECK(rec.up > rec.forecast);
            CHECK(rec.forecast > 0.0);
        }
    }
}

TEST_CASE("backtest input validation") {
    const auto r = sinvol_series(101, 1);
    CHECK_THROWS_AS(run_backtest(r, Strategy::gp(StrategyTag::GpAbs, KernelFamily::Matern32), RollingConfig{}),
                    InvalidInput);
    RollingConfig bad;
    bad.window = 4;
    CHECK_THROWS_AS(run_backtest(sinvol_series(300, 1), Strategy::garch(StrategyTag::Garch), bad), InvalidInput);
}
