#include "gpvol/forecast.hpp"

#include "gpvol/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace gpvol {

std::string_view to_string(StrategyTag tag) {
    switch (tag) {
    case StrategyTag::GpAbs: return "gp-abs";
    case StrategyTag::GpSquared: return "gp-squared";
    case StrategyTag::GpAbsEnvelope: return "gp-abs-envelope";
    case StrategyTag::GpCombinedEnvelope: return "gp-combined-envelope";
    case StrategyTag::Garch: return "garch";
    case StrategyTag::EGarch: return "egarch";
    case StrategyTag::GjrGarch: return "gjr-garch";
    }
    return "unknown";
}

StrategyTag parse_strategy_tag(std::string_view name) {
    for (StrategyTag t : {StrategyTag::GpAbs, StrategyTag::GpSquared, StrategyTag::GpAbsEnvelope,
                          StrategyTag::GpCombinedEnvelope, StrategyTag::Garch, StrategyTag::EGarch,
                          StrategyTag::GjrGarch})
        if (name == to_string(t)) return t;
    throw InvalidInput("unknown strategy '" + std::string(name) + "'");
}

bool is_gp(StrategyTag tag) {
    return tag == StrategyTag::GpAbs || tag == StrategyTag::GpSquared || tag == StrategyTag::GpAbsEnvelope ||
           tag == StrategyTag::GpCombinedEnvelope;
}

Strategy Strategy::gp(StrategyTag tag, KernelFamily family, bool hyper_update) {
    Strategy s;
    s.tag = tag;
    s.kernel = family;
    s.hyper_update = hyper_update;
    s.target = tag == StrategyTag::GpSquared ? ProxyKind::Squared : ProxyKind::Abs;
    s.validate();
    return s;
}

Strategy Strategy::garch(StrategyTag tag, ProxyKind target) {
    Strategy s;
    s.tag = tag;
    s.kernel.reset();
    s.target = target;
    s.validate();
    return s;
}

void Strategy::validate() const {
    if (is_gp(tag) != kernel.has_value())
        throw InvalidInput("strategy: a kernel family is required for GP strategies and only for them");
    if (target != ProxyKind::Abs && target != ProxyKind::Squared)
        throw InvalidInput("strategy: target must be abs or squared");
    if (is_gp(tag) && (tag == StrategyTag::GpSquared) != (target == ProxyKind::Squared))
        throw InvalidInput("strategy: GP target is fixed by the tag");
}

ProxyKind Strategy::proxy() const { return target; }

std::string Strategy::label() const {
    std::string out(to_string(tag));
    if (kernel) {
        out += "/";
        out += to_string(*kernel);
        if (hyper_update) out += "+update";
    } else {
        out += target == ProxyKind::Squared ? "/squared" : "/abs";
    }
    return out;
}

void RollingConfig::validate() const {
    if (training < 8) throw InvalidInput("rolling config: training length must be at least 8");
    if (!(training <= window && window <= segment))
        throw InvalidInput("rolling config: need training <= window <= segment");
    if (!(z > 0.0)) throw InvalidInput("rolling config: interval multiplier must be positive");
    if (floor && !(*floor > 0.0)) throw InvalidInput("rolling config: floor must be positive");
    if (!(prior_stddev > 0.0)) throw InvalidInput("rolling config: prior stddev must be positive");
    simplex.validate();
    garch_simplex.validate();
}

Interval back_transform(const Posterior& post, double z) {
    const double sd = std::sqrt(std::max(post.variance, 0.0));
    return {std::exp(post.mean), std::exp(post.mean - z * sd), std::exp(post.mean + z * sd)};
}

Combined combine_envelopes(std::optional<double> pos, std::optional<double> neg) {
    if (!pos && !neg) throw InvalidInput("combine_envelopes: both sides absent");
    if ((pos && !(*pos > 0.0)) || (neg && !(*neg > 0.0)))
        throw InvalidInput("combine_envelopes: forecasts must be positive");
    if (pos && neg) return {0.5 * (*pos + *neg), false};
    return {pos ? *pos : *neg, true};
}

RollingGp::RollingGp(Options opts) : opts_(std::move(opts)) {
    if (opts_.window < 8) throw InvalidInput("rolling gp: window must hold at least 8 points");
    opts_.simplex.validate();
}

void RollingGp::train(std::span<const Observation> source) {
    std::vector<Observation> window;
    if (opts_.envelope) {
        if (source.size() < 3) throw InvalidInput("rolling gp: envelope needs at least 3 source points");
        for (std::size_t i = 0; i < source.size(); ++i) {
            const bool endpoint = i == 0 || i + 1 == source.size();
            if (endpoint || is_envelope_point(source[i - 1].y, source[i].y, source[i + 1].y, EnvelopeSide::Maxima))
                window.push_back(source[i]);
        }
        before_last_ = source[source.size() - 2];
        last_ = source.back();
    } else {
        window.assign(source.begin(), source.end());
    }
    if (window.size() > opts_.window)
        window.erase(window.begin(), window.end() - static_cast<std::ptrdiff_t>(opts_.window));
    if (window.size() < 8)
        throw InvalidInput("rolling gp: " + std::to_string(window.size()) +
                           " training points, at least 8 required");

    prior_ = opts_.prior ? *opts_.prior : HyperPrior::defaults_for(opts_.family, window, opts_.prior_stddev);
    hyper_ = map_estimate(window, opts_.family, prior_, opts_.simplex);
    state_ = CholeskyState::build(hyper_.spec, window);
}

Posterior RollingGp::predict(double x) const {
    const auto& ts = state_.times();
    const auto& ys = state_.values();
    if (!ys.empty() && std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); })) {
        Posterior p;
        p.mean = ys.front();
        p.variance = noisy_variance(state_.spec());
        p.interpolation = x <= ts.back();
        p.degenerate = true;
        return p;
    }
    return posterior_at(state_, x);
}

void RollingGp::slide() {
    while (state_.size() > opts_.window) state_.drop_oldest();
}

bool RollingGp::observe(const Observation& obs) {
    if (opts_.envelope) {
        // The previous newest point was kept only as an endpoint; it stays if it is a maximum.
        if (before_last_ && last_ && !state_.empty() && state_.times().back() == last_->t &&
            !is_envelope_point(before_last_->y, last_->y, obs.y, EnvelopeSide::Maxima))
            state_.drop_newest();
        before_last_ = last_;
        last_ = obs;
    }
    state_.append(obs);
    slide();
    if (!opts_.hyper_update) return true;

    std::vector<Observation> window;
    window.reserve(state_.size());
    for (std::size_t i = 0; i < state_.size(); ++i) window.push_back({state_.times()[i], state_.values()[i]});
    try {
        MapResult next = warm_update(hyper_, window, prior_, opts_.simplex);
        if (next.spec.log_params != hyper_.spec.log_params) state_ = CholeskyState::build(next.spec, window);
        hyper_ = std::move(next);
        return true;
    } catch (const Error&) {
        ++failures_;
        return false;
    }
}

Posterior envelope_forecast_step(const RollingGp& envelope_gp, double x_next) {
    return envelope_gp.predict(x_next);
}

double residual_calibration(const Strategy& strategy) {
    switch (strategy.tag) {
    case StrategyTag::GpAbs:
    case StrategyTag::GpSquared: return kAbsCalibration;
    default: return 1.0;
    }
}

namespace {

// Quantiles of |Z| bracketing the central mass 2 Phi(z) - 1.
std::pair<double, double> half_normal_band(double z) {
    const boost::math::normal normal;
    const double tail = 1.0 - boost::math::cdf(normal, z);  // one-sided tail of the z band
    return {boost::math::quantile(normal, 0.5 + 0.5 * tail), boost::math::quantile(normal, 1.0 - 0.5 * tail)};
}

struct Series {
    std::vector<double> realized;  // floored proxy on the scoring scale
    std::vector<Observation> log_proxy;
};

Series proxy_series(std::span<const double> r, ProxyKind kind, double floor) {
    Series s;
    s.realized.reserve(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double a = std::max(std::abs(r[i]), floor);
        const double v = kind == ProxyKind::Squared ? a * a : a;
        s.realized.push_back(v);
        s.log_proxy.push_back({static_cast<double>(i), std::log(v)});
    }
    return s;
}

void run_gp(const Strategy& st, const RollingConfig& cfg, std::span<const double> r, const Series& series,
            double floor, BacktestReport& rep) {
    const std::size_t T = cfg.training;
    RollingGp::Options base;
    base.family = *st.kernel;
    base.window = cfg.window;
    base.hyper_update = st.hyper_update;
    base.simplex = cfg.simplex;
    base.simplex.seed = cfg.seed;
    base.prior_stddev = cfg.prior_stddev;
    base.prior = cfg.prior;

    const auto src = std::span<const Observation>(series.log_proxy);
    if (st.tag != StrategyTag::GpCombinedEnvelope) {
        base.envelope = st.tag == StrategyTag::GpAbsEnvelope;
        RollingGp gp(base);
        gp.train(src.first(T));
        for (std::size_t t = T; t < r.size(); ++t) {
            const Posterior post = gp.predict(static_cast<double>(t));
            const Interval iv = back_transform(post, cfg.z);
            ForecastRecord rec;
            rec.forecast = iv.point;
            rec.low = iv.low;
            rec.up = iv.up;
            rec.log_mean = post.mean;
            rec.log_var = post.variance;
            rec.flagged = post.degenerate;
            rep.records.push_back(rec);
            if (!gp.observe(src[t])) rep.records.back().flagged = true;
        }
        rep.inference_failures = gp.failures();
        rep.final_hyper = gp.hyper();
        return;
    }

    // Signed sides: g+ = r (r >= 0), g- = -r (r < 0), each floored, each its own envelope GP.
    base.envelope = true;
    std::vector<Observation> pos_src, neg_src;
    for (std::size_t i = 0; i < T; ++i) {
        const Observation o{static_cast<double>(i), std::log(std::max(std::abs(r[i]), floor))};
        (r[i] >= 0.0 ? pos_src : neg_src).push_back(o);
    }
    std::optional<RollingGp> pos, neg;
    const auto try_train = [&](std::optional<RollingGp>& side, const std::vector<Observation>& s) {
        try {
            side.emplace(base);
            side->train(s);
        } catch (const InvalidInput&) {
            side.reset();
        }
    };
    try_train(pos, pos_src);
    try_train(neg, neg_src);
    if (!pos && !neg) throw InvalidInput("combined envelope: neither side has enough training points");

    for (std::size_t t = T; t < r.size(); ++t) {
        const double x = static_cast<double>(t);
        std::optional<Posterior> pp, pn;
        if (pos) pp = envelope_forecast_step(*pos, x);
        if (neg) pn = envelope_forecast_step(*neg, x);
        std::optional<Interval> ip, in;
        if (pp) ip = back_transform(*pp, cfg.z);
        if (pn) in = back_transform(*pn, cfg.z);
        const Combined c = combine_envelopes(ip ? std::optional(ip->point) : std::nullopt,
                                             in ? std::optional(in->point) : std::nullopt);
        ForecastRecord rec;
        rec.forecast = c.value;
        if (ip && in) {
            rec.low = 0.5 * (ip->low + in->low);
            rec.up = 0.5 * (ip->up + in->up);
            rec.log_var = 0.5 * (pp->variance + pn->variance);
        } else {
            const Interval& one = ip ? *ip : *in;
            rec.low = one.low;
            rec.up = one.up;
            rec.log_var = ip ? pp->variance : pn->variance;
        }
        rec.log_mean = std::log(c.value);
        rec.pos = ip ? ip->point : 0.0;
        rec.neg = in ? in->point : 0.0;
        rec.flagged = c.fallback || (pp && pp->degenerate) || (pn && pn->degenerate);
        rep.records.push_back(rec);

        const Observation o{x, std::log(std::max(std::abs(r[t]), floor))};
        auto& side = r[t] >= 0.0 ? pos : neg;
        if (side && !side->observe(o)) rep.records.back().flagged = true;
    }
    rep.inference_failures = (pos ? pos->failures() : 0) + (neg ? neg->failures() : 0);
    if (pos) rep.final_hyper = pos->hyper();
}

void run_garch(const Strategy& st, const RollingConfig& cfg, std::span<const double> r, BacktestReport& rep) {
    GarchSpec spec;
    spec.variant = st.tag == StrategyTag::EGarch ? GarchVariant::EGarch
                   : st.tag == StrategyTag::GjrGarch ? GarchVariant::Gjr
                                                     : GarchVariant::Vanilla;
    const std::size_t T = cfg.training;
    SimplexConfig sc = cfg.garch_simplex;
    sc.seed = cfg.seed;
    const auto train = r.first(T);
    GarchParams params = fit(spec, train, sc).params;
    GarchFilter f = filter(spec, params, train, sample_variance(train));
    GarchState state = f.state;
    double last = f.last_return;

    const auto [q_lo, q_hi] = half_normal_band(cfg.z);
    const bool squared = st.target == ProxyKind::Squared;
    for (std::size_t t = T; t < r.size(); ++t) {
        const double v = forecast_one_step(spec, params, state, last);
        const double sd = std::sqrt(v);
        ForecastRecord rec;
        rec.forecast = squared ? v : sd;
        rec.low = squared ? q_lo * q_lo * v : q_lo * sd;
        rec.up = squared ? q_hi * q_hi * v : q_hi * sd;
        rec.log_mean = std::log(rec.forecast);
        rep.records.push_back(rec);

        push(state, last, v);
        last = r[t];
        if (cfg.garch_refit) {
            const std::size_t lo = t + 1 >= cfg.window ? t + 1 - cfg.window : 0;
            const auto recent = r.subspan(lo, t + 1 - lo);
            if (recent.size() >= 50) {
                try {
                    params = refit(spec, recent, params, sc).params;
                    f = filter(spec, params, recent, sample_variance(recent));
                    state = f.state;
                    last = f.last_return;
                } catch (const FitFailed&) {
                    ++rep.inference_failures;
                    rep.records.back().flagged = true;
                }
            }
        }
    }
    rep.garch_params = params;
}

} // namespace

BacktestReport run_backtest(const ReturnSeries& returns, const Strategy& strategy, const RollingConfig& cfg) {
    strategy.validate();
    cfg.validate();
    const std::size_t T = cfg.training;
    const std::span<const double> r(returns.values);
    if (r.size() < T + 2)
        throw InvalidInput("run_backtest: need at least training + 2 returns, got " + std::to_string(r.size()));

    BacktestReport rep;
    rep.strategy = strategy;
    rep.floor = cfg.floor ? *cfg.floor : default_floor(r.first(T));
    const Series series = proxy_series(r, strategy.proxy(), rep.floor);

    if (is_gp(strategy.tag))
        run_gp(strategy, cfg, r, series, rep.floor, rep);
    else
        run_garch(strategy, cfg, r, rep);

    std::vector<double> realized, h, no_change, ret, h_vol;
    for (std::size_t k = 0; k < rep.records.size(); ++k) {
        const std::size_t t = T + k;
        ForecastRecord& rec = rep.records[k];
        rec.time = returns.timestamps[t];
        rec.realized = series.realized[t];
        rec.ret = r[t];
        if (rec.flagged) ++rep.flagged;
        realized.push_back(rec.realized);
        h.push_back(rec.forecast);
        no_change.push_back(series.realized[t - 1]);
        ret.push_back(rec.ret);
        h_vol.push_back(strategy.proxy() == ProxyKind::Squared ? std::sqrt(rec.forecast) : rec.forecast);
    }
    rep.metrics = compute_suite(realized, h, series.realized[T - 1]);
    rep.no_change = compute_suite(realized, no_change, series.realized[T - 1]);
    rep.residuals = residual_stats(ret, h_vol, residual_calibration(strategy));
    return rep;
}

BacktestReport run_backtest(const PriceSeries& prices, const Strategy& strategy, const RollingConfig& cfg) {
    prices.validate();
    return run_backtest(log_returns(prices), strategy, cfg);
}

} // namespace gpvol
