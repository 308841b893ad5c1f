#include "gpvol/returns.hpp"

#include "gpvol/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gpvol {

void PriceSeries::validate() const {
    if (prices.size() != timestamps.size())
        throw InvalidInput("price series: timestamps and prices differ in length");
    if (prices.size() < 2)
        throw InvalidInput("price series: need at least 2 points, got " + std::to_string(prices.size()));
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw InvalidInput("price series: non-positive price at index " + std::to_string(i));
        if (i > 0 && timestamps[i] <= timestamps[i - 1])
            throw InvalidInput("price series: timestamps not strictly increasing at index " + std::to_string(i));
    }
}

std::string_view to_string(ProxyKind kind) {
    switch (kind) {
    case ProxyKind::Abs: return "abs";
    case ProxyKind::Squared: return "squared";
    case ProxyKind::Positive: return "positive";
    case ProxyKind::Negative: return "negative";
    case ProxyKind::AbsEnvelope: return "abs-envelope";
    case ProxyKind::SquaredEnvelope: return "squared-envelope";
    case ProxyKind::PosEnvelope: return "pos-envelope";
    case ProxyKind::NegEnvelope: return "neg-envelope";
    }
    return "unknown";
}

namespace {

ReturnSeries returns_with(const PriceSeries& p, double (*f)(double, double)) {
    p.validate();
    ReturnSeries r;
    r.timestamps.reserve(p.size() - 1);
    r.values.reserve(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) {
        r.timestamps.push_back(p.timestamps[i]);
        r.values.push_back(f(p.prices[i - 1], p.prices[i]));
    }
    return r;
}

void check_floor(double floor) {
    if (!(floor > 0.0) || !std::isfinite(floor))
        throw InvalidInput("proxy floor must be a positive finite number");
}

} // namespace

ReturnSeries arithmetic_returns(const PriceSeries& p) {
    return returns_with(p, [](double prev, double cur) { return (cur - prev) / prev; });
}

ReturnSeries log_returns(const PriceSeries& p) {
    return returns_with(p, [](double prev, double cur) { return std::log(cur) - std::log(prev); });
}

double default_floor(std::span<const double> returns) {
    double smallest = std::numeric_limits<double>::infinity();
    for (double r : returns) {
        const double a = std::abs(r);
        if (a > 0.0 && a < smallest) smallest = a;
    }
    return std::isfinite(smallest) ? 0.5 * smallest : 1e-12;
}

ProxySeries make_proxy(const ReturnSeries& r, ProxyKind kind, double floor) {
    check_floor(floor);
    if (kind != ProxyKind::Abs && kind != ProxyKind::Squared)
        throw InvalidInput("make_proxy: kind must be abs or squared");
    ProxySeries s;
    s.kind = kind;
    s.timestamps = r.timestamps;
    s.values.reserve(r.size());
    for (double v : r.values) {
        s.values.push_back(kind == ProxyKind::Abs ? std::max(std::abs(v), floor)
                                                  : std::max(v * v, floor * floor));
    }
    return s;
}

SignedSplit split_signed(const ReturnSeries& r, double floor) {
    check_floor(floor);
    SignedSplit out;
    out.positive.kind = ProxyKind::Positive;
    out.negative.kind = ProxyKind::Negative;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = r.values[i];
        ProxySeries& side = v >= 0.0 ? out.positive : out.negative;
        side.timestamps.push_back(r.timestamps[i]);
        side.values.push_back(std::max(std::abs(v), floor));
    }
    out.positive_empty = out.positive.empty();
    out.negative_empty = out.negative.empty();
    return out;
}

bool is_envelope_point(double prev, double value, double next, EnvelopeSide which) {
    return which == EnvelopeSide::Maxima ? (value >= prev && value >= next)
                                         : (value <= prev && value <= next);
}

ProxyKind envelope_kind(ProxyKind source) {
    switch (source) {
    case ProxyKind::Abs: return ProxyKind::AbsEnvelope;
    case ProxyKind::Squared: return ProxyKind::SquaredEnvelope;
    case ProxyKind::Positive: return ProxyKind::PosEnvelope;
    case ProxyKind::Negative: return ProxyKind::NegEnvelope;
    default: return source;
    }
}

ProxySeries extract_envelope(const ProxySeries& s, EnvelopeSide which) {
    const std::size_t n = s.size();
    if (n < 3) throw InvalidInput("extract_envelope: need at least 3 points, got " + std::to_string(n));
    ProxySeries out;
    out.kind = envelope_kind(s.kind);
    for (std::size_t i = 0; i < n; ++i) {
        const bool endpoint = i == 0 || i + 1 == n;
        if (endpoint || is_envelope_point(s.values[i - 1], s.values[i], s.values[i + 1], which)) {
            out.timestamps.push_back(s.timestamps[i]);
            out.values.push_back(s.values[i]);
        }
    }
    return out;
}

std::vector<Observation> to_log_space(const ProxySeries& s) {
    std::vector<Observation> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s.values[i] > 0.0))
            throw NumericalError("to_log_space: non-positive proxy value at index " + std::to_string(i) +
                                 " (floor not applied)");
        out.push_back({static_cast<double>(s.timestamps[i]), std::log(s.values[i])});
    }
    return out;
}

} // namespace gpvol
