#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gpvol {

using TimeIndex = std::int64_t;

struct PriceSeries {
    std::vector<TimeIndex> timestamps;
    std::vector<double> prices;

    std::size_t size() const { return prices.size(); }
    /// Throws InvalidInput unless prices > 0, timestamps strictly increasing, length >= 2.
    void validate() const;
};

struct ReturnSeries {
    std::vector<TimeIndex> timestamps;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

enum class ProxyKind {
    Abs,
    Squared,
    Positive,
    Negative,
    AbsEnvelope,
    SquaredEnvelope,
    PosEnvelope,
    NegEnvelope,
};

std::string_view to_string(ProxyKind kind);

/// Strictly positive volatility proxy. Timestamps are a subset of the source returns.
struct ProxySeries {
    std::vector<TimeIndex> timestamps;
    std::vector<double> values;
    ProxyKind kind = ProxyKind::Abs;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
};

struct SignedSplit {
    ProxySeries positive;  // g+ : r_t where r_t >= 0
    ProxySeries negative;  // g- : -r_t where r_t < 0
    bool positive_empty = false;
    bool negative_empty = false;
};

enum class EnvelopeSide { Maxima, Minima };

/// (time, log-proxy) pair consumed by the GP layer.
struct Observation {
    double t;
    double y;
};

ReturnSeries arithmetic_returns(const PriceSeries& p);
ReturnSeries log_returns(const PriceSeries& p);

/// Half the smallest non-zero |r|, or 1e-12 when every return is zero.
double default_floor(std::span<const double> returns);

/// kind must be Abs or Squared. Squared values are floored at floor^2.
ProxySeries make_proxy(const ReturnSeries& r, ProxyKind kind, double floor);

SignedSplit split_signed(const ReturnSeries& r, double floor);

/// Local maxima (or minima) with non-strict comparisons; both endpoints always kept.
ProxySeries extract_envelope(const ProxySeries& s, EnvelopeSide which);

/// Membership test for interior point i of an envelope. Endpoints are handled by the caller.
bool is_envelope_point(double prev, double value, double next, EnvelopeSide which);

ProxyKind envelope_kind(ProxyKind source);

std::vector<Observation> to_log_space(const ProxySeries& s);

} // namespace gpvol
