#pragma once

#include "gpvol/returns.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gpvol {

/// Two columns, `timestamp,price`. Timestamps are integers or ISO-8601 dates/datetimes
/// (UTC, converted to epoch seconds). An optional header line, CRLF line ends and a
/// UTF-8 byte-order mark are accepted. Rows are never reordered.
PriceSeries parse_csv(std::istream& in);
PriceSeries ingest_csv(const std::filesystem::path& path);

/// Epoch seconds for "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS][Z]" (space also accepted as separator).
/// Throws InvalidInput on malformed text.
TimeIndex parse_iso8601(std::string_view text);

struct Segment {
    PriceSeries prices;
    std::size_t offset = 0;  // index of the first price in the source series
    bool partial = false;
};

/// Consecutive non-overlapping segments; the trailing remainder is kept and flagged partial.
std::vector<Segment> split_quarters(const PriceSeries& p, std::size_t segment = 3140);

/// Writes timestamp,price rows with full precision.
void write_prices_csv(std::ostream& out, const PriceSeries& p);

/// RFC-4180 field quoting.
std::string csv_field(std::string_view s);
/// printf %.{digits}g, with "nan"/"inf" spelled out.
std::string format_number(double v, int digits);

} // namespace gpvol
