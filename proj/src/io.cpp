#include "gpvol/io.hpp"

#include "gpvol/error.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace gpvol {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

template <typename T>
bool parse_exact(std::string_view s, T& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_timestamp(std::string_view s, TimeIndex& out) {
    if (parse_exact(s, out)) return true;
    try {
        out = parse_iso8601(s);
        return true;
    } catch (const InvalidInput&) {
        return false;
    }
}

} // namespace

TimeIndex parse_iso8601(std::string_view text) {
    const auto bad = [&] { return InvalidInput("not an ISO-8601 timestamp: '" + std::string(text) + "'"); };
    const auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        if (pos + len > text.size() || !parse_exact(text.substr(pos, len), v)) throw bad();
        return v;
    };
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw bad();
    const int y = num(0, 4), mo = num(5, 2), d = num(8, 2);
    int hh = 0, mm = 0, ss = 0;
    std::string_view rest = text.substr(10);
    if (!rest.empty()) {
        if ((rest[0] != 'T' && rest[0] != ' ') || rest.size() < 6 || rest[3] != ':') throw bad();
        hh = num(11, 2);
        mm = num(14, 2);
        rest = text.substr(16);
        if (!rest.empty() && rest[0] == ':') {
            ss = num(17, 2);
            rest = text.substr(19);
        }
        if (rest == "Z") rest = {};
        if (!rest.empty()) throw bad();
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) throw bad();
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<TimeIndex>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

PriceSeries parse_csv(std::istream& in) {
    PriceSeries p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        if (trim(view).empty()) continue;
        const auto comma = view.find(',');
        if (comma == std::string_view::npos) throw ParseError(line_no, "expected two comma-separated columns");
        const std::string_view ts_text = trim(view.substr(0, comma));
        const std::string_view price_text = trim(view.substr(comma + 1));
        if (price_text.find(',') != std::string_view::npos) throw ParseError(line_no, "more than two columns");

        TimeIndex ts = 0;
        double price = 0.0;
        const bool ts_ok = parse_timestamp(ts_text, ts);
        const bool price_ok = parse_exact(price_text, price);
        if (!ts_ok || !price_ok) {
            if (p.prices.empty() && !ts_ok && !price_ok) continue;  // header
            throw ParseError(line_no, !ts_ok ? "malformed timestamp '" + std::string(ts_text) + "'"
                                             : "malformed price '" + std::string(price_text) + "'");
        }
        if (!(price > 0.0) || !std::isfinite(price))
            throw ParseError(line_no, "price must be positive, got '" + std::string(price_text) + "'");
        if (!p.timestamps.empty() && !(ts > p.timestamps.back()))
            throw ParseError(line_no, "timestamps must be strictly increasing");
        p.timestamps.push_back(ts);
        p.prices.push_back(price);
    }
    if (p.prices.empty()) throw InvalidInput("no price rows found");
    if (p.prices.size() < 2) throw InvalidInput("need at least 2 price rows");
    return p;
}

PriceSeries ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    return parse_csv(in);
}

std::vector<Segment> split_quarters(const PriceSeries& p, std::size_t segment) {
    if (segment < 2) throw InvalidInput("split_quarters: segment length must be at least 2");
    std::vector<Segment> out;
    for (std::size_t start = 0; start < p.size(); start += segment) {
        const std::size_t end = std::min(p.size(), start + segment);
        Segment s;
        s.offset = start;
        s.partial = end - start < segment;
        s.prices.timestamps.assign(p.timestamps.begin() + static_cast<std::ptrdiff_t>(start),
                                   p.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
        s.prices.prices.assign(p.prices.begin() + static_cast<std::ptrdiff_t>(start),
                               p.prices.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_number(double v, int digits) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_prices_csv(std::ostream& out, const PriceSeries& p) {
    out << "timestamp,price\r\n";
    for (std::size_t i = 0; i < p.size(); ++i) out << p.timestamps[i] << ',' << format_number(p.prices[i], 17) << "\r\n";
}

} // namespace gpvol
