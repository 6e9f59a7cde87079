#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace needcast {

/// Strongly typed string identifier. The tag keeps activity, need, venue and
/// user ids from being mixed up at compile time.
template <typename Tag>
struct Id {
    std::string value;

    Id() = default;
    explicit Id(std::string v) : value(std::move(v)) {}
    explicit Id(const char* v) : value(v) {}

    [[nodiscard]] const std::string& str() const noexcept { return value; }
    [[nodiscard]] bool empty() const noexcept { return value.empty(); }

    friend auto operator<=>(const Id&, const Id&) = default;
    friend bool operator==(const Id&, const Id&) = default;
    friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value; }
};

using ActivityId = Id<struct ActivityTag>;
using NeedId = Id<struct NeedTag>;
using VenueId = Id<struct VenueTag>;
using UserId = Id<struct UserTag>;

using Timestamp = std::chrono::sys_seconds;

/// Sparse probability distribution keyed by id. Absent keys have mass 0.
template <typename Key>
using Distribution = std::map<Key, double>;

/// Input data violates a file contract (schema, reference, domain rule).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;

    DataError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

/// Caller passed arguments outside an operation's domain.
class UsageError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Warnings go through a replaceable sink so tests and the CLI can capture them.
inline std::function<void(std::string_view)>& warning_sink() {
    static std::function<void(std::string_view)> sink = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}

inline void warn(std::string_view msg) {
    if (auto& sink = warning_sink()) {
        sink(msg);
    }
}

namespace text {

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

/// Lowercase and collapse runs of whitespace into single spaces.
inline std::string normalize_ws(std::string_view s) { return join(split_ws(to_lower(s))); }

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::int64_t parse_int(std::string_view s, const std::string& file, std::size_t line,
                              std::string_view field) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(std::string(s), &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size()) {
        throw DataError(file, line, "invalid integer in field '" + std::string(field) + "': '" +
                                        std::string(s) + "'");
    }
    return v;
}

}  // namespace text

/// Parses `YYYY-MM-DDTHH:MM:SS` followed by `Z` or `+00:00` (UTC only).
inline std::optional<Timestamp> parse_iso8601(std::string_view s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    int consumed = 0;
    std::string buf(s);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec,
                    &consumed) != 6 ||
        consumed != 19) {
        return std::nullopt;
    }
    std::string_view rest = s.substr(19);
    if (rest != "Z" && rest != "+00:00" && !rest.empty()) return std::nullopt;
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_iso8601(Timestamp t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss tod{t - day_point};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                  static_cast<long>(tod.seconds().count()));
    return buf;
}

/// Line-oriented reader for the tab-separated formats. Fields are never quoted;
/// a row with the wrong arity is rejected with its line number.
class TsvReader {
  public:
    explicit TsvReader(std::string path) : m_path(std::move(path)), m_in(m_path) {
        if (!m_in) throw DataError("cannot open file: " + m_path);
    }

    /// Returns false at end of file. Blank lines and lines starting with '#' are skipped.
    bool next(std::vector<std::string>& fields, std::size_t arity) {
        std::string line;
        while (std::getline(m_in, line)) {
            ++m_line;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            fields.clear();
            std::size_t start = 0;
            for (;;) {
                auto tab = line.find('\t', start);
                fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
                if (tab == std::string::npos) break;
                start = tab + 1;
            }
            if (fields.size() != arity) {
                fail("expected " + std::to_string(arity) + " fields, found " +
                     std::to_string(fields.size()));
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const { throw DataError(m_path, m_line, what); }

    [[nodiscard]] const std::string& path() const noexcept { return m_path; }
    [[nodiscard]] std::size_t line() const noexcept { return m_line; }

  private:
    std::string m_path;
    std::ifstream m_in;
    std::size_t m_line = 0;
};

/// Writes one TSV row, rejecting fields that would break the format.
inline void write_tsv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].find_first_of("\t\n\r") != std::string::npos) {
            throw DataError("field contains tab or newline: '" + fields[i] + "'");
        }
        if (i) os << '\t';
        os << fields[i];
    }
    os << '\n';
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    return out;
}

/// Keys of a distribution ordered by descending mass, ties by key ascending.
template <typename Key>
std::vector<std::pair<Key, double>> sorted_by_mass(const Distribution<Key>& dist) {
    std::vector<std::pair<Key, double>> out(dist.begin(), dist.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

template <typename Key>
double total_mass(const Distribution<Key>& dist) {
    double s = 0.0;
    for (const auto& [k, p] : dist) s += p;
    return s;
}

}  // namespace needcast

template <typename Tag>
struct std::hash<needcast::Id<Tag>> {
    std::size_t operator()(const needcast::Id<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};
