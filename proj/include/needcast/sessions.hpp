#pragma once

#include <json.hpp>

#include "taxonomy.hpp"

namespace needcast {

struct SessionEvent {
    Timestamp timestamp;
    VenueId venue;
    ActivityId activity;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// A user's gap-bounded run of check-ins. Events are non-empty and ordered by
/// (timestamp, venue).
struct Session {
    UserId user;
    std::vector<SessionEvent> events;

    [[nodiscard]] Timestamp start() const { return events.front().timestamp; }

    friend bool operator==(const Session&, const Session&) = default;
};

inline bool chronological(const CheckIn& a, const CheckIn& b) {
    return std::tie(a.timestamp, a.user, a.venue) < std::tie(b.timestamp, b.user, b.venue);
}

struct DedupResult {
    CheckInLog log;
    std::size_t removed = 0;

    [[nodiscard]] double removed_fraction(std::size_t input_size) const {
        return input_size == 0 ? 0.0 : static_cast<double>(removed) / static_cast<double>(input_size);
    }
};

/// Removes repeated check-ins of one user at one venue: a check-in within
/// `window` (inclusive) of the last kept one for the same (user, venue) is dropped.
inline DedupResult dedup_checkins(CheckInLog log, std::chrono::seconds window) {
    if (window <= std::chrono::seconds::zero()) throw UsageError("dedup window must be positive");
    std::stable_sort(log.begin(), log.end(), chronological);
    std::map<std::pair<UserId, VenueId>, Timestamp> last_kept;
    DedupResult out;
    out.log.reserve(log.size());
    for (auto& c : log) {
        auto key = std::make_pair(c.user, c.venue);
        auto it = last_kept.find(key);
        if (it != last_kept.end() && c.timestamp - it->second <= window) {
            ++out.removed;
            continue;
        }
        last_kept[key] = c.timestamp;
        out.log.push_back(std::move(c));
    }
    return out;
}

/// Splits each user's chronological check-ins into sessions. A gap strictly
/// greater than `max_gap` starts a new session. Check-ins at venues missing
/// from the table are skipped.
inline std::vector<Session> extract_sessions(CheckInLog log, const VenueTable& venues,
                                             std::chrono::seconds max_gap) {
    if (max_gap <= std::chrono::seconds::zero()) throw UsageError("max_gap must be positive");
    std::stable_sort(log.begin(), log.end(), [](const CheckIn& a, const CheckIn& b) {
        return std::tie(a.user, a.timestamp, a.venue) < std::tie(b.user, b.timestamp, b.venue);
    });
    std::vector<Session> sessions;
    for (const auto& c : log) {
        auto v = venues.find(c.venue);
        if (v == venues.end()) continue;
        SessionEvent ev{c.timestamp, c.venue, v->second.activity};
        bool extend = !sessions.empty() && sessions.back().user == c.user &&
                      c.timestamp - sessions.back().events.back().timestamp <= max_gap;
        if (extend) {
            sessions.back().events.push_back(std::move(ev));
        } else {
            sessions.push_back({c.user, {std::move(ev)}});
        }
    }
    std::stable_sort(sessions.begin(), sessions.end(), [](const Session& a, const Session& b) {
        return std::tie(a.user, a.events.front().timestamp) < std::tie(b.user, b.events.front().timestamp);
    });
    return sessions;
}

struct SessionSplit {
    std::vector<Session> train;
    std::vector<Session> test;
};

/// Chronological split with whole sessions: the first ceil(fraction * N)
/// sessions by start time go to training.
inline SessionSplit chronological_split(std::vector<Session> sessions, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train_fraction must lie in (0, 1)");
    }
    if (sessions.size() < 2) throw DataError("cannot split fewer than 2 sessions");
    std::stable_sort(sessions.begin(), sessions.end(), [](const Session& a, const Session& b) {
        return std::tie(a.events.front().timestamp, a.user, a.events.front().venue) <
               std::tie(b.events.front().timestamp, b.user, b.events.front().venue);
    });
    auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(sessions.size()) - 1e-9));
    SessionSplit out;
    out.train.assign(std::make_move_iterator(sessions.begin()),
                     std::make_move_iterator(sessions.begin() + static_cast<std::ptrdiff_t>(n_train)));
    out.test.assign(std::make_move_iterator(sessions.begin() + static_cast<std::ptrdiff_t>(n_train)),
                    std::make_move_iterator(sessions.end()));
    return out;
}

inline nlohmann::ordered_json session_to_json(const Session& s) {
    nlohmann::ordered_json j;
    j["user"] = s.user.str();
    j["start"] = format_iso8601(s.start());
    auto& events = j["events"] = nlohmann::ordered_json::array();
    for (const auto& e : s.events) {
        events.push_back({{"ts", format_iso8601(e.timestamp)},
                          {"venue", e.venue.str()},
                          {"category", e.activity.str()}});
    }
    return j;
}

inline void write_sessions(std::ostream& os, const std::vector<Session>& sessions) {
    for (const auto& s : sessions) os << session_to_json(s).dump() << '\n';
}

inline std::vector<Session> load_sessions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<Session> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Session s{UserId{j.at("user").get<std::string>()}, {}};
            for (const auto& e : j.at("events")) {
                auto ts = parse_iso8601(e.at("ts").get<std::string>());
                if (!ts) throw DataError(path, lineno, "bad event timestamp");
                s.events.push_back({*ts, VenueId{e.at("venue").get<std::string>()},
                                    ActivityId{e.at("category").get<std::string>()}});
            }
            if (s.events.empty()) throw DataError(path, lineno, "session without events");
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path, lineno, e.what());
        }
    }
    return out;
}

}  // namespace needcast
