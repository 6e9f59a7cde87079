#pragma once

#include <set>
#include <sstream>
#include <unordered_map>

#include "common.hpp"

namespace needcast {

struct Activity {
    std::string name;
    int level = 1;
    std::optional<ActivityId> parent;

    friend bool operator==(const Activity&, const Activity&) = default;
};

/// Two-level activity hierarchy. Level-1 nodes are roots; every level-2 node
/// has a level-1 parent. Immutable after construction.
class ActivityTaxonomy {
  public:
    ActivityTaxonomy() = default;

    /// Validates the table and throws DataError on any structural violation.
    explicit ActivityTaxonomy(std::map<ActivityId, Activity> activities)
        : m_activities(std::move(activities)) {
        for (const auto& [id, act] : m_activities) {
            if (id.empty()) throw DataError("empty activity id");
            if (act.name.empty()) throw DataError("activity " + id.str() + " has an empty name");
            if (act.level != 1 && act.level != 2) {
                throw DataError("activity " + id.str() + ": level outside {1,2}");
            }
            if (act.level == 1 && act.parent) {
                throw DataError("level-1 activity " + id.str() + " must not have a parent");
            }
            if (act.level == 2) {
                if (!act.parent) throw DataError("level-2 activity " + id.str() + " has no parent");
                auto it = m_activities.find(*act.parent);
                if (it == m_activities.end()) {
                    throw DataError("activity " + id.str() + ": orphan parent " + act.parent->str());
                }
                if (it->second.level != 1) {
                    throw DataError("activity " + id.str() + ": parent " + act.parent->str() +
                                    " is not level 1");
                }
            }
        }
    }

    [[nodiscard]] bool contains(const ActivityId& a) const { return m_activities.count(a) > 0; }

    [[nodiscard]] const Activity& at(const ActivityId& a) const {
        auto it = m_activities.find(a);
        if (it == m_activities.end()) throw DataError("unknown activity: " + a.str());
        return it->second;
    }

    [[nodiscard]] int level(const ActivityId& a) const { return at(a).level; }

    [[nodiscard]] const std::optional<ActivityId>& parent(const ActivityId& a) const {
        return at(a).parent;
    }

    /// Maps an activity to the requested level: level-2 activities lift to
    /// their parent; a level-1 activity cannot be lowered.
    [[nodiscard]] std::optional<ActivityId> at_level(const ActivityId& a, int lvl) const {
        const auto& act = at(a);
        if (act.level == lvl) return a;
        if (act.level == 2 && lvl == 1) return act.parent;
        return std::nullopt;
    }

    [[nodiscard]] std::vector<ActivityId> activities_at(int lvl) const {
        std::vector<ActivityId> out;
        for (const auto& [id, act] : m_activities) {
            if (act.level == lvl) out.push_back(id);
        }
        return out;
    }

    [[nodiscard]] std::vector<ActivityId> children(const ActivityId& a) const {
        std::vector<ActivityId> out;
        for (const auto& [id, act] : m_activities) {
            if (act.parent && *act.parent == a) out.push_back(id);
        }
        return out;
    }

    [[nodiscard]] const std::map<ActivityId, Activity>& activities() const noexcept {
        return m_activities;
    }
    [[nodiscard]] std::size_t size() const noexcept { return m_activities.size(); }

    friend bool operator==(const ActivityTaxonomy&, const ActivityTaxonomy&) = default;

  private:
    std::map<ActivityId, Activity> m_activities;
};

struct Venue {
    VenueId id;
    std::string name;
    std::string city;
    ActivityId activity;
    std::string country;

    friend bool operator==(const Venue&, const Venue&) = default;
};

using VenueTable = std::map<VenueId, Venue>;

struct CheckIn {
    UserId user;
    VenueId venue;
    Timestamp timestamp;
    int tz_offset_minutes = 0;

    friend bool operator==(const CheckIn&, const CheckIn&) = default;
};

using CheckInLog = std::vector<CheckIn>;

inline ActivityTaxonomy load_taxonomy(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    std::map<ActivityId, Activity> table;
    std::map<ActivityId, std::size_t> line_of;
    while (in.next(f, 4)) {
        ActivityId id{f[0]};
        if (id.empty()) in.fail("empty category_id");
        if (table.count(id)) in.fail("duplicate id " + id.str());
        Activity act;
        act.level = static_cast<int>(text::parse_int(f[2], path, in.line(), "level"));
        if (act.level != 1 && act.level != 2) in.fail("level outside {1,2}");
        if (!f[1].empty()) act.parent = ActivityId{f[1]};
        act.name = f[3];
        if (act.name.empty()) in.fail("empty name");
        line_of[id] = in.line();
        table.emplace(std::move(id), std::move(act));
    }
    // Report structural errors against the offending row.
    for (const auto& [id, act] : table) {
        if (act.parent) {
            auto it = table.find(*act.parent);
            if (it == table.end()) {
                throw DataError(path, line_of[id], "orphan parent " + act.parent->str());
            }
            if (act.level == 1) throw DataError(path, line_of[id], "level-1 row has a parent");
            if (it->second.level != 1) {
                throw DataError(path, line_of[id], "parent " + act.parent->str() + " is not level 1");
            }
        } else if (act.level == 2) {
            throw DataError(path, line_of[id], "level-2 row without parent");
        }
    }
    return ActivityTaxonomy{std::move(table)};
}

inline void write_taxonomy(std::ostream& os, const ActivityTaxonomy& taxonomy) {
    for (const auto& [id, act] : taxonomy.activities()) {
        write_tsv_row(os, {id.str(), act.parent ? act.parent->str() : "", std::to_string(act.level),
                           act.name});
    }
}

/// Loads venues; when `countries` is non-empty only rows with a listed
/// country code are kept.
inline VenueTable load_venues(const std::string& path, const ActivityTaxonomy& taxonomy,
                              const std::set<std::string>& countries = {}) {
    TsvReader in(path);
    std::vector<std::string> f;
    VenueTable table;
    std::set<VenueId> seen;
    while (in.next(f, 5)) {
        Venue v{VenueId{f[0]}, f[1], f[2], ActivityId{f[3]}, f[4]};
        if (v.id.empty()) in.fail("empty venue_id");
        if (!seen.insert(v.id).second) in.fail("duplicate venue_id " + v.id.str());
        if (!taxonomy.contains(v.activity)) in.fail("unknown category " + v.activity.str());
        if (!countries.empty() && !countries.count(v.country)) continue;
        table.emplace(v.id, std::move(v));
    }
    return table;
}

inline void write_venues(std::ostream& os, const VenueTable& venues) {
    for (const auto& [id, v] : venues) {
        write_tsv_row(os, {id.str(), v.name, v.city, v.activity.str(), v.country});
    }
}

inline CheckInLog load_checkins(const std::string& path) {
    TsvReader in(path);
    std::vector<std::string> f;
    CheckInLog log;
    while (in.next(f, 4)) {
        auto ts = parse_iso8601(f[2]);
        if (!ts) in.fail("unparseable timestamp '" + f[2] + "'");
        if (f[0].empty() || f[1].empty()) in.fail("empty user or venue id");
        log.push_back({UserId{f[0]}, VenueId{f[1]}, *ts,
                       static_cast<int>(text::parse_int(f[3], path, in.line(), "tz_offset"))});
    }
    return log;
}

inline void write_checkins(std::ostream& os, const CheckInLog& log) {
    for (const auto& c : log) {
        write_tsv_row(os, {c.user.str(), c.venue.str(), format_iso8601(c.timestamp),
                           std::to_string(c.tz_offset_minutes)});
    }
}

/// Drops check-ins whose venue is not in the table. Returns the number dropped.
inline std::size_t join_checkins(CheckInLog& log, const VenueTable& venues) {
    auto before = log.size();
    std::erase_if(log, [&](const CheckIn& c) { return !venues.count(c.venue); });
    return before - log.size();
}

struct VenueVisits {
    VenueId venue;
    std::int64_t checkins = 0;

    friend bool operator==(const VenueVisits&, const VenueVisits&) = default;
};

/// Most visited venues for every level-2 activity, by descending check-in
/// count with ties broken by venue id, truncated to `k`.
inline std::map<ActivityId, std::vector<VenueVisits>> top_venues_per_category(
    const ActivityTaxonomy& taxonomy, const VenueTable& venues, const CheckInLog& checkins,
    std::size_t k) {
    if (k == 0) throw UsageError("top_venues_per_category: k must be >= 1");
    std::unordered_map<VenueId, std::int64_t> counts;
    for (const auto& c : checkins) ++counts[c.venue];

    std::map<ActivityId, std::vector<VenueVisits>> out;
    for (const auto& a : taxonomy.activities_at(2)) out[a];
    for (const auto& [id, v] : venues) {
        auto it = out.find(v.activity);
        if (it == out.end()) continue;
        auto cnt = counts.find(id);
        it->second.push_back({id, cnt == counts.end() ? 0 : cnt->second});
    }
    for (auto& [a, list] : out) {
        // venues iterate in id order, so a stable sort keeps the id tie-break
        std::stable_sort(list.begin(), list.end(),
                         [](const VenueVisits& x, const VenueVisits& y) { return x.checkins > y.checkins; });
        if (list.size() > k) list.resize(k);
    }
    return out;
}

}  // namespace needcast
