#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tripscope/csv.hpp"
#include "tripscope/error.hpp"
#include "tripscope/format.hpp"
#include "tripscope/gates.hpp"
#include "tripscope/ingest.hpp"
#include "tripscope/routes.hpp"
#include "tripscope/time.hpp"

namespace tripscope {

/// Display rule for percentages: integer percent at or above 1%, one decimal
/// below. Raw values stay unrounded everywhere else.
inline std::string format_percent(double percent) {
  const double mag = std::abs(percent);
  std::string body = mag >= 1.0 ? format_fixed(mag, 0) : format_fixed(mag, 1);
  return (percent < 0.0 && body.find_first_not_of("0.") != std::string::npos ? "-" : "") + body + "%";
}

/// Signed percentage-point delta, e.g. "-26 pp", "+16 pp".
inline std::string format_delta_pp(double delta) {
  const double mag = std::abs(delta);
  std::string body = mag >= 1.0 ? format_fixed(mag, 0) : format_fixed(mag, 1);
  const bool zero = body.find_first_not_of("0.") == std::string::npos;
  return (zero ? "" : (delta < 0.0 ? "-" : "+")) + body + " pp";
}

// ---------------------------------------------------------------------------
// Route shares

struct RouteShareRow {
  std::string route_id;
  std::string label;
  long long trips = 0;
  double percent = 0.0;  // 100 * trips / total, unrounded
  std::string display;   // per format_percent
};

struct RouteShareTable {
  std::vector<RouteShareRow> rows;
  long long total = 0;
};

inline RouteShareTable route_share_table(std::span<const RouteSet> sets) {
  RouteShareTable t;
  for (const RouteSet& rs : sets) t.total += static_cast<long long>(rs.members.size());
  for (const RouteSet& rs : sets) {
    RouteShareRow row;
    row.route_id = rs.route_id;
    row.label = rs.label;
    row.trips = static_cast<long long>(rs.members.size());
    row.percent = t.total > 0 ? 100.0 * static_cast<double>(row.trips) / static_cast<double>(t.total) : 0.0;
    row.display = format_percent(row.percent);
    t.rows.push_back(std::move(row));
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) {
    return a.trips != b.trips ? a.trips > b.trips : a.label < b.label;
  });
  return t;
}

// ---------------------------------------------------------------------------
// Travel times

struct TravelTimeRow {
  std::string route_id;
  std::string label;
  long long n_trips = 0;
  double mean_minutes = 0.0;
};

struct TravelTimeStats {
  std::string first_gate;
  std::string last_gate;
  std::vector<TravelTimeRow> rows;
};

/// Mean gate-to-gate time per route set. Each trip is timed on its tight
/// crossing chain: last crossing of the first gate before the first crossing
/// of the last gate.
inline TravelTimeStats travel_time_stats(const TripSet& trips, std::span<const RouteSet> sets) {
  std::unordered_map<std::string, const TripPass*> by_id;
  for (const TripPass& p : trips) by_id.emplace(p.trip_id, &p);
  TravelTimeStats stats;
  if (!trips.empty()) {
    stats.first_gate = trips.front().chain.front().gate_id;
    stats.last_gate = trips.front().chain.back().gate_id;
  }
  for (const RouteSet& rs : sets) {
    TravelTimeRow row{rs.route_id, rs.label, 0, 0.0};
    double sum = 0.0;
    for (const std::string& id : rs.members) {
      auto it = by_id.find(id);
      if (it == by_id.end() || it->second->chain.empty())
        throw Error(ErrorKind::invalid_argument, "trip '" + id + "' has no gate crossings");
      const auto& chain = it->second->chain;
      sum += std::abs(minutes_between(chain.front().t, chain.back().t));
      ++row.n_trips;
    }
    if (row.n_trips == 0) continue;
    row.mean_minutes = sum / static_cast<double>(row.n_trips);
    stats.rows.push_back(std::move(row));
  }
  std::stable_sort(stats.rows.begin(), stats.rows.end(), [](const auto& a, const auto& b) {
    return a.n_trips != b.n_trips ? a.n_trips > b.n_trips : a.label < b.label;
  });
  return stats;
}

// ---------------------------------------------------------------------------
// Period comparison

struct ShareComparisonRow {
  std::string label;
  double share_a = 0.0;  // percent
  double share_b = 0.0;  // percent
  double delta_pp = 0.0;
};

struct ShareComparison {
  std::vector<ShareComparisonRow> rows;
};

/// Per-label share deltas (b - a). Labels are unioned; rows sharing a label
/// within one table are summed; a label missing from a table has share 0.
inline ShareComparison compare_periods(const RouteShareTable& a, const RouteShareTable& b) {
  std::vector<std::string> labels;
  std::map<std::string, std::pair<long long, long long>> counts;
  for (const auto* t : {&a, &b})
    for (const auto& r : t->rows) {
      if (!counts.count(r.label)) labels.push_back(r.label);
      (t == &a ? counts[r.label].first : counts[r.label].second) += r.trips;
    }
  auto pct = [](long long n, long long total) {
    return total > 0 ? 100.0 * static_cast<double>(n) / static_cast<double>(total) : 0.0;
  };
  ShareComparison out;
  for (const auto& label : labels) {
    const auto [na, nb] = counts[label];
    ShareComparisonRow row{label, pct(na, a.total), pct(nb, b.total), 0.0};
    row.delta_pp = row.share_b - row.share_a;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hourly route counts

struct HourlyMatrix {
  int bin_minutes = 60;
  std::vector<std::string> labels;       // columns
  std::vector<std::vector<long long>> counts;  // [bin][label]

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long c : row) t += c;
    return t;
  }
};

/// Trips (route-set members only) binned by the local time of their first
/// qualifying crossing.
inline HourlyMatrix hourly_route_counts(const TripSet& trips, std::span<const RouteSet> sets,
                                        const std::string& tz_name, int bin_minutes = 60) {
  if (bin_minutes <= 0 || (24 * 60) % bin_minutes != 0)
    throw Error(ErrorKind::invalid_argument, "bin must divide 24 h evenly");
  const absl::TimeZone tz = load_zone(tz_name);
  HourlyMatrix m;
  m.bin_minutes = bin_minutes;
  m.counts.assign(static_cast<std::size_t>(24 * 60 / bin_minutes), {});
  std::unordered_map<std::string, std::size_t> column_of_trip;
  for (const RouteSet& rs : sets) {
    auto it = std::find(m.labels.begin(), m.labels.end(), rs.label);
    const auto col = static_cast<std::size_t>(it - m.labels.begin());
    if (it == m.labels.end()) m.labels.push_back(rs.label);
    for (const auto& id : rs.members) column_of_trip.emplace(id, col);
  }
  for (auto& row : m.counts) row.assign(m.labels.size(), 0);
  for (const TripPass& p : trips) {
    auto it = column_of_trip.find(p.trip_id);
    if (it == column_of_trip.end()) continue;
    const absl::CivilSecond cs = local_second(p.anchor, tz);
    const int minute = cs.hour() * 60 + cs.minute();
    ++m.counts[static_cast<std::size_t>(minute / bin_minutes)][it->second];
  }
  return m;
}

struct AvoidShare {
  long long avoiding = 0;
  long long total = 0;
  double percent = 0.0;
};

/// Within the given bins, the share of trips on routes outside `kept_labels`.
inline AvoidShare avoid_share(const HourlyMatrix& m, const std::set<std::size_t>& bins,
                              const std::set<std::string>& kept_labels) {
  AvoidShare s;
  for (std::size_t b : bins) {
    if (b >= m.counts.size()) continue;
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
      s.total += m.counts[b][c];
      if (!kept_labels.count(m.labels[c])) s.avoiding += m.counts[b][c];
    }
  }
  s.percent = s.total > 0 ? 100.0 * static_cast<double>(s.avoiding) / static_cast<double>(s.total) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Validation statistics

/// Pearson correlation; nullopt when either series has zero variance.
inline std::optional<double> pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::invalid_argument, "series lengths differ");
  if (xs.size() < 2) throw Error(ErrorKind::invalid_argument, "correlation needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct CorrelationPoint {
  std::string station_id;
  int week_index = 0;  // ISO week number
  absl::CivilDay week_start;  // Monday
  std::optional<double> r;
  int n_days = 0;
};

struct WeeklyCorrelations {
  std::vector<CorrelationPoint> points;
  std::vector<absl::CivilDay> skipped_weeks;  // Mondays of incomplete weeks
};

inline int weekday_index(absl::CivilDay d) {
  switch (absl::GetWeekday(d)) {
    case absl::Weekday::monday: return 0;
    case absl::Weekday::tuesday: return 1;
    case absl::Weekday::wednesday: return 2;
    case absl::Weekday::thursday: return 3;
    case absl::Weekday::friday: return 4;
    case absl::Weekday::saturday: return 5;
    case absl::Weekday::sunday: return 6;
  }
  return 0;
}

inline int iso_week(absl::CivilDay d) {
  const absl::CivilDay thursday = d + (3 - weekday_index(d));
  return (absl::GetYearDay(thursday) - 1) / 7 + 1;
}

/// Aligns two daily series by date and correlates each complete Monday-start week.
inline WeeklyCorrelations weekly_correlations(const DailyCountSeries& probe, const DailyCountSeries& truth) {
  std::map<absl::CivilDay, long long> p, t;
  for (const auto& d : probe.days) p[d.day] = d.count;
  for (const auto& d : truth.days) t[d.day] = d.count;
  std::map<absl::CivilDay, std::vector<std::pair<double, double>>> weeks;
  std::set<absl::CivilDay> touched;
  for (const auto& [day, pc] : p) {
    auto it = t.find(day);
    const absl::CivilDay monday = day - weekday_index(day);
    touched.insert(monday);
    if (it != t.end()) weeks[monday].emplace_back(static_cast<double>(pc), static_cast<double>(it->second));
  }
  if (weeks.empty()) throw Error(ErrorKind::no_overlap, "probe and ground-truth series share no dates");

  WeeklyCorrelations out;
  const std::string station = truth.station_id.empty() ? probe.station_id : truth.station_id;
  for (const absl::CivilDay& monday : touched) {
    auto it = weeks.find(monday);
    if (it == weeks.end() || it->second.size() != 7) {
      out.skipped_weeks.push_back(monday);
      continue;
    }
    std::vector<double> xs, ys;
    for (const auto& [x, y] : it->second) {
      xs.push_back(x);
      ys.push_back(y);
    }
    out.points.push_back({station, iso_week(monday), monday, pearson_r(xs, ys), 7});
  }
  return out;
}

struct BoxSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t n = 0;
  std::size_t n_undefined = 0;
};

/// Five-number summary over defined r values (linear-interpolated quantiles).
inline BoxSummary box_summary(std::span<const CorrelationPoint> pts) {
  BoxSummary s;
  std::vector<double> v;
  for (const auto& p : pts) {
    if (p.r)
      v.push_back(*p.r);
    else
      ++s.n_undefined;
  }
  s.n = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  auto q = [&](double f) {
    const double pos = f * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.min = v.front();
  s.q1 = q(0.25);
  s.median = q(0.5);
  s.q3 = q(0.75);
  s.max = v.back();
  return s;
}

/// Distinct probe trips per local day, keyed on each trip's anchor crossing.
/// When `span_from`/`span_to` are given, every day in that range is emitted.
inline DailyCountSeries probe_daily_counts(const TripSet& trips, const std::string& station_id,
                                           const std::string& tz_name,
                                           std::optional<absl::CivilDay> span_from = std::nullopt,
                                           std::optional<absl::CivilDay> span_to = std::nullopt) {
  const absl::TimeZone tz = load_zone(tz_name);
  std::map<absl::CivilDay, std::set<std::string>> per_day;
  for (const TripPass& p : trips) per_day[local_day(p.anchor, tz)].insert(p.trip_id);
  DailyCountSeries s;
  s.station_id = station_id;
  s.timezone = tz_name;
  if (per_day.empty() && !(span_from && span_to)) return s;
  absl::CivilDay lo = span_from ? *span_from : per_day.begin()->first;
  absl::CivilDay hi = span_to ? *span_to : per_day.rbegin()->first;
  if (!per_day.empty()) {
    lo = std::min(lo, per_day.begin()->first);
    hi = std::max(hi, per_day.rbegin()->first);
  }
  for (absl::CivilDay d = lo; d <= hi; ++d) {
    auto it = per_day.find(d);
    s.days.push_back({d, it == per_day.end() ? 0 : static_cast<long long>(it->second.size())});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Delimited-text emitters

inline void write_share_table(std::ostream& os, const RouteShareTable& t) {
  csv::write_record(os, {"route_id", "label", "trips", "percent", "display"});
  for (const auto& r : t.rows)
    csv::write_record(os, {r.route_id, r.label, std::to_string(r.trips), format_double(r.percent), r.display});
  csv::write_record(os, {"", "Total", std::to_string(t.total), t.total ? "100" : "0", t.total ? "100%" : "0%"});
}

inline void write_travel_times(std::ostream& os, const TravelTimeStats& s) {
  csv::write_record(os, {"route_id", "label", "n_trips", "mean_minutes", "first_gate", "last_gate"});
  for (const auto& r : s.rows)
    csv::write_record(os, {r.route_id, r.label, std::to_string(r.n_trips), format_fixed(r.mean_minutes, 2),
                           s.first_gate, s.last_gate});
}

inline void write_comparison(std::ostream& os, const ShareComparison& c) {
  csv::write_record(os, {"label", "share_a", "share_b", "delta_pp", "display"});
  for (const auto& r : c.rows)
    csv::write_record(os, {r.label, format_double(r.share_a), format_double(r.share_b), format_double(r.delta_pp),
                           format_delta_pp(r.delta_pp)});
}

inline void write_hourly(std::ostream& os, const HourlyMatrix& m) {
  std::vector<std::string> head{"bin_start"};
  head.insert(head.end(), m.labels.begin(), m.labels.end());
  csv::write_record(os, head);
  for (std::size_t b = 0; b < m.counts.size(); ++b) {
    const int minute = static_cast<int>(b) * m.bin_minutes;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
    std::vector<std::string> row{buf};
    for (long long c : m.counts[b]) row.push_back(std::to_string(c));
    csv::write_record(os, row);
  }
}

inline void write_correlations(std::ostream& os, const WeeklyCorrelations& w) {
  csv::write_record(os, {"station_id", "week_index", "week_start", "r", "n_days"});
  for (const auto& p : w.points)
    csv::write_record(os, {p.station_id, std::to_string(p.week_index), format_day(p.week_start),
                           p.r ? format_double(*p.r) : "undefined", std::to_string(p.n_days)});
}

}  // namespace tripscope
