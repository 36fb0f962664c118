#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tripscope/csv.hpp"
#include "tripscope/error.hpp"
#include "tripscope/format.hpp"
#include "tripscope/geo.hpp"
#include "tripscope/time.hpp"

namespace tripscope {

enum class VehicleClass { cmv, other };

inline std::string_view to_string(VehicleClass c) { return c == VehicleClass::cmv ? "cmv" : "other"; }

inline VehicleClass vehicle_class_from(std::string_view s) {
  if (s == "cmv") return VehicleClass::cmv;
  if (s == "other") return VehicleClass::other;
  throw Error(ErrorKind::parse, "unknown vehicle class '" + std::string(s) + "'");
}

struct Waypoint {
  Instant t;
  LatLon pos;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct Trip {
  std::string trip_id;
  VehicleClass vehicle_class = VehicleClass::cmv;
  std::vector<Waypoint> waypoints;  // strictly increasing in time

  friend bool operator==(const Trip&, const Trip&) = default;
};

struct CountRecord {
  std::string station_id;
  Instant t;
  int vehicle_class = 0;
  std::vector<std::pair<std::string, std::string>> extra;  // unknown columns, in file order

  friend bool operator==(const CountRecord&, const CountRecord&) = default;
};

struct DailyCount {
  absl::CivilDay day;
  long long count = 0;

  friend bool operator==(const DailyCount&, const DailyCount&) = default;
};

struct DailyCountSeries {
  std::string station_id;
  std::string timezone;
  std::vector<DailyCount> days;  // strictly increasing, gap-free
};

// Trips file: trip_id,timestamp,lat,lon,vehicle_class

inline std::vector<Trip> parse_trips(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  const csv::Header header(row);
  const auto c_id = header.require("trip_id");
  const auto c_t = header.require("timestamp");
  const auto c_lat = header.require("lat");
  const auto c_lon = header.require("lon");
  const auto c_cls = header.require("vehicle_class");
  const auto width = header.names().size();

  std::vector<Trip> trips;
  std::unordered_map<std::string, std::size_t> by_id;
  while (reader.next(row)) {
    if (row.size() != width)
      throw Error(ErrorKind::parse, "wrong field count on line " + std::to_string(reader.line_no()));
    Waypoint w{parse_instant(row[c_t]), {parse_double(row[c_lat], "lat"), parse_double(row[c_lon], "lon")}};
    if (!valid_latlon(w.pos))
      throw Error(ErrorKind::parse, "coordinates out of range on line " + std::to_string(reader.line_no()));
    const VehicleClass cls = vehicle_class_from(row[c_cls]);
    auto [it, fresh] = by_id.try_emplace(row[c_id], trips.size());
    if (fresh) trips.push_back({row[c_id], cls, {}});
    Trip& trip = trips[it->second];
    if (trip.vehicle_class != cls)
      throw Error(ErrorKind::conflict, "trip '" + trip.trip_id + "' has conflicting vehicle classes");
    trip.waypoints.push_back(w);
  }

  for (Trip& trip : trips) {
    auto& w = trip.waypoints;
    std::stable_sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    std::vector<Waypoint> kept;
    kept.reserve(w.size());
    for (const Waypoint& p : w) {
      if (!kept.empty() && kept.back().t == p.t) {
        if (kept.back() == p) continue;
        throw Error(ErrorKind::conflict, "trip '" + trip.trip_id + "' has conflicting rows at " + format_instant(p.t));
      }
      kept.push_back(p);
    }
    w = std::move(kept);
  }
  return trips;
}

inline std::vector<Trip> parse_trips(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return parse_trips(in);
}

inline void write_trips(std::ostream& os, std::span<const Trip> trips) {
  csv::write_record(os, {"trip_id", "timestamp", "lat", "lon", "vehicle_class"});
  for (const Trip& trip : trips)
    for (const Waypoint& w : trip.waypoints)
      csv::write_record(os, {trip.trip_id, format_instant(w.t), format_double(w.pos.lat),
                             format_double(w.pos.lon), std::string(to_string(trip.vehicle_class))});
}

inline void write_trips(const std::string& path, std::span<const Trip> trips) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  write_trips(out, trips);
}

// Counts file: station_id,timestamp,class[,weight_lb,speed_mph,...]

inline std::vector<CountRecord> parse_counts(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  const csv::Header header(row);
  const auto c_station = header.require("station_id");
  const auto c_t = header.require("timestamp");
  const auto c_cls = header.require("class");
  const auto width = header.names().size();

  std::vector<CountRecord> out;
  while (reader.next(row)) {
    if (row.size() != width)
      throw Error(ErrorKind::parse, "wrong field count on line " + std::to_string(reader.line_no()));
    CountRecord r;
    r.station_id = row[c_station];
    r.t = parse_instant(row[c_t]);
    r.vehicle_class = static_cast<int>(parse_int(row[c_cls], "class"));
    for (std::size_t i = 0; i < width; ++i)
      if (i != c_station && i != c_t && i != c_cls) r.extra.emplace_back(header.names()[i], row[i]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CountRecord> parse_counts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return parse_counts(in);
}

inline void write_counts(std::ostream& os, std::span<const CountRecord> records) {
  std::vector<std::string> extra_cols;
  for (const auto& r : records)
    for (const auto& [k, v] : r.extra)
      if (std::find(extra_cols.begin(), extra_cols.end(), k) == extra_cols.end()) extra_cols.push_back(k);
  std::vector<std::string> head{"station_id", "timestamp", "class"};
  head.insert(head.end(), extra_cols.begin(), extra_cols.end());
  csv::write_record(os, head);
  for (const auto& r : records) {
    std::vector<std::string> fields{r.station_id, format_instant(r.t), std::to_string(r.vehicle_class)};
    for (const auto& col : extra_cols) {
      auto it = std::find_if(r.extra.begin(), r.extra.end(), [&](const auto& kv) { return kv.first == col; });
      fields.push_back(it == r.extra.end() ? "" : it->second);
    }
    csv::write_record(os, fields);
  }
}

inline void write_counts(const std::string& path, std::span<const CountRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  write_counts(out, records);
}

/// Counts records whose class is in `cmv_classes` per local calendar day.
/// The series spans every day between the station's first and last record.
inline DailyCountSeries daily_aggregate(std::span<const CountRecord> records, const std::set<int>& cmv_classes,
                                        const std::string& tz_name) {
  const absl::TimeZone tz = load_zone(tz_name);
  DailyCountSeries series;
  series.timezone = tz_name;
  if (records.empty()) return series;
  series.station_id = records.front().station_id;

  std::map<absl::CivilDay, long long> tally;
  for (const CountRecord& r : records) {
    if (r.station_id != series.station_id)
      throw Error(ErrorKind::mixed_station, "records from stations '" + series.station_id + "' and '" +
                                                r.station_id + "' cannot be aggregated together");
    auto& slot = tally[local_day(r.t, tz)];
    if (cmv_classes.count(r.vehicle_class)) ++slot;
  }
  for (absl::CivilDay d = tally.begin()->first; d <= tally.rbegin()->first; ++d) {
    auto it = tally.find(d);
    series.days.push_back({d, it == tally.end() ? 0 : it->second});
  }
  return series;
}

inline void write_daily_series(std::ostream& os, const DailyCountSeries& s) {
  csv::write_record(os, {"station_id", "date", "count"});
  for (const auto& d : s.days) csv::write_record(os, {s.station_id, format_day(d.day), std::to_string(d.count)});
}

/// Reads a daily series written by write_daily_series (one station).
inline DailyCountSeries parse_daily_series(std::istream& in, const std::string& tz_name) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  DailyCountSeries s;
  s.timezone = tz_name;
  if (!reader.next(row)) return s;
  const csv::Header header(row);
  const auto c_station = header.require("station_id");
  const auto c_date = header.require("date");
  const auto c_count = header.require("count");
  while (reader.next(row)) {
    if (s.station_id.empty()) s.station_id = row[c_station];
    if (row[c_station] != s.station_id) throw Error(ErrorKind::mixed_station, "daily series mixes stations");
    const absl::CivilDay d = parse_day(row[c_date]);
    if (!s.days.empty() && d <= s.days.back().day) throw Error(ErrorKind::parse, "daily series dates not increasing");
    s.days.push_back({d, parse_int(row[c_count], "count")});
  }
  return s;
}

}  // namespace tripscope
