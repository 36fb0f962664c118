#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tripscope/csv.hpp"
#include "tripscope/error.hpp"
#include "tripscope/format.hpp"
#include "tripscope/ingest.hpp"
#include "tripscope/netmodel.hpp"
#include "tripscope/parallel.hpp"
#include "tripscope/time.hpp"

namespace tripscope::synth {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent per-item streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// ---------------------------------------------------------------------------
// Networks

struct GridNames {
  std::vector<std::string> rows;  // east-west streets, south to north
  std::vector<std::string> cols;  // north-south streets, west to east
};

/// rows x cols lattice, 4-connected, every street bidirectional. Node
/// "n{r}_{c}" sits c*spacing east and r*spacing north of `origin`.
inline NetworkRecords grid_network(int rows, int cols, double spacing_m, LatLon origin, const GridNames& names = {}) {
  const LocalFrame frame(origin);
  NetworkRecords rec;
  auto node_id = [](int r, int c) { return "n" + std::to_string(r) + "_" + std::to_string(c); };
  auto pos = [&](int r, int c) { return frame.unproject({c * spacing_m, r * spacing_m}); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) rec.nodes.push_back({node_id(r, c), pos(r, c)});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c)
      rec.lines.push_back({"h" + std::to_string(r) + "_" + std::to_string(c), node_id(r, c), node_id(r, c + 1),
                           {pos(r, c), pos(r, c + 1)},
                           static_cast<std::size_t>(r) < names.rows.size() ? names.rows[r] : "",
                           RoadClass::secondary, false});
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c)
      rec.lines.push_back({"v" + std::to_string(r) + "_" + std::to_string(c), node_id(r, c), node_id(r + 1, c),
                           {pos(r, c), pos(r + 1, c)},
                           static_cast<std::size_t>(c) < names.cols.size() ? names.cols[c] : "",
                           RoadClass::secondary, false});
  return rec;
}

/// The 25-node reference lattice used throughout the tests.
inline NetworkRecords grid5x5() { return grid_network(5, 5, 200.0, {39.0, -77.0}); }

// ---------------------------------------------------------------------------
// Paths

/// Node-to-node shortest path that never uses a blocked segment.
inline std::optional<std::vector<SegmentIndex>> node_path(const RoadNetwork& net, NodeIndex from, NodeIndex to,
                                                          const std::set<SegmentIndex>& blocked = {}) {
  std::vector<double> dist(net.node_count(), std::numeric_limits<double>::infinity());
  std::vector<SegmentIndex> pred(net.node_count(), SearchWorkspace::kNoPred);
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[from] = 0.0;
  heap.emplace(0.0, from);
  while (!heap.empty()) {
    auto [d, n] = heap.top();
    heap.pop();
    if (d > dist[n]) continue;
    if (n == to) break;
    for (SegmentIndex s : net.outgoing(n)) {
      if (blocked.count(s)) continue;
      const double nd = d + net.segment(s).length_m;
      const NodeIndex m = net.segment(s).to;
      if (nd < dist[m]) {
        dist[m] = nd;
        pred[m] = s;
        heap.emplace(nd, m);
      }
    }
  }
  if (dist[to] == std::numeric_limits<double>::infinity()) return std::nullopt;
  std::vector<SegmentIndex> path;
  for (NodeIndex n = to; n != from; n = net.segment(pred[n]).from) path.push_back(pred[n]);
  std::reverse(path.begin(), path.end());
  return path;
}

inline NodeIndex require_node(const RoadNetwork& net, const std::string& id) {
  if (auto n = net.find_node(id)) return *n;
  throw Error(ErrorKind::referential, "unknown node '" + id + "'");
}

/// Shortest path visiting the listed nodes in order.
inline std::vector<SegmentIndex> path_through(const RoadNetwork& net, const std::vector<std::string>& stops,
                                              const std::set<SegmentIndex>& blocked = {}) {
  std::vector<SegmentIndex> path;
  for (std::size_t i = 1; i < stops.size(); ++i) {
    auto leg = node_path(net, require_node(net, stops[i - 1]), require_node(net, stops[i]), blocked);
    if (!leg) throw Error(ErrorKind::invalid_argument, "no path from '" + stops[i - 1] + "' to '" + stops[i] + "'");
    path.insert(path.end(), leg->begin(), leg->end());
  }
  if (path.empty()) throw Error(ErrorKind::invalid_argument, "route has no segments");
  return path;
}

/// Walks a segment path by along-path distance.
class PathWalker {
 public:
  PathWalker(const RoadNetwork& net, std::span<const SegmentIndex> path) : net_(net), path_(path) {
    start_.push_back(0.0);
    for (SegmentIndex s : path) start_.push_back(start_.back() + net.segment(s).length_m);
  }

  double length() const { return start_.back(); }
  double segment_start(std::size_t k) const { return start_[k]; }

  LatLon point_at(double d) const {
    d = std::clamp(d, 0.0, length());
    auto k = static_cast<std::size_t>(std::upper_bound(start_.begin(), start_.end(), d) - start_.begin()) - 1;
    k = std::min(k, path_.size() - 1);
    const Segment& seg = net_.segment(path_[k]);
    return interpolate_polyline(seg.geometry, seg.cumulative, d - start_[k]);
  }

 private:
  const RoadNetwork& net_;
  std::span<const SegmentIndex> path_;
  std::vector<double> start_;
};

struct TripShape {
  double start_offset_m = 0.0;  // on the first segment
  double end_offset_m = 0.0;    // on the last segment
  double speed_mps = 20.0;
  double period_s = 30.0;
  double noise_sigma_m = 0.0;
};

/// Random start/end offsets that keep the trip inside its first and last segment.
inline TripShape random_offsets(const RoadNetwork& net, std::span<const SegmentIndex> path, TripShape shape, Rng& rng) {
  const double first = net.segment(path.front()).length_m;
  const double last = net.segment(path.back()).length_m;
  if (path.size() == 1) {
    shape.start_offset_m = uniform(rng, 0.1, 0.4) * first;
    shape.end_offset_m = uniform(rng, 0.6, 0.9) * first;
  } else {
    shape.start_offset_m = uniform(rng, 0.2, 0.8) * first;
    shape.end_offset_m = uniform(rng, 0.2, 0.8) * last;
  }
  return shape;
}

/// Samples timestamped fixes every period_s along the path at constant
/// speed, adds isotropic Gaussian noise, and always ends with a fix at the
/// trip's end point.
inline Trip sample_trip(const RoadNetwork& net, std::span<const SegmentIndex> path, const std::string& trip_id,
                        Instant departure, const TripShape& shape, Rng& rng) {
  const PathWalker walk(net, path);
  const double s0 = shape.start_offset_m;
  const double s1 = walk.segment_start(path.size() - 1) + shape.end_offset_m;
  std::normal_distribution<double> noise(0.0, shape.noise_sigma_m > 0.0 ? shape.noise_sigma_m : 1.0);
  auto fix = [&](double d) {
    LatLon p = walk.point_at(d);
    if (shape.noise_sigma_m > 0.0) {
      const LocalFrame frame(p);
      const double dx = noise(rng);
      const double dy = noise(rng);
      p = frame.unproject({dx, dy});
    }
    return p;
  };
  Trip trip{trip_id, VehicleClass::cmv, {}};
  const double step = shape.speed_mps * shape.period_s;
  for (long k = 0;; ++k) {
    const double d = s0 + step * static_cast<double>(k);
    if (d >= s1) break;
    trip.waypoints.push_back({departure + Millis{std::llround(k * shape.period_s * 1000.0)}, fix(d)});
  }
  const Instant end_t = departure + Millis{std::llround((s1 - s0) / shape.speed_mps * 1000.0)};
  if (trip.waypoints.empty() || end_t > trip.waypoints.back().t) trip.waypoints.push_back({end_t, fix(s1)});
  return trip;
}

// ---------------------------------------------------------------------------
// Scenarios

struct Alternate {
  std::string label;
  std::vector<std::string> stops;  // node ids, origin first, destination last
  double weight = 1.0;
};

enum class DetourModel { none, enforcement_hours, ramp_control, closure };

struct MinuteWindow {
  int start = 0;  // local minutes after midnight, inclusive
  int end = 1440;  // exclusive
  bool contains(int m) const { return m >= start && m < end; }
};

struct EnforcementHours {
  std::vector<MinuteWindow> active;
  double avoidance_probability = 0.0;
  std::vector<Alternate> alternates;
};

struct RampPeriod {
  MinuteWindow window;
  std::vector<double> speed_mps;  // one per route
};

struct RampControl {
  std::vector<Alternate> routes;
  std::vector<RampPeriod> periods;
};

struct Closure {
  std::vector<std::string> closed_segments;
  Instant start;
  Instant end;
  std::string label = "closure detour";
};

struct OdDemand {
  std::string origin;
  std::string destination;
  double trips_per_day = 0.0;
  std::string label = "primary";
};

struct Station {
  std::string station_id;
  std::string segment_id;
};

struct ScenarioSpec {
  std::vector<OdDemand> od_pairs;
  DetourModel detour_model = DetourModel::none;
  EnforcementHours enforcement;
  RampControl ramp_control;
  Closure closure;
  double penetration = 1.0;
  double noise_sigma_m = 0.0;
  double waypoint_period_s = 30.0;
  std::uint64_t seed = 1;

  std::string start_date = "2022-01-03";
  int days = 1;
  std::string timezone = "America/New_York";
  MinuteWindow demand_window;
  double weekend_multiplier = 1.0;
  double speed_mps = 20.0;
  std::vector<Station> stations;
  std::vector<int> cmv_class_codes{9};
  int passenger_class = 2;
  double passenger_per_day = 0.0;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(penetration > 0.0 && penetration <= 1.0)) throw Error(ErrorKind::invalid_argument, "penetration must lie in (0, 1]");
    if (!prob(enforcement.avoidance_probability)) throw Error(ErrorKind::invalid_argument, "avoidance probability outside [0, 1]");
    if (!(waypoint_period_s > 0.0) || !(speed_mps > 0.0) || days <= 0 || noise_sigma_m < 0.0)
      throw Error(ErrorKind::invalid_argument, "periods, speeds and day counts must be positive");
    if (cmv_class_codes.empty()) throw Error(ErrorKind::invalid_argument, "at least one CMV class code is required");
  }
};

struct GroundTruthTrip {
  std::string trip_id;
  std::string route_label;
  bool detour = false;
  Instant departure;
  std::vector<SegmentIndex> path;
  bool probe = false;
};

struct ScenarioOutput {
  std::vector<Trip> trips;  // probes only
  std::vector<GroundTruthTrip> truth;  // full population
  std::vector<CountRecord> counts;
  std::vector<DailyCountSeries> station_daily;
};

namespace detail {

struct Departure {
  Instant t;
  std::size_t od;
  std::uint64_t draw;
};

inline int local_minute(Instant t, const absl::TimeZone& tz) {
  const absl::CivilSecond cs = local_second(t, tz);
  return cs.hour() * 60 + cs.minute();
}

inline const Alternate& pick_weighted(const std::vector<Alternate>& alts, Rng& rng) {
  double total = 0.0;
  for (const auto& a : alts) total += a.weight;
  double u = uniform(rng) * total;
  for (const auto& a : alts) {
    if (u < a.weight) return a;
    u -= a.weight;
  }
  return alts.back();
}

}  // namespace detail

/// Draws the full trip population, chooses routes per the detour model,
/// samples probe trajectories and station count records. Deterministic in
/// the seed; output order is canonical (departure, then trip id).
inline ScenarioOutput generate(const ScenarioSpec& spec, const RoadNetwork& net, unsigned threads = 1) {
  spec.validate();
  const absl::TimeZone tz = load_zone(spec.timezone);
  const absl::CivilDay first_day = parse_day(spec.start_date);

  std::vector<std::vector<SegmentIndex>> primary;
  for (const auto& od : spec.od_pairs) {
    auto p = node_path(net, require_node(net, od.origin), require_node(net, od.destination));
    if (!p || p->empty()) throw Error(ErrorKind::invalid_argument, "unreachable od pair " + od.origin + " -> " + od.destination);
    primary.push_back(std::move(*p));
  }
  if (spec.detour_model == DetourModel::enforcement_hours && spec.enforcement.alternates.empty())
    throw Error(ErrorKind::invalid_argument, "enforcement model needs at least one alternate route");
  if (spec.detour_model == DetourModel::ramp_control) {
    if (spec.ramp_control.routes.empty()) throw Error(ErrorKind::invalid_argument, "ramp control needs routes");
    for (const auto& p : spec.ramp_control.periods)
      if (p.speed_mps.size() != spec.ramp_control.routes.size())
        throw Error(ErrorKind::invalid_argument, "ramp control period needs one speed per route");
  }
  std::vector<std::vector<SegmentIndex>> alt_paths;
  const auto& alts = spec.detour_model == DetourModel::ramp_control ? spec.ramp_control.routes : spec.enforcement.alternates;
  if (spec.detour_model == DetourModel::enforcement_hours || spec.detour_model == DetourModel::ramp_control)
    for (const auto& a : alts) alt_paths.push_back(path_through(net, a.stops));
  std::set<SegmentIndex> closed;
  for (const auto& id : spec.closure.closed_segments) closed.insert(net.segment_index(id));

  // Demand: Poisson count per od and day, uniform departures within the window.
  Rng demand_rng = stream_rng(spec.seed, 0);
  std::vector<detail::Departure> deps;
  std::uint64_t draw = 0;
  for (int day = 0; day < spec.days; ++day) {
    const absl::CivilDay d = first_day + day;
    const auto wd = absl::GetWeekday(d);
    const bool weekend = wd == absl::Weekday::saturday || wd == absl::Weekday::sunday;
    for (std::size_t od = 0; od < spec.od_pairs.size(); ++od) {
      const double rate = spec.od_pairs[od].trips_per_day * (weekend ? spec.weekend_multiplier : 1.0);
      const long n = rate > 0.0 ? std::poisson_distribution<long>(rate)(demand_rng) : 0;
      for (long i = 0; i < n; ++i) {
        const double minute = uniform(demand_rng, spec.demand_window.start, spec.demand_window.end);
        const Instant midnight = local_to_instant(absl::CivilSecond(d), tz);
        deps.push_back({midnight + Millis{std::llround(minute * 60000.0)}, od, draw++});
      }
    }
  }
  std::sort(deps.begin(), deps.end(), [](const auto& a, const auto& b) {
    return a.t != b.t ? a.t < b.t : a.draw < b.draw;
  });

  const int width = std::max<int>(6, static_cast<int>(std::to_string(deps.size()).size()));
  struct Built {
    GroundTruthTrip truth;
    std::optional<Trip> probe;
    std::vector<CountRecord> counts;
  };
  std::vector<Built> built(deps.size());
  std::map<std::string, SegmentIndex> station_seg;
  for (const auto& st : spec.stations) station_seg[st.station_id] = net.segment_index(st.segment_id);

  parallel_for(deps.size(), threads, [&](std::size_t i) {
    Rng rng = stream_rng(spec.seed, 1 + i);
    const auto& dep = deps[i];
    const OdDemand& od = spec.od_pairs[dep.od];
    std::string id = std::to_string(i + 1);
    id = "T" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), width), '0') + id;

    GroundTruthTrip gt{id, od.label, false, dep.t, primary[dep.od], false};
    double speed = spec.speed_mps;
    const int minute = detail::local_minute(dep.t, tz);
    switch (spec.detour_model) {
      case DetourModel::none: break;
      case DetourModel::enforcement_hours: {
        const bool active = std::any_of(spec.enforcement.active.begin(), spec.enforcement.active.end(),
                                        [&](const MinuteWindow& w) { return w.contains(minute); });
        const double u = uniform(rng);
        if (active && u < spec.enforcement.avoidance_probability) {
          const Alternate& a = detail::pick_weighted(spec.enforcement.alternates, rng);
          const auto k = static_cast<std::size_t>(&a - spec.enforcement.alternates.data());
          gt.path = alt_paths[k];
          gt.route_label = a.label;
          gt.detour = true;
        }
        break;
      }
      case DetourModel::ramp_control: {
        std::size_t choice = 0;
        for (const auto& period : spec.ramp_control.periods) {
          if (!period.window.contains(minute)) continue;
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t r = 0; r < alt_paths.size(); ++r) {
            const double tt = net.path_length(alt_paths[r]) / period.speed_mps[r];
            if (tt < best) {
              best = tt;
              choice = r;
            }
          }
          speed = period.speed_mps[choice];
          break;
        }
        gt.path = alt_paths[choice];
        gt.route_label = spec.ramp_control.routes[choice].label;
        gt.detour = choice != 0;
        break;
      }
      case DetourModel::closure: {
        if (dep.t >= spec.closure.start && dep.t < spec.closure.end) {
          auto p = node_path(net, require_node(net, od.origin), require_node(net, od.destination), closed);
          if (!p) throw Error(ErrorKind::invalid_argument, "closure disconnects " + od.origin + " -> " + od.destination);
          if (*p != gt.path) {
            gt.path = std::move(*p);
            gt.route_label = spec.closure.label;
            gt.detour = true;
          }
        }
        break;
      }
    }

    TripShape shape{0.0, 0.0, speed, spec.waypoint_period_s, spec.noise_sigma_m};
    shape = random_offsets(net, gt.path, shape, rng);
    gt.probe = uniform(rng) < spec.penetration;
    Built& b = built[i];
    if (gt.probe) b.probe = sample_trip(net, gt.path, id, dep.t, shape, rng);

    // Stations record the full population at the segment midpoint.
    const PathWalker walk(net, gt.path);
    for (const auto& [station, seg] : station_seg) {
      for (std::size_t k = 0; k < gt.path.size(); ++k) {
        if (gt.path[k] != seg) continue;
        const double d = walk.segment_start(k) + 0.5 * net.segment(seg).length_m - shape.start_offset_m;
        if (d < 0.0) break;
        CountRecord r;
        r.station_id = station;
        r.t = dep.t + Millis{std::llround(d / speed * 1000.0)};
        r.vehicle_class = spec.cmv_class_codes[static_cast<std::size_t>(
            std::uniform_int_distribution<std::size_t>(0, spec.cmv_class_codes.size() - 1)(rng))];
        r.extra = {{"weight_lb", format_fixed(uniform(rng, 20000.0, 80000.0), 0)},
                   {"speed_mph", format_fixed(speed * 2.2369362920544, 1)}};
        b.counts.push_back(std::move(r));
        break;
      }
    }
    b.truth = std::move(gt);
  });

  ScenarioOutput out;
  for (auto& b : built) {
    if (b.probe) out.trips.push_back(std::move(*b.probe));
    for (auto& c : b.counts) out.counts.push_back(std::move(c));
    out.truth.push_back(std::move(b.truth));
  }

  // Passenger records exercise downstream class filtering.
  Rng pax_rng = stream_rng(spec.seed, 1 + deps.size() + 1);
  for (const auto& st : spec.stations)
    for (int day = 0; day < spec.days && spec.passenger_per_day > 0.0; ++day) {
      const Instant midnight = local_to_instant(absl::CivilSecond(first_day + day), tz);
      const long n = std::poisson_distribution<long>(spec.passenger_per_day)(pax_rng);
      for (long i = 0; i < n; ++i)
        out.counts.push_back({st.station_id, midnight + Millis{std::llround(uniform(pax_rng, 0.0, 86400.0) * 1000.0)},
                              spec.passenger_class, {{"weight_lb", "4000"}, {"speed_mph", "60.0"}}});
    }
  std::stable_sort(out.counts.begin(), out.counts.end(), [](const auto& a, const auto& b) {
    return a.station_id != b.station_id ? a.station_id < b.station_id : a.t < b.t;
  });

  // Ground-truth station tallies straight from the generator's bookkeeping.
  const std::set<int> cmv(spec.cmv_class_codes.begin(), spec.cmv_class_codes.end());
  for (const auto& st : spec.stations) {
    DailyCountSeries s{st.station_id, spec.timezone, {}};
    std::map<absl::CivilDay, long long> tally;
    for (int day = 0; day < spec.days; ++day) tally[first_day + day] = 0;
    for (const auto& r : out.counts)
      if (r.station_id == st.station_id && cmv.count(r.vehicle_class)) ++tally[local_day(r.t, tz)];
    for (const auto& [d, n] : tally) s.days.push_back({d, n});
    out.station_daily.push_back(std::move(s));
  }
  return out;
}

/// Drops each interior fix independently with probability drop_rate.
inline std::vector<Trip> degrade(std::span<const Trip> trips, double drop_rate, std::uint64_t seed) {
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw Error(ErrorKind::invalid_argument, "drop rate must lie in [0, 1)");
  std::vector<Trip> out;
  out.reserve(trips.size());
  for (std::size_t i = 0; i < trips.size(); ++i) {
    Rng rng = stream_rng(seed, i);
    const Trip& src = trips[i];
    Trip t{src.trip_id, src.vehicle_class, {}};
    for (std::size_t k = 0; k < src.waypoints.size(); ++k) {
      const bool endpoint = k == 0 || k + 1 == src.waypoints.size();
      const double u = uniform(rng);
      if (endpoint || u >= drop_rate) t.waypoints.push_back(src.waypoints[k]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Ground truth sidecar: trip_id,route_label,detour_flag,departure,probe,path

inline void write_ground_truth(std::ostream& os, std::span<const GroundTruthTrip> truth, const RoadNetwork& net) {
  csv::write_record(os, {"trip_id", "route_label", "detour_flag", "departure", "probe", "path"});
  for (const auto& g : truth) {
    std::string path;
    for (SegmentIndex s : g.path) {
      if (!path.empty()) path += ';';
      path += net.segment(s).id;
    }
    csv::write_record(os, {g.trip_id, g.route_label, g.detour ? "1" : "0", format_instant(g.departure),
                           g.probe ? "1" : "0", path});
  }
}

// ---------------------------------------------------------------------------
// Scenario documents

namespace detail {

inline MinuteWindow window_from_json(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

inline Alternate alternate_from_json(const nlohmann::json& j) {
  return {j.at("label").get<std::string>(), j.at("stops").get<std::vector<std::string>>(), j.value("weight", 1.0)};
}

}  // namespace detail

/// Scenario file schema (all keys but od_pairs optional):
/// { "network": "grid5x5" | path, "od_pairs": [{origin, destination, trips_per_day, label}],
///   "detour_model": {"kind": "none"|"enforcement_hours"|"ramp_control"|"closure", ...},
///   "penetration", "noise_sigma_m", "waypoint_period_s", "seed", "start_date", "days",
///   "timezone", "demand_window": [start_min, end_min], "weekend_multiplier", "speed_mps",
///   "stations": [{station_id, segment_id}], "cmv_class_codes", "passenger_class", "passenger_per_day" }
inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  try {
    for (const auto& od : j.at("od_pairs"))
      s.od_pairs.push_back({od.at("origin").get<std::string>(), od.at("destination").get<std::string>(),
                            od.at("trips_per_day").get<double>(), od.value("label", std::string("primary"))});
    if (j.contains("detour_model")) {
      const auto& m = j.at("detour_model");
      const std::string kind = m.value("kind", std::string("none"));
      if (kind == "none") {
        s.detour_model = DetourModel::none;
      } else if (kind == "enforcement_hours") {
        s.detour_model = DetourModel::enforcement_hours;
        for (const auto& w : m.at("active")) s.enforcement.active.push_back(detail::window_from_json(w));
        s.enforcement.avoidance_probability = m.at("avoidance_probability").get<double>();
        for (const auto& a : m.at("alternates")) s.enforcement.alternates.push_back(detail::alternate_from_json(a));
      } else if (kind == "ramp_control") {
        s.detour_model = DetourModel::ramp_control;
        for (const auto& a : m.at("routes")) s.ramp_control.routes.push_back(detail::alternate_from_json(a));
        for (const auto& p : m.at("periods"))
          s.ramp_control.periods.push_back({detail::window_from_json(p.at("window")),
                                            p.at("speed_mps").get<std::vector<double>>()});
      } else if (kind == "closure") {
        s.detour_model = DetourModel::closure;
        s.closure.closed_segments = m.at("closed_segments").get<std::vector<std::string>>();
        s.closure.start = parse_instant(m.at("start").get<std::string>());
        s.closure.end = parse_instant(m.at("end").get<std::string>());
        s.closure.label = m.value("label", s.closure.label);
      } else {
        throw Error(ErrorKind::parse, "unknown detour model '" + kind + "'");
      }
    }
    s.penetration = j.value("penetration", s.penetration);
    s.noise_sigma_m = j.value("noise_sigma_m", s.noise_sigma_m);
    s.waypoint_period_s = j.value("waypoint_period_s", s.waypoint_period_s);
    s.seed = j.value("seed", s.seed);
    s.start_date = j.value("start_date", s.start_date);
    s.days = j.value("days", s.days);
    s.timezone = j.value("timezone", s.timezone);
    if (j.contains("demand_window")) s.demand_window = detail::window_from_json(j.at("demand_window"));
    s.weekend_multiplier = j.value("weekend_multiplier", s.weekend_multiplier);
    s.speed_mps = j.value("speed_mps", s.speed_mps);
    if (j.contains("stations"))
      for (const auto& st : j.at("stations"))
        s.stations.push_back({st.at("station_id").get<std::string>(), st.at("segment_id").get<std::string>()});
    s.cmv_class_codes = j.value("cmv_class_codes", s.cmv_class_codes);
    s.passenger_class = j.value("passenger_class", s.passenger_class);
    s.passenger_per_day = j.value("passenger_per_day", s.passenger_per_day);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed scenario: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace tripscope::synth
