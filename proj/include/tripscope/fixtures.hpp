#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tripscope/gates.hpp"
#include "tripscope/synth.hpp"

// Constructed corridors mirroring the three detour case studies, plus the
// lattice workloads used for fidelity and throughput checks.

namespace tripscope::fixtures {

struct Fixture {
  NetworkRecords network;
  std::vector<Trip> trips;
  std::vector<synth::GroundTruthTrip> truth;
  std::vector<std::pair<std::string, QueryDocument>> queries;  // file stem, document
};

namespace detail {

struct Planar {
  std::string id;
  double x, y;
};

struct Road {
  std::string id, from, to, name;
  RoadClass cls;
};

inline NetworkRecords build_records(LatLon origin, const std::vector<Planar>& nodes, const std::vector<Road>& roads) {
  const LocalFrame frame(origin);
  NetworkRecords rec;
  auto pos = [&](const std::string& id) {
    for (const auto& n : nodes)
      if (n.id == id) return frame.unproject({n.x, n.y});
    throw Error(ErrorKind::referential, "fixture node '" + id + "' missing");
  };
  for (const auto& n : nodes) rec.nodes.push_back({n.id, frame.unproject({n.x, n.y})});
  for (const auto& r : roads) rec.lines.push_back({r.id, r.from, r.to, {pos(r.from), pos(r.to)}, r.name, r.cls, true});
  return rec;
}

inline Gate planar_gate(LatLon origin, std::string id, Vec2 a, Vec2 b) {
  const LocalFrame frame(origin);
  return {std::move(id), {frame.unproject(a), frame.unproject(b)}, CrossingSense::left_to_right};
}

inline std::vector<LatLon> planar_ring(LatLon origin, std::vector<Vec2> pts) {
  const LocalFrame frame(origin);
  std::vector<LatLon> ring;
  for (const Vec2& p : pts) ring.push_back(frame.unproject(p));
  ring.push_back(ring.front());
  return ring;
}

inline std::string padded(const std::string& prefix, std::size_t i) {
  std::string n = std::to_string(i);
  return prefix + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Southbound I-270 past a weigh station with five bypass routes.

inline constexpr LatLon kCase1Origin{39.30, -77.30};

inline std::vector<std::pair<std::string, long>> case1_route_counts() {
  return {{"Eisenhower Memorial Highway, I-270", 552}, {"Hyattstown South TWIS", 21}, {"Ridge Road, MD-27", 5},
          {"Dickerson Road, MD-28", 3},           {"Frederick Road, MD-355", 3}, {"Old Hundred Road, MD-109", 1}};
}

inline NetworkRecords case1_network() {
  using detail::Planar;
  using detail::Road;
  const std::string i270 = "Eisenhower Memorial Highway, I-270";
  const std::string twis = "Hyattstown South TWIS";
  const std::string md27 = "Ridge Road, MD-27", md28 = "Dickerson Road, MD-28";
  const std::string md355 = "Frederick Road, MD-355", md109 = "Old Hundred Road, MD-109";
  std::vector<Planar> nodes{{"Z", 0, 2500},        {"N0", 0, 1500},        {"A", 0, 1000},        {"B", 0, 500},
                            {"C", 0, -2500},       {"D", 0, -3000},        {"N1", 0, -4000},      {"T1", 150, 200},
                            {"T2", 150, -2200},    {"W1", -1500, 300},     {"W2", -1500, -2000},  {"E1", 1500, 300},
                            {"E2", 1500, -2000},   {"F1", -3000, 900},     {"F2", -3000, -2500},  {"G1", 3000, 900},
                            {"G2", 3000, -2500}};
  std::vector<Road> roads{{"i270-1", "Z", "N0", i270, RoadClass::motorway},
                          {"i270-2", "N0", "A", i270, RoadClass::motorway},
                          {"i270-3", "A", "B", i270, RoadClass::motorway},
                          {"i270-4", "B", "C", i270, RoadClass::motorway},
                          {"i270-5", "C", "D", i270, RoadClass::motorway},
                          {"i270-6", "D", "N1", i270, RoadClass::motorway},
                          {"twis-1", "B", "T1", twis, RoadClass::ramp},
                          {"twis-2", "T1", "T2", twis, RoadClass::ramp},
                          {"twis-3", "T2", "C", twis, RoadClass::ramp},
                          {"md27-1", "B", "W1", md27, RoadClass::primary},
                          {"md27-2", "W1", "W2", md27, RoadClass::primary},
                          {"md27-3", "W2", "C", md27, RoadClass::primary},
                          {"md355-1", "B", "E1", md355, RoadClass::primary},
                          {"md355-2", "E1", "E2", md355, RoadClass::primary},
                          {"md355-3", "E2", "C", md355, RoadClass::primary},
                          {"md28-1", "A", "F1", md28, RoadClass::primary},
                          {"md28-2", "F1", "F2", md28, RoadClass::primary},
                          {"md28-3", "F2", "C", md28, RoadClass::primary},
                          {"md109-1", "A", "G1", md109, RoadClass::primary},
                          {"md109-2", "G1", "G2", md109, RoadClass::primary},
                          {"md109-3", "G2", "C", md109, RoadClass::primary}};
  return detail::build_records(kCase1Origin, nodes, roads);
}

inline QueryDocument case1_query() {
  QueryDocument q;
  q.gates.push_back(detail::planar_gate(kCase1Origin, "frederick", {-1000, 1250}, {1000, 1250}));
  q.gates.push_back(detail::planar_gate(kCase1Origin, "gaithersburg", {-1000, -2750}, {1000, -2750}));
  q.query.study_area = StudyArea{detail::planar_ring(kCase1Origin, {{-400, 300}, {400, 300}, {400, 1400}, {-400, 1400}})};
  q.query.gate_sequence = {{"frederick", 1}, {"gaithersburg", 1}};
  q.query.time_window = TimeWindow{parse_instant("2022-04-11T04:00:00Z"), parse_instant("2022-04-12T04:00:00Z")};
  q.timezone = "America/New_York";
  return q;
}

/// 585 southbound trips on 2022-04-11. The 33 trips that leave I-270 at the
/// station (21 through it, 12 around it) depart during the 8-9 AM and 3-4 PM
/// enforcement hours; everything else uses I-270 outside those hours.
inline Fixture case1_fixture(std::uint64_t seed = 7, double noise_sigma_m = 5.0) {
  Fixture fx;
  fx.network = case1_network();
  const RoadNetwork net = RoadNetwork::build(fx.network);
  const absl::TimeZone tz = load_zone("America/New_York");
  const absl::CivilDay day(2022, 4, 11);

  const std::map<std::string, std::vector<std::string>> stops{
      {"Eisenhower Memorial Highway, I-270", {"Z", "N0", "A", "B", "C", "D", "N1"}},
      {"Hyattstown South TWIS", {"Z", "B", "T1", "T2", "C", "N1"}},
      {"Ridge Road, MD-27", {"Z", "B", "W1", "W2", "C", "N1"}},
      {"Dickerson Road, MD-28", {"Z", "A", "F1", "F2", "C", "N1"}},
      {"Frederick Road, MD-355", {"Z", "B", "E1", "E2", "C", "N1"}},
      {"Old Hundred Road, MD-109", {"Z", "A", "G1", "G2", "C", "N1"}}};

  synth::Rng rng = synth::stream_rng(seed, 0);
  struct Pending {
    Instant departure;
    std::string label;
  };
  std::vector<Pending> pending;
  const std::vector<int> quiet_hours{0, 1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 12, 13, 14, 16, 17, 18, 19, 20, 21, 22, 23};
  const std::vector<int> active_hours{8, 15};
  for (const auto& [label, count] : case1_route_counts()) {
    const bool primary = label == "Eisenhower Memorial Highway, I-270";
    for (long i = 0; i < count; ++i) {
      const auto& hours = primary ? quiet_hours : active_hours;
      const int hour = hours[static_cast<std::size_t>(i) % hours.size()];
      const double minute = synth::uniform(rng, 5.0, 50.0);
      const Instant t = local_to_instant(absl::CivilSecond(day.year(), day.month(), day.day(), hour, 0, 0), tz) +
                        Millis{std::llround(minute * 60000.0)};
      pending.push_back({t, label});
    }
  }
  std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
    return a.departure != b.departure ? a.departure < b.departure : a.label < b.label;
  });
  for (std::size_t i = 0; i < pending.size(); ++i) {
    synth::Rng trip_rng = synth::stream_rng(seed, i + 1);
    const auto path = synth::path_through(net, stops.at(pending[i].label));
    synth::TripShape shape{0, 0, 25.0, 30.0, noise_sigma_m};
    shape = synth::random_offsets(net, path, shape, trip_rng);
    const std::string id = detail::padded("C1-", i + 1);
    fx.trips.push_back(synth::sample_trip(net, path, id, pending[i].departure, shape, trip_rng));
    fx.truth.push_back({id, pending[i].label, pending[i].label != "Eisenhower Memorial Highway, I-270",
                        pending[i].departure, path, true});
  }
  fx.queries.emplace_back("query", case1_query());
  return fx;
}

// ---------------------------------------------------------------------------
// Eastbound US-50 with two parallel arterial bypasses, observed on a
// baseline Saturday and a Saturday with ramp metering.

inline constexpr LatLon kCase2Origin{38.99, -76.45};

inline NetworkRecords case2_network() {
  using detail::Planar;
  using detail::Road;
  const std::string us50 = "EB US-50", skid = "EB Skidmore Road", college = "EB College Pkwy";
  std::vector<Planar> nodes{{"S", -9000, 0},   {"P0", -8000, 0},   {"P1", -5000, 0},   {"P2", 5000, 0},
                            {"P3", 8000, 0},   {"P4", 9000, 0},    {"K1", -4500, -1500}, {"K2", 4500, -1500},
                            {"L1", -4500, 1500}, {"L2", 4500, 1500}};
  std::vector<Road> roads{{"us50-1", "S", "P0", us50, RoadClass::motorway},
                          {"us50-2", "P0", "P1", us50, RoadClass::motorway},
                          {"us50-3", "P1", "P2", us50, RoadClass::motorway},
                          {"us50-4", "P2", "P3", us50, RoadClass::motorway},
                          {"us50-5", "P3", "P4", us50, RoadClass::motorway},
                          {"skid-1", "P1", "K1", skid, RoadClass::secondary},
                          {"skid-2", "K1", "K2", skid, RoadClass::secondary},
                          {"skid-3", "K2", "P2", skid, RoadClass::secondary},
                          {"coll-1", "P1", "L1", college, RoadClass::secondary},
                          {"coll-2", "L1", "L2", college, RoadClass::secondary},
                          {"coll-3", "L2", "P2", college, RoadClass::secondary}};
  return detail::build_records(kCase2Origin, nodes, roads);
}

inline QueryDocument case2_query(const std::string& date) {
  QueryDocument q;
  q.gates.push_back(detail::planar_gate(kCase2Origin, "west", {-6500, -100}, {-6500, 100}));
  q.gates.push_back(detail::planar_gate(kCase2Origin, "east", {6500, -100}, {6500, 100}));
  q.query.gate_sequence = {{"west", 1}, {"east", 1}};
  const absl::TimeZone tz = load_zone("America/New_York");
  const absl::CivilDay d = parse_day(date);
  q.query.time_window = TimeWindow{local_to_instant(absl::CivilSecond(d.year(), d.month(), d.day(), 13, 0, 0), tz),
                                   local_to_instant(absl::CivilSecond(d.year(), d.month(), d.day(), 15, 0, 0), tz)};
  q.timezone = "America/New_York";
  return q;
}

/// Gate-to-gate minutes per trip, by route and period.
struct Case2Plan {
  std::string date;
  std::vector<std::pair<std::string, std::vector<double>>> minutes;
};

inline std::vector<Case2Plan> case2_plan() {
  return {{"2022-07-30",
           {{"EB US-50", {40, 41, 42, 42, 43, 44}}, {"EB Skidmore Road", {15, 17}}, {"EB College Pkwy", {14}}}},
          {"2022-08-06", {{"EB US-50", {24, 25, 25, 25, 26, 25}}, {"EB Skidmore Road", {21, 23}}}}};
}

inline Fixture case2_fixture(std::uint64_t seed = 11, double noise_sigma_m = 0.0) {
  Fixture fx;
  fx.network = case2_network();
  const RoadNetwork net = RoadNetwork::build(fx.network);
  const absl::TimeZone tz = load_zone("America/New_York");
  const std::map<std::string, std::vector<std::string>> stops{{"EB US-50", {"S", "P0", "P1", "P2", "P3", "P4"}},
                                                              {"EB Skidmore Road", {"S", "P1", "K1", "K2", "P2", "P4"}},
                                                              {"EB College Pkwy", {"S", "P1", "L1", "L2", "P2", "P4"}}};
  synth::Rng rng = synth::stream_rng(seed, 0);
  std::size_t serial = 0;
  for (const auto& plan : case2_plan()) {
    const absl::CivilDay d = parse_day(plan.date);
    for (const auto& [label, minutes] : plan.minutes) {
      const auto path = synth::path_through(net, stops.at(label));
      const synth::PathWalker walk(net, path);
      // Gates sit 1.5 km into the second segment and 1.5 km into the
      // segment after the merge.
      const double west_at = walk.segment_start(1) + 1500.0;
      const double east_at = walk.segment_start(path.size() - 2) + 1500.0;
      for (double m : minutes) {
        ++serial;
        synth::Rng trip_rng = synth::stream_rng(seed, serial);
        synth::TripShape shape{0, 0, (east_at - west_at) / (m * 60.0), 30.0, noise_sigma_m};
        shape = synth::random_offsets(net, path, shape, trip_rng);
        // Depart so the west gate is passed between 13:10 and 14:00 local.
        const double at_gate_min = synth::uniform(rng, 10.0, 60.0);
        const Instant gate_time = local_to_instant(absl::CivilSecond(d.year(), d.month(), d.day(), 13, 0, 0), tz) +
                                  Millis{std::llround(at_gate_min * 60000.0)};
        const Instant dep = gate_time - Millis{std::llround((west_at - shape.start_offset_m) / shape.speed_mps * 1000.0)};
        const std::string id = detail::padded("C2-", serial);
        fx.trips.push_back(synth::sample_trip(net, path, id, dep, shape, trip_rng));
        fx.truth.push_back({id, label, label != "EB US-50", dep, path, true});
      }
    }
  }
  fx.queries.emplace_back("query_baseline", case2_query("2022-07-30"));
  fx.queries.emplace_back("query_control", case2_query("2022-08-06"));
  return fx;
}

// ---------------------------------------------------------------------------
// Lattice workloads

struct LatticeTrip {
  Trip trip;
  std::vector<SegmentIndex> path;
};

/// Random node-to-node shortest-path trips on a lattice with Manhattan
/// separation in [min_hops, max_hops].
inline std::vector<LatticeTrip> lattice_trips(const RoadNetwork& net, int rows, int cols, std::size_t n, int min_hops,
                                              int max_hops, const synth::TripShape& base, std::uint64_t seed,
                                              Instant day_start = parse_instant("2022-03-01T12:00:00Z")) {
  std::vector<LatticeTrip> out;
  synth::Rng pick = synth::stream_rng(seed, 0);
  std::uniform_int_distribution<int> rdist(0, rows - 1), cdist(0, cols - 1);
  while (out.size() < n) {
    const int r0 = rdist(pick), c0 = cdist(pick), r1 = rdist(pick), c1 = cdist(pick);
    const int hops = std::abs(r0 - r1) + std::abs(c0 - c1);
    if (hops < min_hops || hops > max_hops) continue;
    auto node = [](int r, int c) { return "n" + std::to_string(r) + "_" + std::to_string(c); };
    auto path = synth::node_path(net, *net.find_node(node(r0, c0)), *net.find_node(node(r1, c1)));
    const std::size_t i = out.size();
    synth::Rng rng = synth::stream_rng(seed, i + 1);
    auto shape = synth::random_offsets(net, *path, base, rng);
    const Instant dep = day_start + Millis{static_cast<long long>(i) * 7000};
    out.push_back({synth::sample_trip(net, *path, detail::padded("L-", i + 1), dep, shape, rng), *path});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weigh-station corridor for probe-vs-count validation

inline constexpr LatLon kStationOrigin{39.10, -76.90};

struct StationScenario {
  NetworkRecords network;
  synth::ScenarioSpec spec;
  QueryDocument gate_document;  // one gate across the station segment
  std::string station_id;
};

/// A year (52 Monday-start weeks) of eastbound corridor traffic past one
/// station: ~800 trucks per weekday, weekends at 40%, 10% probe penetration.
inline StationScenario station_scenario(std::uint64_t seed = 1, int days = 364) {
  StationScenario sc;
  sc.network = synth::grid_network(2, 6, 500.0, kStationOrigin);
  sc.station_id = "VWS-1";
  synth::ScenarioSpec& s = sc.spec;
  s.od_pairs = {{"n0_0", "n0_5", 800.0, "corridor"}};
  s.penetration = 0.1;
  s.noise_sigma_m = 5.0;
  s.waypoint_period_s = 30.0;
  s.seed = seed;
  s.start_date = "2022-01-03";
  s.days = days;
  s.weekend_multiplier = 0.4;
  s.speed_mps = 22.0;
  s.stations = {{sc.station_id, "h0_2:f"}};
  s.cmv_class_codes = {5, 6, 7, 8, 9, 10};
  s.passenger_class = 2;
  s.passenger_per_day = 300.0;

  QueryDocument& q = sc.gate_document;
  q.gates.push_back(detail::planar_gate(kStationOrigin, "station", {1250, -100}, {1250, 100}));
  q.query.gate_sequence = {{"station", 1}};
  q.timezone = s.timezone;
  return sc;
}

// ---------------------------------------------------------------------------
// Throughput workload: 36 x 36 lattice (5,040 directed segments).

inline constexpr LatLon kPerfOrigin{39.50, -77.60};
inline constexpr int kPerfSide = 36;
inline constexpr double kPerfSpacing = 200.0;

inline NetworkRecords perf_network() { return synth::grid_network(kPerfSide, kPerfSide, kPerfSpacing, kPerfOrigin); }

/// Eastbound screen-line pair at a quarter and three quarters of the width.
inline QueryDocument perf_query() {
  const double w = (kPerfSide - 1) * kPerfSpacing;
  const double h = (kPerfSide - 1) * kPerfSpacing;
  QueryDocument q;
  q.gates.push_back(detail::planar_gate(kPerfOrigin, "west", {0.25 * w + 100, -50}, {0.25 * w + 100, h + 50}));
  q.gates.push_back(detail::planar_gate(kPerfOrigin, "east", {0.75 * w + 100, -50}, {0.75 * w + 100, h + 50}));
  q.query.gate_sequence = {{"west", 1}, {"east", 1}};
  q.timezone = "UTC";
  return q;
}

/// n trips of ~100 fixes each (15 m/s sampled every 5 s over 7-8 km).
inline std::vector<Trip> perf_trips(const RoadNetwork& net, std::size_t n, std::uint64_t seed = 3) {
  synth::TripShape shape{0, 0, 15.0, 5.0, 5.0};
  std::vector<Trip> out;
  for (auto& lt : lattice_trips(net, kPerfSide, kPerfSide, n, 37, 40, shape, seed)) out.push_back(std::move(lt.trip));
  return out;
}

}  // namespace tripscope::fixtures
