#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tripscope/analytics.hpp"
#include "tripscope/digest.hpp"
#include "tripscope/gates.hpp"
#include "tripscope/matcher.hpp"
#include "tripscope/routes.hpp"

// The single analysis path behind both the CLI and the HTTP service.

namespace tripscope {

inline std::string query_id(const QueryDocument& doc) { return sha256_hex(query_to_json(doc).dump()); }

struct AnalysisResult {
  QueryDocument doc;
  std::string query_id;
  TripSet trip_set;
  std::vector<MatchedTrip> matched;  // trip_set members that matched, trip_set order
  std::vector<Rejection> rejected;
  std::vector<std::string> empty_clips;
  std::vector<RouteSignature> signatures;
  std::vector<RouteSet> route_sets;
  RouteShareTable shares;
  TravelTimeStats travel_times;
  HourlyMatrix hourly;
};

/// Filters `trips` with the query, matches the survivors (or looks them up in
/// `prematched`), clips at the outer gate crossings, folds and tabulates.
inline AnalysisResult analyze(const RoadNetwork& net, std::span<const Trip> trips, const QueryDocument& doc,
                              const MatchParams& params = {}, unsigned threads = 1,
                              const std::vector<MatchedTrip>* prematched = nullptr) {
  AnalysisResult r;
  r.doc = doc;
  r.query_id = query_id(doc);
  r.trip_set = filter_trips(trips, doc.gates, doc.query, threads);

  if (prematched) {
    std::unordered_map<std::string, const MatchedTrip*> by_id;
    for (const auto& m : *prematched) by_id.emplace(m.trip_id, &m);
    for (const auto& p : r.trip_set) {
      auto it = by_id.find(p.trip_id);
      if (it != by_id.end())
        r.matched.push_back(*it->second);
      else
        r.rejected.push_back({p.trip_id, RejectReason::no_candidates});
    }
  } else {
    std::unordered_map<std::string, const Trip*> by_id;
    for (const auto& t : trips) by_id.emplace(t.trip_id, &t);
    std::vector<Trip> selected;
    selected.reserve(r.trip_set.size());
    for (const auto& p : r.trip_set) selected.push_back(*by_id.at(p.trip_id));
    CorpusMatch cm = match_corpus(selected, net, params, threads);
    r.matched = std::move(cm.matched);
    r.rejected = std::move(cm.rejected);
  }

  std::unordered_map<std::string, const TripPass*> pass_of;
  for (const auto& p : r.trip_set) pass_of.emplace(p.trip_id, &p);
  for (const auto& m : r.matched) {
    auto sig = extract_signature(m, pass_of.at(m.trip_id)->chain, net);
    if (sig)
      r.signatures.push_back(std::move(*sig));
    else
      r.empty_clips.push_back(m.trip_id);
  }
  r.route_sets = fold_routes(r.signatures, doc.theta, net);
  r.shares = route_share_table(r.route_sets);
  r.travel_times = travel_time_stats(r.trip_set, r.route_sets);
  r.hourly = hourly_route_counts(r.trip_set, r.route_sets, doc.timezone, doc.hour_bin_minutes);
  return r;
}

// ---------------------------------------------------------------------------
// Structured report

inline nlohmann::json trip_set_to_json(const TripSet& ts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : ts) {
    nlohmann::json chain = nlohmann::json::array();
    for (const auto& c : p.chain) chain.push_back({{"gate", c.gate_id}, {"t", format_instant(c.t)}, {"sign", c.sign}});
    arr.push_back({{"trip_id", p.trip_id}, {"anchor", format_instant(p.anchor)}, {"chain", chain}});
  }
  return arr;
}

inline nlohmann::json shares_to_json(const RouteShareTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"route_id", r.route_id}, {"label", r.label}, {"trips", r.trips}, {"percent", r.percent},
                    {"display", r.display}});
  return {{"rows", rows}, {"total", t.total}};
}

inline RouteShareTable shares_from_json(const nlohmann::json& j) {
  try {
    RouteShareTable t;
    t.total = j.at("total").get<long long>();
    for (const auto& r : j.at("rows"))
      t.rows.push_back({r.at("route_id").get<std::string>(), r.at("label").get<std::string>(),
                        r.at("trips").get<long long>(), r.at("percent").get<double>(),
                        r.at("display").get<std::string>()});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed share table: ") + e.what());
  }
}

inline nlohmann::json travel_times_to_json(const TravelTimeStats& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"route_id", r.route_id}, {"label", r.label}, {"n_trips", r.n_trips},
                    {"mean_minutes", r.mean_minutes}});
  return {{"first_gate", s.first_gate}, {"last_gate", s.last_gate}, {"rows", rows}};
}

inline nlohmann::json hourly_to_json(const HourlyMatrix& m) {
  return {{"bin_minutes", m.bin_minutes}, {"labels", m.labels}, {"counts", m.counts}};
}

inline nlohmann::json comparison_to_json(const ShareComparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"label", r.label}, {"share_a", r.share_a}, {"share_b", r.share_b}, {"delta_pp", r.delta_pp},
                    {"display", format_delta_pp(r.delta_pp)}});
  return {{"rows", rows}};
}

/// Report document; `inputs` carries content hashes (no timestamps) so that
/// reruns are byte-identical.
inline nlohmann::json report_to_json(const AnalysisResult& r, const RoadNetwork& net,
                                     const nlohmann::json& inputs = nlohmann::json::object()) {
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& x : r.rejected) rejected.push_back({{"trip_id", x.trip_id}, {"reason", to_string(x.reason)}});
  return {{"query_id", r.query_id},
          {"query", query_to_json(r.doc)},
          {"inputs", inputs},
          {"trip_count", r.trip_set.size()},
          {"trips", trip_set_to_json(r.trip_set)},
          {"route_sets", route_sets_to_json(r.route_sets, net)},
          {"shares", shares_to_json(r.shares)},
          {"travel_times", travel_times_to_json(r.travel_times)},
          {"hourly", hourly_to_json(r.hourly)},
          {"diagnostics", {{"rejected", rejected}, {"empty_clips", r.empty_clips}}}};
}

// ---------------------------------------------------------------------------
// Probe-vs-station validation

struct ValidationRequest {
  std::string station_id;
  Gate gate;
  int sign = 1;
  std::string timezone = "America/New_York";
  std::set<int> cmv_classes{5, 6, 7, 8, 9, 10, 11, 12, 13};
};

struct ValidationResult {
  DailyCountSeries probe;
  DailyCountSeries truth;
  WeeklyCorrelations weekly;
  BoxSummary box;
};

inline ValidationResult validate_station(std::span<const Trip> trips, std::span<const CountRecord> counts,
                                         const ValidationRequest& req, unsigned threads = 1) {
  std::vector<CountRecord> mine;
  for (const auto& c : counts)
    if (c.station_id == req.station_id) mine.push_back(c);
  if (mine.empty()) throw Error(ErrorKind::no_overlap, "no count records for station '" + req.station_id + "'");
  ValidationResult v;
  v.truth = daily_aggregate(mine, req.cmv_classes, req.timezone);
  TripQuery q;
  q.gate_sequence = {{req.gate.gate_id, req.sign}};
  const std::vector<Gate> gates{req.gate};
  const TripSet passes = filter_trips(trips, gates, q, threads);
  v.probe = probe_daily_counts(passes, req.station_id, req.timezone, v.truth.days.front().day,
                               v.truth.days.back().day);
  v.weekly = weekly_correlations(v.probe, v.truth);
  v.box = box_summary(v.weekly.points);
  return v;
}

inline nlohmann::json validation_to_json(const ValidationResult& v) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : v.weekly.points)
    points.push_back({{"station_id", p.station_id},
                      {"week_index", p.week_index},
                      {"week_start", format_day(p.week_start)},
                      {"r", p.r ? nlohmann::json(*p.r) : nlohmann::json()},
                      {"n_days", p.n_days}});
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& d : v.weekly.skipped_weeks) skipped.push_back(format_day(d));
  return {{"station_id", v.truth.station_id},
          {"points", points},
          {"skipped_weeks", skipped},
          {"box", {{"min", v.box.min}, {"q1", v.box.q1}, {"median", v.box.median}, {"q3", v.box.q3},
                   {"max", v.box.max}, {"n", v.box.n}, {"n_undefined", v.box.n_undefined}}}};
}

}  // namespace tripscope
