#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tripscope/error.hpp"
#include "tripscope/geo.hpp"
#include "tripscope/ingest.hpp"
#include "tripscope/parallel.hpp"
#include "tripscope/time.hpp"

namespace tripscope {

/// Which side-to-side passage over the directed gate polyline counts as +1.
/// "Left" is the left-hand side when walking the polyline from its first to
/// its last vertex.
enum class CrossingSense { left_to_right, right_to_left };

struct Gate {
  std::string gate_id;
  std::vector<LatLon> line;
  CrossingSense positive = CrossingSense::left_to_right;
};

struct StudyArea {
  std::vector<LatLon> ring;  // closed: first == last
};

struct GateCrossing {
  std::string trip_id;
  std::string gate_id;
  Instant t;
  int sign = 1;

  friend bool operator==(const GateCrossing&, const GateCrossing&) = default;
};

struct GateRequirement {
  std::string gate_id;
  int sign = 1;
};

struct TimeWindow {
  Instant start;  // inclusive
  Instant end;    // exclusive
};

struct TripQuery {
  std::optional<StudyArea> study_area;
  std::vector<GateRequirement> gate_sequence;
  std::optional<TimeWindow> time_window;
  bool require_order = true;
};

/// A trip that satisfied a query. `anchor` is its first qualifying crossing
/// of the first gate; `chain` is the tightest crossing sequence (last
/// crossing of each gate before the earliest completion of the next).
struct TripPass {
  std::string trip_id;
  Instant anchor;
  std::vector<GateCrossing> chain;

  friend bool operator==(const TripPass&, const TripPass&) = default;
};

using TripSet = std::vector<TripPass>;

/// Gate projected into a tangent plane anchored at its first vertex.
class GateGeometry {
 public:
  explicit GateGeometry(const Gate& gate) : gate_(&gate), frame_(gate.line.front()) {
    for (const LatLon& p : gate.line) {
      pts_.push_back(frame_.project(p));
      box_.extend(pts_.back());
    }
  }

  const Gate& gate() const { return *gate_; }
  const LocalFrame& frame() const { return frame_; }
  std::span<const Vec2> points() const { return pts_; }
  const BoundingBox& box() const { return box_; }

 private:
  const Gate* gate_;
  LocalFrame frame_;
  std::vector<Vec2> pts_;
  BoundingBox box_;
};

inline void validate_gate(const Gate& g) {
  if (g.line.size() < 2) throw Error(ErrorKind::geometry, "gate '" + g.gate_id + "' needs at least two points");
  if (!(polyline_length_m(g.line) > 0.0)) throw Error(ErrorKind::geometry, "gate '" + g.gate_id + "' has zero length");
}

inline Instant interpolate_time(Instant a, Instant b, double s) {
  const double ta = static_cast<double>(a.time_since_epoch().count());
  const double tb = static_cast<double>(b.time_since_epoch().count());
  return Instant{Millis{std::llround(ta + s * (tb - ta))}};
}

/// One crossing per waypoint chord that meets the gate polyline. A chord
/// touching the gate counts; a chord ending exactly on the gate does not, so a
/// waypoint on the line is credited to the following chord.
inline std::vector<GateCrossing> detect_crossings(const Trip& trip, const GateGeometry& geom) {
  std::vector<GateCrossing> out;
  const auto& w = trip.waypoints;
  if (w.size() < 2) return out;
  const auto gp = geom.points();
  Vec2 prev = geom.frame().project(w[0].pos);
  for (std::size_t k = 1; k < w.size(); ++k) {
    const Vec2 cur = geom.frame().project(w[k].pos);
    BoundingBox chord;
    chord.extend(prev);
    chord.extend(cur);
    if (chord.overlaps(geom.box())) {
      std::optional<SegmentHit> best;
      double best_cross = 0.0;
      for (std::size_t g = 1; g < gp.size(); ++g) {
        auto hit = intersect_segments(prev, cur, gp[g - 1], gp[g]);
        if (!hit || hit->s >= 1.0) continue;
        if (!best || hit->s < best->s) {
          best = hit;
          best_cross = cross(gp[g] - gp[g - 1], cur - prev);
        }
      }
      if (best) {
        // Negative cross product: chord runs from the left side to the right side.
        int sign = best_cross < 0.0 ? 1 : -1;
        if (geom.gate().positive == CrossingSense::right_to_left) sign = -sign;
        out.push_back({trip.trip_id, geom.gate().gate_id, interpolate_time(w[k - 1].t, w[k].t, best->s), sign});
      }
    }
    prev = cur;
  }
  return out;
}

inline std::vector<GateCrossing> detect_crossings(const Trip& trip, const Gate& gate) {
  validate_gate(gate);
  return detect_crossings(trip, GateGeometry(gate));
}

class StudyAreaGeometry {
 public:
  explicit StudyAreaGeometry(const StudyArea& area) : frame_(area.ring.front()) {
    for (const LatLon& p : area.ring) ring_.push_back(frame_.project(p));
    if (ring_.size() > 1) ring_.pop_back();  // drop the closing vertex
  }
  bool contains(LatLon p) const { return point_in_ring(frame_.project(p), ring_); }

 private:
  LocalFrame frame_;
  std::vector<Vec2> ring_;
};

inline void validate_study_area(const StudyArea& area) {
  const auto& r = area.ring;
  if (r.size() < 4 || !(r.front() == r.back()))
    throw Error(ErrorKind::geometry, "study area ring must be closed with at least three distinct vertices");
  const LocalFrame frame(r.front());
  std::vector<Vec2> p;
  for (const LatLon& q : r) p.push_back(frame.project(q));
  double twice_area = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) twice_area += cross(p[i - 1], p[i]);
  if (!(std::abs(twice_area) > 0.0)) throw Error(ErrorKind::geometry, "study area has zero area");
  const std::size_t n = p.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (intersect_segments(p[i], p[i + 1], p[j], p[j + 1]))
        throw Error(ErrorKind::geometry, "study area ring intersects itself");
    }
}

namespace detail {

inline std::optional<TripPass> evaluate_trip(const Trip& trip, const TripQuery& q,
                                             const std::map<std::string, GateGeometry>& gates,
                                             const std::optional<StudyAreaGeometry>& area) {
  if (area) {
    const bool inside = std::any_of(trip.waypoints.begin(), trip.waypoints.end(),
                                    [&](const Waypoint& w) { return area->contains(w.pos); });
    if (!inside) return std::nullopt;
  }
  std::map<std::string, std::vector<GateCrossing>> crossings;
  std::vector<std::vector<const GateCrossing*>> per_req;
  for (const auto& req : q.gate_sequence) {
    auto it = crossings.find(req.gate_id);
    if (it == crossings.end()) it = crossings.emplace(req.gate_id, detect_crossings(trip, gates.at(req.gate_id))).first;
    std::vector<const GateCrossing*> ok;
    for (const auto& c : it->second)
      if (c.sign == req.sign) ok.push_back(&c);
    if (ok.empty()) return std::nullopt;
    per_req.push_back(std::move(ok));
  }

  TripPass pass;
  pass.trip_id = trip.trip_id;
  const std::size_t n = per_req.size();
  if (q.require_order) {
    // Earliest completion, then tighten backwards.
    std::vector<const GateCrossing*> fwd(n);
    for (std::size_t i = 0; i < n; ++i) {
      const GateCrossing* found = nullptr;
      for (const auto* c : per_req[i])
        if (i == 0 || c->t > fwd[i - 1]->t) {
          found = c;
          break;
        }
      if (!found) return std::nullopt;
      fwd[i] = found;
    }
    std::vector<const GateCrossing*> tight(n);
    tight[n - 1] = fwd[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
      const GateCrossing* found = nullptr;
      for (const auto* c : per_req[i])
        if (c->t < tight[i + 1]->t) found = c;
      tight[i] = found;
    }
    pass.anchor = fwd[0]->t;
    for (const auto* c : tight) pass.chain.push_back(*c);
  } else {
    pass.anchor = per_req[0][0]->t;
    for (const auto& v : per_req) {
      pass.chain.push_back(*v[0]);
      pass.anchor = std::min(pass.anchor, v[0]->t);
    }
  }
  if (q.time_window && !(pass.anchor >= q.time_window->start && pass.anchor < q.time_window->end))
    return std::nullopt;
  return pass;
}

}  // namespace detail

inline void validate_query(const TripQuery& q, std::span<const Gate> gates) {
  if (q.gate_sequence.empty()) throw Error(ErrorKind::invalid_argument, "gate sequence must not be empty");
  for (const auto& req : q.gate_sequence) {
    if (req.sign != 1 && req.sign != -1)
      throw Error(ErrorKind::invalid_argument, "gate sign must be +1 or -1");
    if (std::none_of(gates.begin(), gates.end(), [&](const Gate& g) { return g.gate_id == req.gate_id; }))
      throw Error(ErrorKind::unknown_gate, "unknown gate '" + req.gate_id + "'");
  }
  if (q.time_window && !(q.time_window->start < q.time_window->end))
    throw Error(ErrorKind::invalid_argument, "time window start must precede end");
  if (q.study_area) validate_study_area(*q.study_area);
  for (const Gate& g : gates) validate_gate(g);
}

/// Trips satisfying the query, in input order.
inline TripSet filter_trips(std::span<const Trip> trips, std::span<const Gate> gates, const TripQuery& q,
                            unsigned threads = 1) {
  validate_query(q, gates);
  std::map<std::string, GateGeometry> geoms;
  for (const Gate& g : gates) geoms.emplace(g.gate_id, GateGeometry(g));
  std::optional<StudyAreaGeometry> area;
  if (q.study_area) area.emplace(*q.study_area);

  std::vector<std::optional<TripPass>> results(trips.size());
  parallel_for(trips.size(), threads,
               [&](std::size_t i) { results[i] = detail::evaluate_trip(trips[i], q, geoms, area); });
  TripSet out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  return out;
}

/// Analyst query document shared by the CLI, the service and the UI.
struct QueryDocument {
  std::vector<Gate> gates;
  TripQuery query;
  double theta = 0.9;
  std::string timezone = "America/New_York";
  int hour_bin_minutes = 60;
};

namespace detail {

inline std::vector<LatLon> coords_from_json(const nlohmann::json& j) {
  std::vector<LatLon> out;
  for (const auto& c : j) {
    LatLon p{c.at(1).get<double>(), c.at(0).get<double>()};
    if (!valid_latlon(p)) throw Error(ErrorKind::parse, "coordinate out of range");
    out.push_back(p);
  }
  return out;
}

inline nlohmann::json coords_to_json(std::span<const LatLon> pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const LatLon& p : pts) arr.push_back({p.lon, p.lat});
  return arr;
}

}  // namespace detail

inline QueryDocument query_from_json(const nlohmann::json& j) {
  QueryDocument doc;
  try {
    if (!j.is_object()) throw Error(ErrorKind::parse, "query document must be an object");
    for (const auto& g : j.at("gates")) {
      Gate gate;
      gate.gate_id = g.at("id").get<std::string>();
      gate.line = detail::coords_from_json(g.at("line"));
      const std::string sense = g.value("positive", "left_to_right");
      if (sense == "left_to_right")
        gate.positive = CrossingSense::left_to_right;
      else if (sense == "right_to_left")
        gate.positive = CrossingSense::right_to_left;
      else
        throw Error(ErrorKind::parse, "gate direction must be left_to_right or right_to_left");
      for (const auto& other : doc.gates)
        if (other.gate_id == gate.gate_id) throw Error(ErrorKind::parse, "duplicate gate id '" + gate.gate_id + "'");
      doc.gates.push_back(std::move(gate));
    }
    if (j.contains("study_area") && !j.at("study_area").is_null())
      doc.query.study_area = StudyArea{detail::coords_from_json(j.at("study_area"))};
    for (const auto& r : j.at("sequence")) doc.query.gate_sequence.push_back({r.at("gate").get<std::string>(), r.value("sign", 1)});
    if (j.contains("time_window") && !j.at("time_window").is_null()) {
      const auto& w = j.at("time_window");
      doc.query.time_window = TimeWindow{parse_instant(w.at("start").get<std::string>()),
                                         parse_instant(w.at("end").get<std::string>())};
    }
    doc.query.require_order = j.value("require_order", true);
    doc.theta = j.value("theta", 0.9);
    doc.timezone = j.value("timezone", std::string("America/New_York"));
    doc.hour_bin_minutes = j.value("hour_bin_minutes", 60);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed query document: ") + e.what());
  }
  if (!(doc.theta > 0.0 && doc.theta <= 1.0)) throw Error(ErrorKind::invalid_argument, "theta must lie in (0, 1]");
  if (doc.hour_bin_minutes <= 0 || (24 * 60) % doc.hour_bin_minutes != 0)
    throw Error(ErrorKind::invalid_argument, "hour_bin_minutes must divide 24 h evenly");
  load_zone(doc.timezone);
  validate_query(doc.query, doc.gates);
  return doc;
}

inline QueryDocument parse_query_document(std::string_view text) {
  try {
    return query_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("query document is not valid JSON: ") + e.what());
  }
}

/// Canonical form: keys sorted, optional members written as null.
inline nlohmann::json query_to_json(const QueryDocument& doc) {
  nlohmann::json gates = nlohmann::json::array();
  for (const Gate& g : doc.gates)
    gates.push_back({{"id", g.gate_id},
                     {"line", detail::coords_to_json(g.line)},
                     {"positive", g.positive == CrossingSense::left_to_right ? "left_to_right" : "right_to_left"}});
  nlohmann::json seq = nlohmann::json::array();
  for (const auto& r : doc.query.gate_sequence) seq.push_back({{"gate", r.gate_id}, {"sign", r.sign}});
  nlohmann::json j = {{"gates", gates},
                      {"sequence", seq},
                      {"require_order", doc.query.require_order},
                      {"theta", doc.theta},
                      {"timezone", doc.timezone},
                      {"hour_bin_minutes", doc.hour_bin_minutes}};
  j["study_area"] = doc.query.study_area ? detail::coords_to_json(doc.query.study_area->ring) : nlohmann::json();
  j["time_window"] = doc.query.time_window
                         ? nlohmann::json{{"start", format_instant(doc.query.time_window->start)},
                                          {"end", format_instant(doc.query.time_window->end)}}
                         : nlohmann::json();
  return j;
}

}  // namespace tripscope
