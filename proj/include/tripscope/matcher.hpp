#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tripscope/csv.hpp"
#include "tripscope/format.hpp"
#include "tripscope/ingest.hpp"
#include "tripscope/netmodel.hpp"
#include "tripscope/parallel.hpp"

namespace tripscope {

struct MatchParams {
  double candidate_radius_m = 50.0;
  double max_gap_fill_ratio = 1.5;
  std::size_t min_waypoints = 2;
  double emission_sigma_m = 15.0;
  std::size_t max_candidates = 8;
  /// Penalty scale on |network distance - straight distance| / straight distance.
  double transition_weight = 3.0;

  void validate() const {
    if (!(candidate_radius_m > 0) || !(max_gap_fill_ratio > 0) || min_waypoints == 0 ||
        !(emission_sigma_m > 0) || max_candidates == 0 || !(transition_weight > 0))
      throw Error(ErrorKind::invalid_argument, "match parameters must all be positive");
  }
};

struct PathStep {
  SegmentIndex segment = 0;
  Instant entry;
  Instant exit;
  bool inferred = false;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct MatchedTrip {
  std::string trip_id;
  std::vector<PathStep> path;
  double unmatched_fraction = 0.0;

  friend bool operator==(const MatchedTrip&, const MatchedTrip&) = default;
};

enum class RejectReason { too_few_waypoints, no_candidates };

inline std::string_view to_string(RejectReason r) {
  return r == RejectReason::too_few_waypoints ? "too_few_waypoints" : "no_candidates";
}

struct Rejection {
  std::string trip_id;
  RejectReason reason;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

using MatchResult = std::variant<MatchedTrip, Rejection>;

namespace detail {

struct Candidate {
  SegmentIndex segment;
  double distance_m;
  double offset_m;
  double score = -std::numeric_limits<double>::infinity();
  int back = -1;  // index into the previous layer
};

struct Layer {
  std::size_t waypoint;
  double limit_m = 0.0;  // max feasible network distance from the previous layer
  bool piece_start = true;
  std::vector<Candidate> cands;
};

inline std::vector<SearchWorkspace>& workspace_pool() {
  thread_local std::vector<SearchWorkspace> pool;
  return pool;
}

}  // namespace detail

/// Hidden-state alignment of waypoints to directed segments. Emission favours
/// candidates close to the fix (Gaussian, emission_sigma_m); transitions favour
/// network distances close to the straight-line distance between fixes and are
/// infeasible beyond max_gap_fill_ratio x straight distance (+2 sigma for GPS
/// noise). An infeasible step splits the trip; the piece with the most fixes
/// is kept.
inline MatchResult match_trip(const Trip& trip, const RoadNetwork& net, const MatchParams& params) {
  using detail::Candidate;
  using detail::Layer;
  params.validate();
  const auto& wps = trip.waypoints;
  if (wps.size() < params.min_waypoints || wps.empty()) return Rejection{trip.trip_id, RejectReason::too_few_waypoints};

  const double sigma = params.emission_sigma_m;
  const double slack = 2.0 * sigma;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<Layer> layers;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    auto near = net.nearest_segments(wps[i].pos, params.candidate_radius_m, params.max_candidates);
    if (near.empty()) continue;
    Layer layer;
    layer.waypoint = i;
    for (const auto& d : near) layer.cands.push_back({d.segment, d.distance_m, d.offset_m});
    std::sort(layer.cands.begin(), layer.cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.segment < b.segment; });
    layers.push_back(std::move(layer));
  }
  if (layers.empty()) return Rejection{trip.trip_id, RejectReason::no_candidates};

  auto emission = [&](const Candidate& c) { return -0.5 * (c.distance_m / sigma) * (c.distance_m / sigma); };

  auto& pool = detail::workspace_pool();
  std::vector<NodeIndex> sources;

  // Network distance between two candidates, given searches rooted at the
  // previous candidates' head nodes. Negative when infeasible.
  auto route_distance = [&](const Candidate& a, const Candidate& b, double limit) -> double {
    const Segment& sa = net.segment(a.segment);
    if (a.segment == b.segment && b.offset_m >= a.offset_m - sigma) return std::max(0.0, b.offset_m - a.offset_m);
    const double remaining = sa.length_m - a.offset_m;
    const auto it = std::find(sources.begin(), sources.end(), sa.to);
    const double node_d = pool[static_cast<std::size_t>(it - sources.begin())].dist(net.segment(b.segment).from);
    const double d = remaining + node_d + b.offset_m;
    return d <= limit ? d : -1.0;
  };

  for (auto& c : layers[0].cands) c.score = emission(c);
  for (std::size_t j = 1; j < layers.size(); ++j) {
    Layer& prev = layers[j - 1];
    Layer& cur = layers[j];
    const double gc = distance_m(wps[prev.waypoint].pos, wps[cur.waypoint].pos);
    cur.limit_m = params.max_gap_fill_ratio * gc + slack;
    cur.piece_start = false;

    sources.clear();
    for (const auto& a : prev.cands) {
      const NodeIndex head = net.segment(a.segment).to;
      if (std::find(sources.begin(), sources.end(), head) == sources.end()) sources.push_back(head);
    }
    if (pool.size() < sources.size()) pool.resize(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) net.search(sources[s], cur.limit_m, pool[s]);

    const double scale = std::max(gc, sigma);
    bool any = false;
    for (auto& b : cur.cands) {
      for (std::size_t ai = 0; ai < prev.cands.size(); ++ai) {
        const auto& a = prev.cands[ai];
        if (a.score == kNegInf) continue;
        const double d = route_distance(a, b, cur.limit_m);
        if (d < 0.0) continue;
        const double s = a.score - params.transition_weight * std::abs(d - gc) / scale;
        if (s > b.score) {
          b.score = s;
          b.back = static_cast<int>(ai);
        }
      }
      if (b.score != kNegInf) {
        b.score += emission(b);
        any = true;
      }
    }
    if (!any) {
      cur.piece_start = true;
      for (auto& c : cur.cands) c.score = emission(c);
    }
  }

  // Longest piece by number of fixes; earlier piece wins ties.
  std::size_t best_begin = 0, best_end = 0, begin = 0;
  for (std::size_t j = 0; j <= layers.size(); ++j) {
    if (j == layers.size() || (j > 0 && layers[j].piece_start)) {
      if (j - begin > best_end - best_begin) {
        best_begin = begin;
        best_end = j;
      }
      begin = j;
    }
  }

  // Backtrack the best final state; lower segment index wins ties.
  std::vector<int> chosen(best_end - best_begin);
  {
    const auto& last = layers[best_end - 1].cands;
    int arg = 0;
    for (std::size_t c = 1; c < last.size(); ++c)
      if (last[c].score > last[arg].score) arg = static_cast<int>(c);
    for (std::size_t j = best_end; j-- > best_begin;) {
      chosen[j - best_begin] = arg;
      arg = layers[j].cands[arg].back;
    }
  }

  struct Elem {
    SegmentIndex segment;
    bool inferred;
  };
  struct Anchor {
    std::size_t elem;
    double offset;
    Instant t;
  };
  std::vector<Elem> elems;
  std::vector<Anchor> anchors;
  for (std::size_t j = best_begin; j < best_end; ++j) {
    const Candidate& b = layers[j].cands[chosen[j - best_begin]];
    if (j == best_begin) {
      elems.push_back({b.segment, false});
    } else {
      const Candidate& a = layers[j - 1].cands[chosen[j - 1 - best_begin]];
      const bool direct = a.segment == b.segment && b.offset_m >= a.offset_m - sigma;
      if (!direct) {
        const NodeIndex head = net.segment(a.segment).to;
        if (pool.empty()) pool.resize(1);
        net.search(head, layers[j].limit_m, pool[0]);
        for (SegmentIndex s : net.unwind(pool[0], head, net.segment(b.segment).from)) elems.push_back({s, true});
        elems.push_back({b.segment, false});
      }
    }
    anchors.push_back({elems.size() - 1, b.offset_m, wps[layers[j].waypoint].t});
  }

  // Drop end segments the vehicle never actually traversed (fixes projecting
  // exactly onto the shared node).
  constexpr double kNodeEps = 1e-3;
  while (elems.size() > 1 && std::all_of(anchors.begin(), anchors.end(), [&](const Anchor& a) {
           return a.elem != 0 || a.offset >= net.segment(elems[0].segment).length_m - kNodeEps;
         })) {
    elems.erase(elems.begin());
    for (auto& a : anchors) {
      if (a.elem == 0) {
        a.offset = 0.0;
        elems[0].inferred = false;
      } else {
        --a.elem;
      }
    }
  }
  while (elems.size() > 1 && std::all_of(anchors.begin(), anchors.end(), [&](const Anchor& a) {
           return a.elem != elems.size() - 1 || a.offset <= kNodeEps;
         })) {
    elems.pop_back();
    for (auto& a : anchors) {
      if (a.elem == elems.size()) {
        a.elem = elems.size() - 1;
        a.offset = net.segment(elems.back().segment).length_m;
        elems.back().inferred = false;
      }
    }
  }

  std::vector<double> start(elems.size() + 1, 0.0);
  for (std::size_t e = 0; e < elems.size(); ++e) start[e + 1] = start[e] + net.segment(elems[e].segment).length_m;
  std::vector<double> pos(anchors.size());
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    pos[k] = start[anchors[k].elem] + anchors[k].offset;
    if (k > 0) pos[k] = std::max(pos[k], pos[k - 1]);
  }
  auto time_at = [&](double x) -> Instant {
    if (x < pos.front()) return anchors.front().t;
    const auto k = static_cast<std::size_t>(std::upper_bound(pos.begin(), pos.end(), x) - pos.begin());
    if (k >= pos.size()) return anchors.back().t;
    const double f = (x - pos[k - 1]) / (pos[k] - pos[k - 1]);
    const double t0 = static_cast<double>(anchors[k - 1].t.time_since_epoch().count());
    const double t1 = static_cast<double>(anchors[k].t.time_since_epoch().count());
    return Instant{Millis{std::llround(t0 + f * (t1 - t0))}};
  };

  MatchedTrip out;
  out.trip_id = trip.trip_id;
  out.unmatched_fraction = 1.0 - static_cast<double>(best_end - best_begin) / static_cast<double>(wps.size());
  for (std::size_t e = 0; e < elems.size(); ++e)
    out.path.push_back({elems[e].segment, time_at(start[e]), time_at(start[e + 1]), elems[e].inferred});
  return out;
}

struct CorpusMatch {
  std::vector<MatchedTrip> matched;
  std::vector<Rejection> rejected;
};

/// match_trip over a corpus; output order follows input order for any thread count.
inline CorpusMatch match_corpus(std::span<const Trip> trips, const RoadNetwork& net, const MatchParams& params,
                                unsigned threads = 1) {
  params.validate();
  std::vector<std::optional<MatchResult>> results(trips.size());
  parallel_for(trips.size(), threads, [&](std::size_t i) { results[i] = match_trip(trips[i], net, params); });
  CorpusMatch out;
  for (auto& r : results) {
    if (auto* m = std::get_if<MatchedTrip>(&*r))
      out.matched.push_back(std::move(*m));
    else
      out.rejected.push_back(std::get<Rejection>(*r));
  }
  return out;
}

// Matched file: trip_id,seq,segment_id,entry_time,exit_time,inferred,unmatched_fraction

inline void write_matched(std::ostream& os, std::span<const MatchedTrip> trips, const RoadNetwork& net) {
  csv::write_record(os, {"trip_id", "seq", "segment_id", "entry_time", "exit_time", "inferred", "unmatched_fraction"});
  for (const auto& mt : trips)
    for (std::size_t k = 0; k < mt.path.size(); ++k) {
      const auto& s = mt.path[k];
      csv::write_record(os, {mt.trip_id, std::to_string(k), net.segment(s.segment).id, format_instant(s.entry),
                             format_instant(s.exit), s.inferred ? "1" : "0", format_double(mt.unmatched_fraction)});
    }
}

inline std::vector<MatchedTrip> parse_matched(std::istream& in, const RoadNetwork& net) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::vector<MatchedTrip> out;
  if (!reader.next(row)) return out;
  const csv::Header h(row);
  const auto c_id = h.require("trip_id"), c_seq = h.require("seq"), c_seg = h.require("segment_id"),
             c_in = h.require("entry_time"), c_out = h.require("exit_time"), c_inf = h.require("inferred"),
             c_un = h.require("unmatched_fraction");
  std::unordered_map<std::string, std::size_t> by_id;
  while (reader.next(row)) {
    if (row.size() != h.names().size())
      throw Error(ErrorKind::parse, "wrong field count on line " + std::to_string(reader.line_no()));
    auto [it, fresh] = by_id.try_emplace(row[c_id], out.size());
    if (fresh) out.push_back({row[c_id], {}, parse_double(row[c_un], "unmatched_fraction")});
    MatchedTrip& mt = out[it->second];
    if (static_cast<std::size_t>(parse_int(row[c_seq], "seq")) != mt.path.size())
      throw Error(ErrorKind::parse, "matched rows out of sequence on line " + std::to_string(reader.line_no()));
    mt.path.push_back({net.segment_index(row[c_seg]), parse_instant(row[c_in]), parse_instant(row[c_out]),
                       row[c_inf] == "1"});
  }
  return out;
}

}  // namespace tripscope
