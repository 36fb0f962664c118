#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tripscope/gates.hpp"
#include "tripscope/matcher.hpp"
#include "tripscope/netmodel.hpp"

namespace tripscope {

struct RouteSignature {
  std::string trip_id;
  std::vector<SegmentIndex> segs;
  double length_m = 0.0;
};

struct RouteSet {
  std::string route_id;
  std::vector<SegmentIndex> canonical;
  std::string label;
  std::vector<std::string> members;
  std::vector<double> fold_scores;
};

/// Clips a matched path to the segments whose [entry, exit] interval meets
/// the span between the first and last crossing. Empty clips return nullopt:
/// matcher and gate logic disagree about where the trip was.
inline std::optional<RouteSignature> extract_signature(const MatchedTrip& mt, std::span<const GateCrossing> crossings,
                                                       const RoadNetwork& net) {
  if (crossings.empty()) return std::nullopt;
  auto [lo, hi] = std::minmax_element(crossings.begin(), crossings.end(),
                                      [](const auto& a, const auto& b) { return a.t < b.t; });
  RouteSignature sig;
  sig.trip_id = mt.trip_id;
  for (const PathStep& s : mt.path) {
    if (s.entry <= hi->t && s.exit >= lo->t) {
      sig.segs.push_back(s.segment);
      sig.length_m += net.segment(s.segment).length_m;
    }
  }
  if (sig.segs.empty()) return std::nullopt;
  return sig;
}

namespace detail {

inline std::vector<SegmentIndex> segment_set(std::span<const SegmentIndex> segs) {
  std::vector<SegmentIndex> v(segs.begin(), segs.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline double sorted_similarity(std::span<const SegmentIndex> a, std::span<const SegmentIndex> b,
                                const RoadNetwork& net) {
  double shared = 0.0, uni = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i] < b[j])) {
      uni += net.segment(a[i++]).length_m;
    } else if (i == a.size() || b[j] < a[i]) {
      uni += net.segment(b[j++]).length_m;
    } else {
      const double len = net.segment(a[i]).length_m;
      shared += len;
      uni += len;
      ++i;
      ++j;
    }
  }
  return uni > 0.0 ? shared / uni : 1.0;
}

}  // namespace detail

/// Length-weighted Jaccard over segment ids.
inline double similarity(std::span<const SegmentIndex> a, std::span<const SegmentIndex> b, const RoadNetwork& net) {
  const auto sa = detail::segment_set(a);
  const auto sb = detail::segment_set(b);
  return detail::sorted_similarity(sa, sb, net);
}

/// Majority-by-length road name along the path; ties go to the
/// lexicographically smaller name. Unnamed segments only count when nothing
/// on the path is named.
inline std::string label_route(std::span<const SegmentIndex> path, const RoadNetwork& net) {
  std::map<std::string, double> by_name;
  for (SegmentIndex s : path) {
    const Segment& seg = net.segment(s);
    if (!seg.name.empty()) by_name[seg.name] += seg.length_m;
  }
  if (by_name.empty()) return "unnamed";
  auto best = by_name.begin();
  for (auto it = by_name.begin(); it != by_name.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

inline std::string label_route(const RouteSet& rs, const RoadNetwork& net) { return label_route(rs.canonical, net); }

/// Greedy longest-first folding: each signature joins the first route set
/// whose canonical path it resembles at >= theta, else founds a new one.
inline std::vector<RouteSet> fold_routes(std::span<const RouteSignature> sigs, double theta, const RoadNetwork& net) {
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorKind::invalid_argument, "fold threshold must lie in (0, 1]");
  std::vector<std::size_t> order(sigs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sigs[a].length_m != sigs[b].length_m) return sigs[a].length_m > sigs[b].length_m;
    return sigs[a].trip_id < sigs[b].trip_id;
  });

  std::vector<RouteSet> sets;
  std::vector<std::vector<SegmentIndex>> canon_sets;
  for (std::size_t idx : order) {
    const RouteSignature& sig = sigs[idx];
    const auto mine = detail::segment_set(sig.segs);
    bool placed = false;
    for (std::size_t r = 0; r < sets.size(); ++r) {
      const double score = detail::sorted_similarity(mine, canon_sets[r], net);
      if (score >= theta) {
        sets[r].members.push_back(sig.trip_id);
        sets[r].fold_scores.push_back(score);
        placed = true;
        break;
      }
    }
    if (!placed) {
      RouteSet rs;
      rs.route_id = "R" + std::to_string(sets.size() + 1);
      rs.canonical = sig.segs;
      rs.label = label_route(rs.canonical, net);
      rs.members.push_back(sig.trip_id);
      rs.fold_scores.push_back(1.0);
      sets.push_back(std::move(rs));
      canon_sets.push_back(mine);
    }
  }
  return sets;
}

inline nlohmann::json route_sets_to_json(std::span<const RouteSet> sets, const RoadNetwork& net) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RouteSet& rs : sets) {
    nlohmann::json canon = nlohmann::json::array();
    for (SegmentIndex s : rs.canonical) canon.push_back(net.segment(s).id);
    arr.push_back({{"route_id", rs.route_id},
                   {"label", rs.label},
                   {"canonical", canon},
                   {"members", rs.members},
                   {"fold_scores", rs.fold_scores}});
  }
  return arr;
}

inline std::vector<RouteSet> route_sets_from_json(const nlohmann::json& arr, const RoadNetwork& net) {
  std::vector<RouteSet> out;
  try {
    for (const auto& j : arr) {
      RouteSet rs;
      rs.route_id = j.at("route_id").get<std::string>();
      rs.label = j.at("label").get<std::string>();
      for (const auto& id : j.at("canonical")) rs.canonical.push_back(net.segment_index(id.get<std::string>()));
      rs.members = j.at("members").get<std::vector<std::string>>();
      rs.fold_scores = j.at("fold_scores").get<std::vector<double>>();
      out.push_back(std::move(rs));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed route sets: ") + e.what());
  }
  return out;
}

}  // namespace tripscope
