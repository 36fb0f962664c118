#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tripscope/error.hpp"
#include "tripscope/geo.hpp"

namespace tripscope {

using NodeIndex = std::uint32_t;
using SegmentIndex = std::uint32_t;

enum class RoadClass { motorway, trunk, primary, secondary, tertiary, ramp, other };

inline std::string_view to_string(RoadClass c) {
  switch (c) {
    case RoadClass::motorway: return "motorway";
    case RoadClass::trunk: return "trunk";
    case RoadClass::primary: return "primary";
    case RoadClass::secondary: return "secondary";
    case RoadClass::tertiary: return "tertiary";
    case RoadClass::ramp: return "ramp";
    case RoadClass::other: return "other";
  }
  return "other";
}

inline RoadClass road_class_from(std::string_view s) {
  for (auto c : {RoadClass::motorway, RoadClass::trunk, RoadClass::primary, RoadClass::secondary,
                 RoadClass::tertiary, RoadClass::ramp, RoadClass::other})
    if (to_string(c) == s) return c;
  throw Error(ErrorKind::parse, "unknown road class '" + std::string(s) + "'");
}

struct Node {
  std::string id;
  LatLon pos;
};

/// Directed road segment. Bidirectional roads appear as two of these.
struct Segment {
  std::string id;
  NodeIndex from = 0;
  NodeIndex to = 0;
  std::vector<LatLon> geometry;
  std::vector<double> cumulative;  // along-line distance at each vertex
  double length_m = 0.0;
  std::string name;
  RoadClass road_class = RoadClass::other;
  bool oneway = true;
};

/// Source records as they appear in the interchange file.
struct NodeRecord {
  std::string id;
  LatLon pos;
};

struct LineRecord {
  std::string id;
  std::string from;
  std::string to;
  std::vector<LatLon> geometry;
  std::string name;
  RoadClass road_class = RoadClass::other;
  bool oneway = true;
};

struct NetworkRecords {
  std::vector<NodeRecord> nodes;
  std::vector<LineRecord> lines;
};

struct SegmentDistance {
  SegmentIndex segment = 0;
  double distance_m = 0.0;
  double offset_m = 0.0;  // along-segment position of the closest point

  friend bool operator==(const SegmentDistance&, const SegmentDistance&) = default;
};

/// Scratch space for bounded node searches; reused across calls to avoid
/// reallocating per query. Not shareable between threads.
class SearchWorkspace {
 public:
  static constexpr double kUnreached = std::numeric_limits<double>::infinity();
  static constexpr SegmentIndex kNoPred = std::numeric_limits<SegmentIndex>::max();

  void reset(std::size_t node_count) {
    if (dist_.size() != node_count) {
      dist_.assign(node_count, kUnreached);
      pred_.assign(node_count, kNoPred);
      touched_.clear();
      return;
    }
    for (NodeIndex n : touched_) {
      dist_[n] = kUnreached;
      pred_[n] = kNoPred;
    }
    touched_.clear();
  }
  double dist(NodeIndex n) const { return dist_[n]; }
  SegmentIndex pred(NodeIndex n) const { return pred_[n]; }
  void set(NodeIndex n, double d, SegmentIndex via) {
    if (dist_[n] == kUnreached) touched_.push_back(n);
    dist_[n] = d;
    pred_[n] = via;
  }

 private:
  std::vector<double> dist_;
  std::vector<SegmentIndex> pred_;
  std::vector<NodeIndex> touched_;
};

class RoadNetwork {
 public:
  RoadNetwork() = default;

  /// Validates records, expands bidirectional lines into directed pairs
  /// ("<id>:f" along the drawn direction, "<id>:r" against it), orders nodes
  /// and segments by id, and builds the spatial index.
  static RoadNetwork build(const NetworkRecords& records);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t segment_count() const { return segments_.size(); }
  const Node& node(NodeIndex i) const { return nodes_[i]; }
  const Segment& segment(SegmentIndex i) const { return segments_[i]; }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Segment> segments() const { return segments_; }
  std::span<const SegmentIndex> outgoing(NodeIndex n) const {
    return {out_edges_.data() + out_offsets_[n], out_edges_.data() + out_offsets_[n + 1]};
  }
  const NetworkRecords& records() const { return records_; }
  const LocalFrame& frame() const { return frame_; }

  std::optional<SegmentIndex> find_segment(std::string_view id) const;
  SegmentIndex segment_index(std::string_view id) const;
  std::optional<NodeIndex> find_node(std::string_view id) const;

  /// Segments within `radius_m` of `p`, ascending by distance then id, at most `k`.
  std::vector<SegmentDistance> nearest_segments(LatLon p, double radius_m, std::size_t k) const;

  /// Exact point-to-segment distance used by every candidate query.
  SegmentDistance distance_to(LatLon p, SegmentIndex s) const {
    const Segment& seg = segments_[s];
    const auto proj = project_onto_polyline(p, seg.geometry, seg.cumulative);
    return {s, proj.distance_m, proj.offset_m};
  }

  /// Minimum-length directed path beginning with `from` and ending with `to`.
  std::optional<std::vector<SegmentIndex>> shortest_path(SegmentIndex from, SegmentIndex to) const;

  /// Dijkstra over nodes from `source`, settling nodes with distance <= bound.
  void search(NodeIndex source, double bound, SearchWorkspace& ws) const;

  /// Segment chain ending at node `target` recovered from a completed search.
  std::vector<SegmentIndex> unwind(const SearchWorkspace& ws, NodeIndex source, NodeIndex target) const;

  double path_length(std::span<const SegmentIndex> path) const {
    double total = 0.0;
    for (SegmentIndex s : path) total += segments_[s].length_m;
    return total;
  }

  /// True when consecutive segments meet head-to-tail.
  bool contiguous(std::span<const SegmentIndex> path) const {
    for (std::size_t i = 1; i < path.size(); ++i)
      if (segments_[path[i - 1]].to != segments_[path[i]].from) return false;
    return true;
  }

  std::vector<SegmentIndex> segments_in_box(LatLon south_west, LatLon north_east) const;

 private:
  void build_index();
  template <class Visit>
  void visit_cells(const BoundingBox& box, Visit&& visit) const;

  std::vector<Node> nodes_;
  std::vector<Segment> segments_;
  std::vector<std::uint32_t> out_offsets_;
  std::vector<SegmentIndex> out_edges_;
  std::unordered_map<std::string, SegmentIndex> segment_by_id_;
  std::unordered_map<std::string, NodeIndex> node_by_id_;
  NetworkRecords records_;

  // Uniform grid over the network-wide tangent plane.
  LocalFrame frame_;
  BoundingBox extent_;
  double cell_m_ = 250.0;
  std::int64_t cols_ = 0;
  std::int64_t rows_ = 0;
  std::vector<std::uint32_t> cell_offsets_;
  std::vector<SegmentIndex> cell_items_;
};

inline RoadNetwork RoadNetwork::build(const NetworkRecords& records) {
  RoadNetwork net;
  net.records_ = records;

  std::vector<NodeRecord> nodes = records.nodes;
  std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0 && nodes[i].id == nodes[i - 1].id)
      throw Error(ErrorKind::referential, "duplicate node id '" + nodes[i].id + "'");
    if (!valid_latlon(nodes[i].pos))
      throw Error(ErrorKind::geometry, "node '" + nodes[i].id + "' has out-of-range coordinates");
    net.node_by_id_.emplace(nodes[i].id, static_cast<NodeIndex>(i));
    net.nodes_.push_back({nodes[i].id, nodes[i].pos});
  }

  auto lookup_node = [&](const std::string& id, const std::string& line) {
    auto it = net.node_by_id_.find(id);
    if (it == net.node_by_id_.end())
      throw Error(ErrorKind::referential, "segment '" + line + "' references missing node '" + id + "'");
    return it->second;
  };

  std::vector<Segment> segs;
  for (const LineRecord& line : records.lines) {
    const NodeIndex from = lookup_node(line.from, line.id);
    const NodeIndex to = lookup_node(line.to, line.id);
    if (line.geometry.size() < 2)
      throw Error(ErrorKind::geometry, "segment '" + line.id + "' needs at least two coordinates");
    for (const LatLon& p : line.geometry)
      if (!valid_latlon(p)) throw Error(ErrorKind::geometry, "segment '" + line.id + "' has out-of-range coordinates");
    if (distance_m(line.geometry.front(), net.nodes_[from].pos) > 1.0 ||
        distance_m(line.geometry.back(), net.nodes_[to].pos) > 1.0)
      throw Error(ErrorKind::geometry, "segment '" + line.id + "' endpoints do not meet its nodes");

    Segment seg;
    seg.from = from;
    seg.to = to;
    seg.geometry = line.geometry;
    seg.cumulative = cumulative_lengths(seg.geometry);
    seg.length_m = seg.cumulative.back();
    seg.name = line.name;
    seg.road_class = line.road_class;
    seg.oneway = line.oneway;
    if (!(seg.length_m > 0.0)) throw Error(ErrorKind::geometry, "segment '" + line.id + "' has zero length");
    if (line.oneway) {
      seg.id = line.id;
      segs.push_back(std::move(seg));
    } else {
      Segment rev = seg;
      seg.id = line.id + ":f";
      rev.id = line.id + ":r";
      std::swap(rev.from, rev.to);
      std::reverse(rev.geometry.begin(), rev.geometry.end());
      rev.cumulative = cumulative_lengths(rev.geometry);
      rev.length_m = rev.cumulative.back();
      segs.push_back(std::move(seg));
      segs.push_back(std::move(rev));
    }
  }
  std::sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (i > 0 && segs[i].id == segs[i - 1].id)
      throw Error(ErrorKind::referential, "duplicate segment id '" + segs[i].id + "'");
    net.segment_by_id_.emplace(segs[i].id, static_cast<SegmentIndex>(i));
  }
  net.segments_ = std::move(segs);

  // CSR adjacency; outgoing lists are in ascending segment index order.
  net.out_offsets_.assign(net.nodes_.size() + 1, 0);
  for (const Segment& s : net.segments_) ++net.out_offsets_[s.from + 1];
  for (std::size_t i = 1; i < net.out_offsets_.size(); ++i) net.out_offsets_[i] += net.out_offsets_[i - 1];
  net.out_edges_.resize(net.segments_.size());
  std::vector<std::uint32_t> fill(net.out_offsets_.begin(), net.out_offsets_.end() - 1);
  for (SegmentIndex i = 0; i < net.segments_.size(); ++i) net.out_edges_[fill[net.segments_[i].from]++] = i;

  net.build_index();
  return net;
}

inline void RoadNetwork::build_index() {
  if (nodes_.empty()) return;
  double lat = 0.0, lon = 0.0;
  for (const Node& n : nodes_) {
    lat += n.pos.lat;
    lon += n.pos.lon;
  }
  frame_ = LocalFrame({lat / nodes_.size(), lon / nodes_.size()});
  for (const Segment& s : segments_)
    for (const LatLon& p : s.geometry) extent_.extend(frame_.project(p));
  if (segments_.empty()) return;

  const double width = extent_.max_x - extent_.min_x;
  const double height = extent_.max_y - extent_.min_y;
  // Aim for a few segments per cell without letting the grid explode.
  const double area = std::max(width * height, 1.0);
  cell_m_ = std::clamp(std::sqrt(area / std::max<double>(segments_.size(), 1.0)) * 1.5, 50.0, 5000.0);
  cols_ = static_cast<std::int64_t>(width / cell_m_) + 1;
  rows_ = static_cast<std::int64_t>(height / cell_m_) + 1;

  std::vector<std::vector<SegmentIndex>> cells(static_cast<std::size_t>(cols_ * rows_));
  for (SegmentIndex i = 0; i < segments_.size(); ++i) {
    const auto& g = segments_[i].geometry;
    for (std::size_t k = 1; k < g.size(); ++k) {
      BoundingBox box;
      box.extend(frame_.project(g[k - 1]));
      box.extend(frame_.project(g[k]));
      visit_cells(box, [&](std::size_t cell) {
        auto& v = cells[cell];
        if (v.empty() || v.back() != i) v.push_back(i);
      });
    }
  }
  cell_offsets_.assign(cells.size() + 1, 0);
  for (std::size_t c = 0; c < cells.size(); ++c) cell_offsets_[c + 1] = cell_offsets_[c] + cells[c].size();
  cell_items_.reserve(cell_offsets_.back());
  for (auto& v : cells) cell_items_.insert(cell_items_.end(), v.begin(), v.end());
}

template <class Visit>
void RoadNetwork::visit_cells(const BoundingBox& box, Visit&& visit) const {
  auto col = [&](double x) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((x - extent_.min_x) / cell_m_)), 0, cols_ - 1);
  };
  auto row = [&](double y) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((y - extent_.min_y) / cell_m_)), 0, rows_ - 1);
  };
  if (box.max_x < extent_.min_x - cell_m_ || box.min_x > extent_.max_x + cell_m_ ||
      box.max_y < extent_.min_y - cell_m_ || box.min_y > extent_.max_y + cell_m_)
    return;
  for (std::int64_t r = row(box.min_y); r <= row(box.max_y); ++r)
    for (std::int64_t c = col(box.min_x); c <= col(box.max_x); ++c)
      visit(static_cast<std::size_t>(r * cols_ + c));
}

inline std::optional<SegmentIndex> RoadNetwork::find_segment(std::string_view id) const {
  auto it = segment_by_id_.find(std::string(id));
  if (it == segment_by_id_.end()) return std::nullopt;
  return it->second;
}

inline SegmentIndex RoadNetwork::segment_index(std::string_view id) const {
  if (auto s = find_segment(id)) return *s;
  throw Error(ErrorKind::unknown_segment, "unknown segment '" + std::string(id) + "'");
}

inline std::optional<NodeIndex> RoadNetwork::find_node(std::string_view id) const {
  auto it = node_by_id_.find(std::string(id));
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

inline std::vector<SegmentDistance> RoadNetwork::nearest_segments(LatLon p, double radius_m,
                                                                  std::size_t k) const {
  std::vector<SegmentDistance> out;
  if (segments_.empty() || k == 0 || !(radius_m > 0.0)) return out;

  // The grid lives in the network frame while exact distances are taken in a
  // frame anchored at p; pad the search box for the scale difference.
  const Vec2 c = frame_.project(p);
  const double reach = radius_m * 1.05 + 5.0;
  BoundingBox box;
  box.extend({c.x - reach, c.y - reach});
  box.extend({c.x + reach, c.y + reach});

  std::vector<SegmentIndex> candidates;
  visit_cells(box, [&](std::size_t cell) {
    candidates.insert(candidates.end(), cell_items_.begin() + cell_offsets_[cell],
                      cell_items_.begin() + cell_offsets_[cell + 1]);
  });
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  for (SegmentIndex s : candidates) {
    SegmentDistance d = distance_to(p, s);
    if (d.distance_m <= radius_m) out.push_back(d);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.distance_m != b.distance_m ? a.distance_m < b.distance_m : a.segment < b.segment;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

inline void RoadNetwork::search(NodeIndex source, double bound, SearchWorkspace& ws) const {
  ws.reset(nodes_.size());
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  ws.set(source, 0.0, SearchWorkspace::kNoPred);
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, n] = heap.top();
    heap.pop();
    if (d > ws.dist(n)) continue;
    for (SegmentIndex s : outgoing(n)) {
      const double nd = d + segments_[s].length_m;
      const NodeIndex m = segments_[s].to;
      if (nd <= bound && nd < ws.dist(m)) {
        ws.set(m, nd, s);
        heap.emplace(nd, m);
      }
    }
  }
}

inline std::vector<SegmentIndex> RoadNetwork::unwind(const SearchWorkspace& ws, NodeIndex source,
                                                     NodeIndex target) const {
  std::vector<SegmentIndex> chain;
  NodeIndex n = target;
  while (n != source) {
    const SegmentIndex s = ws.pred(n);
    if (s == SearchWorkspace::kNoPred) return {};
    chain.push_back(s);
    n = segments_[s].from;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

inline std::optional<std::vector<SegmentIndex>> RoadNetwork::shortest_path(SegmentIndex from,
                                                                           SegmentIndex to) const {
  if (from >= segments_.size() || to >= segments_.size())
    throw Error(ErrorKind::unknown_segment, "segment index out of range");
  if (from == to) return std::vector<SegmentIndex>{from};
  const NodeIndex start = segments_[from].to;
  const NodeIndex goal = segments_[to].from;
  SearchWorkspace ws;
  search(start, std::numeric_limits<double>::infinity(), ws);
  if (ws.dist(goal) == SearchWorkspace::kUnreached) return std::nullopt;
  std::vector<SegmentIndex> path{from};
  for (SegmentIndex s : unwind(ws, start, goal)) path.push_back(s);
  path.push_back(to);
  return path;
}

inline std::vector<SegmentIndex> RoadNetwork::segments_in_box(LatLon south_west, LatLon north_east) const {
  std::vector<SegmentIndex> out;
  for (SegmentIndex i = 0; i < segments_.size(); ++i) {
    for (const LatLon& p : segments_[i].geometry) {
      if (p.lat >= south_west.lat && p.lat <= north_east.lat && p.lon >= south_west.lon &&
          p.lon <= north_east.lon) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

// Interchange format: GeoJSON FeatureCollection. Point features are nodes
// (properties.id); LineString features are road segments (properties id,
// from, to, name, class, oneway). Coordinates are [lon, lat].

inline NetworkRecords parse_network_records(const nlohmann::json& doc) {
  NetworkRecords rec;
  try {
    if (doc.value("type", "") != "FeatureCollection")
      throw Error(ErrorKind::parse, "network document is not a FeatureCollection");
    for (const auto& f : doc.at("features")) {
      const auto& geom = f.at("geometry");
      const auto& props = f.at("properties");
      const std::string type = geom.at("type").get<std::string>();
      if (type == "Point") {
        const auto& c = geom.at("coordinates");
        rec.nodes.push_back({props.at("id").get<std::string>(), {c.at(1).get<double>(), c.at(0).get<double>()}});
      } else if (type == "LineString") {
        LineRecord line;
        line.id = props.at("id").get<std::string>();
        line.from = props.at("from").get<std::string>();
        line.to = props.at("to").get<std::string>();
        line.name = props.value("name", "");
        line.road_class = road_class_from(props.value("class", "other"));
        line.oneway = props.value("oneway", false);
        for (const auto& c : geom.at("coordinates")) line.geometry.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
        rec.lines.push_back(std::move(line));
      } else {
        throw Error(ErrorKind::parse, "unsupported geometry type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed network document: ") + e.what());
  }
  return rec;
}

inline nlohmann::json network_records_to_json(const NetworkRecords& rec) {
  nlohmann::json features = nlohmann::json::array();
  for (const NodeRecord& n : rec.nodes) {
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {n.pos.lon, n.pos.lat}}}},
                        {"properties", {{"id", n.id}}}});
  }
  for (const LineRecord& l : rec.lines) {
    nlohmann::json coords = nlohmann::json::array();
    for (const LatLon& p : l.geometry) coords.push_back({p.lon, p.lat});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties",
                         {{"id", l.id},
                          {"from", l.from},
                          {"to", l.to},
                          {"name", l.name},
                          {"class", to_string(l.road_class)},
                          {"oneway", l.oneway}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

inline RoadNetwork parse_network(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("network file is not valid JSON: ") + e.what());
  }
  return RoadNetwork::build(parse_network_records(doc));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RoadNetwork load_network(const std::string& path) { return parse_network(read_file(path)); }

inline void write_network(const NetworkRecords& rec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << network_records_to_json(rec).dump(1) << '\n';
}

/// Directed segments of `net` inside a box as a GeoJSON FeatureCollection.
inline nlohmann::json segments_to_geojson(const RoadNetwork& net, std::span<const SegmentIndex> segs) {
  nlohmann::json features = nlohmann::json::array();
  for (SegmentIndex i : segs) {
    const Segment& s = net.segment(i);
    nlohmann::json coords = nlohmann::json::array();
    for (const LatLon& p : s.geometry) coords.push_back({p.lon, p.lat});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties",
                         {{"id", s.id},
                          {"from", net.node(s.from).id},
                          {"to", net.node(s.to).id},
                          {"name", s.name},
                          {"class", to_string(s.road_class)},
                          {"length_m", s.length_m}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace tripscope
