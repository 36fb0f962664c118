#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace tripscope {

inline constexpr double kEarthRadiusM = 6371008.8;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline bool valid_latlon(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Equirectangular tangent plane anchored at `origin`; x east, y north, meters.
/// Accurate to well under 0.1% for extents below ~100 km away from the poles.
class LocalFrame {
 public:
  LocalFrame() = default;
  explicit LocalFrame(LatLon origin)
      : origin_(origin), kx_(kEarthRadiusM * kDegToRad * std::cos(origin.lat * kDegToRad)),
        ky_(kEarthRadiusM * kDegToRad) {}

  Vec2 project(LatLon p) const { return {(p.lon - origin_.lon) * kx_, (p.lat - origin_.lat) * ky_}; }
  LatLon unproject(Vec2 v) const { return {origin_.lat + v.y / ky_, origin_.lon + v.x / kx_}; }
  LatLon origin() const { return origin_; }

 private:
  LatLon origin_{};
  double kx_ = kEarthRadiusM * kDegToRad;
  double ky_ = kEarthRadiusM * kDegToRad;
};

/// Equirectangular distance evaluated at the pair's mean latitude.
inline double distance_m(LatLon a, LatLon b) {
  const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
  const double dx = (b.lon - a.lon) * kDegToRad * std::cos(mean_lat);
  const double dy = (b.lat - a.lat) * kDegToRad;
  return kEarthRadiusM * std::hypot(dx, dy);
}

inline double polyline_length_m(std::span<const LatLon> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += distance_m(line[i - 1], line[i]);
  return total;
}

/// Closest point of a planar segment to `p`: returns parameter in [0,1].
inline double closest_param(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return 0.0;
  return std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
}

struct PolylineProjection {
  double distance_m = std::numeric_limits<double>::infinity();
  double offset_m = 0.0;  // along-line distance of the foot point
  LatLon foot{};
};

/// Projects `p` onto a WGS84 polyline in a tangent plane anchored at `p`.
/// `cumulative` holds the along-line distance at each vertex.
inline PolylineProjection project_onto_polyline(LatLon p, std::span<const LatLon> line,
                                                std::span<const double> cumulative) {
  const LocalFrame frame(p);
  PolylineProjection best;
  Vec2 prev = frame.project(line[0]);
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 cur = frame.project(line[i]);
    const double t = closest_param({0.0, 0.0}, prev, cur);
    const Vec2 foot = prev + t * (cur - prev);
    const double d = norm(foot);
    if (d < best.distance_m) {
      best.distance_m = d;
      best.offset_m = cumulative[i - 1] + t * (cumulative[i] - cumulative[i - 1]);
      best.foot = frame.unproject(foot);
    }
    prev = cur;
  }
  return best;
}

/// Point at along-line distance `offset` of a polyline with the given cumulative lengths.
inline LatLon interpolate_polyline(std::span<const LatLon> line, std::span<const double> cumulative,
                                   double offset) {
  if (offset <= 0.0) return line.front();
  for (std::size_t i = 1; i < line.size(); ++i) {
    if (offset <= cumulative[i]) {
      const double piece = cumulative[i] - cumulative[i - 1];
      const double t = piece > 0.0 ? (offset - cumulative[i - 1]) / piece : 0.0;
      return {line[i - 1].lat + t * (line[i].lat - line[i - 1].lat),
              line[i - 1].lon + t * (line[i].lon - line[i - 1].lon)};
    }
  }
  return line.back();
}

inline std::vector<double> cumulative_lengths(std::span<const LatLon> line) {
  std::vector<double> cum(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) cum[i] = cum[i - 1] + distance_m(line[i - 1], line[i]);
  return cum;
}

/// Intersection of closed segments p0p1 and q0q1. `s` parameterizes p, `u`
/// parameterizes q. Collinear overlaps are reported as no intersection.
struct SegmentHit {
  double s = 0.0;
  double u = 0.0;
};

inline std::optional<SegmentHit> intersect_segments(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const Vec2 r = p1 - p0;
  const Vec2 d = q1 - q0;
  const double denom = cross(r, d);
  if (denom == 0.0) return std::nullopt;
  const Vec2 w = q0 - p0;
  const double s = cross(w, d) / denom;
  const double u = cross(w, r) / denom;
  if (s < 0.0 || s > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return SegmentHit{s, u};
}

/// Even-odd point-in-ring test; points on the boundary count as inside.
inline bool point_in_ring(Vec2 p, std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[j];
    const Vec2 b = ring[i];
    const Vec2 ab = b - a;
    const Vec2 ap = p - a;
    if (cross(ab, ap) == 0.0 && dot(ap, ab) >= 0.0 && dot(ap, ab) <= dot(ab, ab)) return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

struct BoundingBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void extend(Vec2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  bool overlaps(const BoundingBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
};

}  // namespace tripscope
