#include "mobfair/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "mobfair/error.hpp"

namespace mobfair {

namespace {

constexpr double kBoundaryEps = 1e-9;

double cross(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(PlanarPoint o, PlanarPoint a, PlanarPoint b) {
  const double c = cross(o, a, b);
  return (c > 0.0) - (c < 0.0);
}

bool on_segment(PlanarPoint a, PlanarPoint b, PlanarPoint p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

bool self_intersects(const Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint a = ring[i];
    const PlanarPoint b = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return true;
    }
  }
  return false;
}

Ring normalize_ring(Ring ring, bool counter_clockwise, const char* what) {
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  for (const auto& p : ring) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidInputError(std::string(what) + " has a non-finite coordinate");
    }
  }
  ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  if (ring.size() < 3) throw InvalidInputError(std::string(what) + " needs at least 3 distinct vertices");
  const double a = signed_area(ring);
  if (!(std::abs(a) > 0.0)) throw InvalidInputError(std::string(what) + " has zero area");
  if ((a > 0.0) != counter_clockwise) std::reverse(ring.begin(), ring.end());
  return ring;
}

bool crosses_ray(PlanarPoint p, const Ring& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PlanarPoint a = ring[i];
    const PlanarPoint b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool near_ring(PlanarPoint p, const Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (segment_distance(p, ring[j], ring[i]) <= kBoundaryEps) return true;
  }
  return false;
}

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint>;
using BMulti = bg::model::multi_polygon<BPolygon>;

void append_ring(const Ring& ring, BPolygon::ring_type& out) {
  for (const auto& p : ring) out.emplace_back(p.x, p.y);
  out.emplace_back(ring.front().x, ring.front().y);
}

BPolygon to_boost(const SimplePolygon& poly) {
  BPolygon out;
  append_ring(poly.exterior(), out.outer());
  for (const auto& h : poly.holes()) {
    out.inners().emplace_back();
    append_ring(h, out.inners().back());
  }
  bg::correct(out);
  return out;
}

Ring from_boost(const BPolygon::ring_type& ring) {
  Ring out;
  out.reserve(ring.size());
  for (const auto& p : ring) {
    const PlanarPoint q{p.x(), p.y()};
    if (!out.empty() && distance(out.back(), q) < 1e-12) continue;
    out.push_back(q);
  }
  return out;
}

}  // namespace

BoundingBox BoundingBox::of(std::span<const PlanarPoint> points) {
  if (points.empty()) throw InvalidInputError("bounding box of an empty point set");
  BoundingBox box{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points.subspan(1)) box.expand(p);
  return box;
}

void BoundingBox::expand(PlanarPoint p) {
  min_x = std::min(min_x, p.x);
  min_y = std::min(min_y, p.y);
  max_x = std::max(max_x, p.x);
  max_y = std::max(max_y, p.y);
}

double signed_area(const Ring& ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    twice += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
  }
  return twice / 2.0;
}

SimplePolygon::SimplePolygon(Ring exterior, std::vector<Ring> holes)
    : exterior_(normalize_ring(std::move(exterior), true, "polygon exterior")),
      bbox_(BoundingBox::of(exterior_)) {
  if (self_intersects(exterior_)) throw InvalidInputError("polygon exterior self-intersects");
  holes_.reserve(holes.size());
  for (auto& h : holes) holes_.push_back(normalize_ring(std::move(h), false, "polygon hole"));
  if (!(area() > 0.0)) throw InvalidInputError("polygon has non-positive area");
}

double SimplePolygon::area() const {
  double a = signed_area(exterior_);
  for (const auto& h : holes_) a += signed_area(h);
  return a;
}

bool point_in_polygon(PlanarPoint p, const SimplePolygon& poly) {
  const BoundingBox& b = poly.bbox();
  if (p.x < b.min_x - kBoundaryEps || p.x > b.max_x + kBoundaryEps || p.y < b.min_y - kBoundaryEps ||
      p.y > b.max_y + kBoundaryEps) {
    return false;
  }
  if (near_ring(p, poly.exterior())) return true;
  for (const auto& h : poly.holes()) {
    if (near_ring(p, h)) return true;
  }
  bool inside = crosses_ray(p, poly.exterior());
  for (const auto& h : poly.holes()) {
    if (crosses_ray(p, h)) inside = !inside;
  }
  return inside;
}

SimplePolygon transform_polygon(const SimplePolygon& poly, double angle, double dx, double dy) {
  const PlanarPoint c = poly.bbox().center();
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  auto move = [&](const Ring& ring) {
    Ring out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
      const double rx = p.x - c.x;
      const double ry = p.y - c.y;
      out.push_back({c.x + cs * rx - sn * ry + dx, c.y + sn * rx + cs * ry + dy});
    }
    return out;
  };
  std::vector<Ring> holes;
  holes.reserve(poly.holes().size());
  for (const auto& h : poly.holes()) holes.push_back(move(h));
  return SimplePolygon(move(poly.exterior()), std::move(holes));
}

SimplePolygon buffer_polygon(const SimplePolygon& poly, double distance) {
  if (!std::isfinite(distance)) throw InvalidInputError("buffer distance must be finite");
  if (distance == 0.0) return poly;

  const int per_circle = 4 * kBufferSegmentsPerQuadrant;
  bg::strategy::buffer::distance_symmetric<double> dist(distance);
  bg::strategy::buffer::side_straight side;
  bg::strategy::buffer::join_round join(per_circle);
  bg::strategy::buffer::end_round end(per_circle);
  bg::strategy::buffer::point_circle circle(per_circle);

  BMulti out;
  bg::buffer(to_boost(poly), out, dist, side, join, end, circle);

  const BPolygon* best = nullptr;
  double best_area = 0.0;
  for (const auto& part : out) {
    const double a = std::abs(bg::area(part));
    if (a > best_area) {
      best_area = a;
      best = &part;
    }
  }
  if (best == nullptr || !(best_area > 0.0)) {
    throw EmptyGeometryError("buffer by " + std::to_string(distance) + " m leaves an empty polygon");
  }
  std::vector<Ring> holes;
  for (const auto& h : best->inners()) {
    Ring r = from_boost(h);
    if (r.size() >= 4) holes.push_back(std::move(r));
  }
  return SimplePolygon(from_boost(best->outer()), std::move(holes));
}

bool polygon_intersects_box(const SimplePolygon& poly, const BoundingBox& box) {
  if (!poly.bbox().intersects(box)) return false;
  for (const auto& p : poly.exterior()) {
    if (box.contains(p)) return true;
  }
  const PlanarPoint corners[4] = {
      {box.min_x, box.min_y}, {box.max_x, box.min_y}, {box.max_x, box.max_y}, {box.min_x, box.max_y}};
  for (const auto& c : corners) {
    if (point_in_polygon(c, poly)) return true;
  }
  const Ring& ring = poly.exterior();
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    for (int k = 0; k < 4; ++k) {
      if (segments_intersect(ring[j], ring[i], corners[k], corners[(k + 1) % 4])) return true;
    }
  }
  return false;
}

double distance_to_boundary(PlanarPoint p, const SimplePolygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const Ring& ring) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      best = std::min(best, segment_distance(p, ring[j], ring[i]));
    }
  };
  scan(poly.exterior());
  for (const auto& h : poly.holes()) scan(h);
  return best;
}

double approximate_inradius(const SimplePolygon& poly, int lattice) {
  const BoundingBox& b = poly.bbox();
  double best = 0.0;
  for (int i = 0; i < lattice; ++i) {
    for (int j = 0; j < lattice; ++j) {
      const PlanarPoint p{b.min_x + (i + 0.5) * b.width() / lattice, b.min_y + (j + 0.5) * b.height() / lattice};
      if (point_in_polygon(p, poly)) best = std::max(best, distance_to_boundary(p, poly));
    }
  }
  return best;
}

std::vector<PlanarPoint> project_equirectangular(std::span<const LonLat> coords) {
  constexpr double kEarthRadius = 6371008.8;
  if (coords.empty()) return {};
  double lon0 = 0.0;
  double lat0 = 0.0;
  for (const auto& c : coords) {
    if (!std::isfinite(c.lon) || !std::isfinite(c.lat) || std::abs(c.lat) > 90.0) {
      throw InvalidInputError("invalid longitude/latitude pair");
    }
    lon0 += c.lon;
    lat0 += c.lat;
  }
  lon0 /= static_cast<double>(coords.size());
  lat0 /= static_cast<double>(coords.size());
  const double rad = std::numbers::pi / 180.0;
  const double kx = kEarthRadius * rad * std::cos(lat0 * rad);
  const double ky = kEarthRadius * rad;
  std::vector<PlanarPoint> out;
  out.reserve(coords.size());
  for (const auto& c : coords) out.push_back({(c.lon - lon0) * kx, (c.lat - lat0) * ky});
  return out;
}

}  // namespace mobfair
