#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace mobfair {

// Projected planar coordinate, meters.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

inline double distance(PlanarPoint a, PlanarPoint b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  // Smallest box containing every point; throws InvalidInputError on empty input.
  static BoundingBox of(std::span<const PlanarPoint> points);

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double diagonal() const { return std::hypot(width(), height()); }
  PlanarPoint center() const { return {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0}; }

  bool contains(PlanarPoint p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool intersects(const BoundingBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  void expand(PlanarPoint p);

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Open ring: the closing vertex is implicit.
using Ring = std::vector<PlanarPoint>;

// Polygon with an exterior ring and optional holes. Construction validates
// the invariants (finite coordinates, at least three vertices, positive area,
// non-self-intersecting exterior) and normalizes orientation: exterior
// counter-clockwise, holes clockwise. A trailing vertex equal to the first is
// dropped.
class SimplePolygon {
 public:
  explicit SimplePolygon(Ring exterior, std::vector<Ring> holes = {});

  const Ring& exterior() const { return exterior_; }
  const std::vector<Ring>& holes() const { return holes_; }
  const BoundingBox& bbox() const { return bbox_; }
  double area() const;

  friend bool operator==(const SimplePolygon&, const SimplePolygon&) = default;

 private:
  Ring exterior_;
  std::vector<Ring> holes_;
  BoundingBox bbox_;
};

// Signed shoelace area of an open ring (positive when counter-clockwise).
double signed_area(const Ring& ring);

// Even-odd containment; points within 1e-9 m of any edge count as inside.
bool point_in_polygon(PlanarPoint p, const SimplePolygon& poly);

// Rotates every vertex by `angle` radians about the center of the polygon's
// bounding box, then translates by (dx, dy).
SimplePolygon transform_polygon(const SimplePolygon& poly, double angle, double dx, double dy);

// Number of segments used to approximate a quarter circle in round joins.
inline constexpr int kBufferSegmentsPerQuadrant = 16;

// Minkowski offset by a signed distance (positive enlarges) with round joins.
// If shrinking splits the polygon, the largest piece is returned. Throws
// EmptyGeometryError when the result is empty.
SimplePolygon buffer_polygon(const SimplePolygon& poly, double distance);

// True when polygon and box share at least one point.
bool polygon_intersects_box(const SimplePolygon& poly, const BoundingBox& box);

// Euclidean distance from p to the nearest edge of any ring.
double distance_to_boundary(PlanarPoint p, const SimplePolygon& poly);

// Radius of the largest circle found inside the polygon by sampling an
// n x n lattice over its bounding box. A lower bound on the true inradius.
double approximate_inradius(const SimplePolygon& poly, int lattice = 48);

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

// Local equirectangular projection about the mean of the input coordinates.
// Adequate for study areas of a few kilometers.
std::vector<PlanarPoint> project_equirectangular(std::span<const LonLat> coords);

}  // namespace mobfair
