#pragma once

// Independent reference implementations used to check the library. They are
// deliberately naive: exhaustive enumeration, numeric optimization, dense
// sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mobfair/candidates.hpp"
#include "mobfair/geo.hpp"
#include "mobfair/mapping.hpp"
#include "mobfair/rng.hpp"

namespace oracle {

using mobfair::CellSet;
using mobfair::ObjectIndex;
using mobfair::PlanarPoint;

// Every non-empty subset of every cellset, with the objects whose cellset is
// a superset. Ordered lexicographically by cell tuple.
inline mobfair::CandidateList brute_force_mine(const std::vector<CellSet>& cellsets, std::uint32_t grid = 0) {
  std::set<std::vector<std::uint32_t>> subsets;
  for (const auto& cs : cellsets) {
    const std::size_t k = cs.cells.size();
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
      std::vector<std::uint32_t> s;
      for (std::size_t b = 0; b < k; ++b) {
        if (mask & (std::uint64_t{1} << b)) s.push_back(cs.cells[b]);
      }
      std::sort(s.begin(), s.end());
      subsets.insert(s);
    }
  }
  mobfair::CandidateList out;
  for (const auto& s : subsets) {
    mobfair::Candidate c;
    c.grid = grid;
    c.cells = s;
    for (const auto& cs : cellsets) {
      std::vector<std::uint32_t> sorted = cs.cells;
      std::sort(sorted.begin(), sorted.end());
      if (std::includes(sorted.begin(), sorted.end(), s.begin(), s.end())) c.tidset.push_back(cs.object);
    }
    std::sort(c.tidset.begin(), c.tidset.end());
    out.push_back(std::move(c));
  }
  return out;
}

// Golden-section maximization of k log t + (m - k) log(1 - t) over [0, 1],
// compared against both end points (where 0 log 0 = 0).
inline double max_bernoulli_loglik(std::uint64_t k, std::uint64_t m) {
  auto f = [&](double t) {
    double v = 0.0;
    if (k > 0) v += static_cast<double>(k) * std::log(t);
    if (m > k) v += static_cast<double>(m - k) * std::log1p(-t);
    return v;
  };
  auto endpoint = [&](double t) {
    if (t == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return k == m ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  if (m == 0) return 0.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 400 && b - a > 1e-15; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return std::max({fc, fd, f((a + b) / 2.0), endpoint(0.0), endpoint(1.0)});
}

// log L0 maximized numerically over theta.
inline double numeric_h0(std::uint64_t positives, std::uint64_t total) {
  return max_bernoulli_loglik(positives, total);
}

// log L1 maximized numerically over (theta_in, theta_out). The objective is a
// sum of a function of theta_in and a function of theta_out, so the 2-D
// maximum is the sum of two 1-D maxima.
inline double numeric_h1(std::uint64_t p_c, std::uint64_t n_c, std::uint64_t positives, std::uint64_t total) {
  return max_bernoulli_loglik(p_c, n_c) + max_bernoulli_loglik(positives - p_c, total - n_c);
}

// Distance from p to the closed polygon region (0 inside).
inline double distance_to_region(PlanarPoint p, const mobfair::SimplePolygon& poly) {
  if (mobfair::point_in_polygon(p, poly)) return 0.0;
  return mobfair::distance_to_boundary(p, poly);
}

// Containment in a convex counter-clockwise ring via half-planes.
inline bool in_convex(PlanarPoint p, const mobfair::Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint a = ring[i];
    const PlanarPoint b = ring[(i + 1) % n];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0) return false;
  }
  return true;
}

// Random convex polygon: sorted angles on an ellipse-ish loop, convex hull.
inline mobfair::Ring random_convex(mobfair::Rng& rng, PlanarPoint center, double radius) {
  std::vector<PlanarPoint> pts;
  const auto n = rng.between(3, 12);
  for (std::int64_t i = 0; i < n; ++i) {
    const double a = rng.uniform(0.0, 2.0 * 3.141592653589793);
    const double r = radius * rng.uniform(0.3, 1.0);
    pts.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  std::sort(pts.begin(), pts.end(), [](PlanarPoint a, PlanarPoint b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  auto cross = [](PlanarPoint o, PlanarPoint a, PlanarPoint b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<PlanarPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

// Objects with at least `min_stops` centroids in every region, by direct
// point-in-polygon over every stop.
inline std::vector<ObjectIndex> recount_association(const std::vector<mobfair::StopSegment>& stops,
                                                    const std::vector<mobfair::SimplePolygon>& regions,
                                                    std::uint32_t min_stops) {
  std::map<ObjectIndex, std::vector<std::uint32_t>> counts;
  for (const auto& s : stops) {
    auto& c = counts[s.object];
    c.resize(regions.size(), 0);
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (mobfair::point_in_polygon(s.location, regions[r])) ++c[r];
    }
  }
  std::vector<ObjectIndex> out;
  for (const auto& [o, c] : counts) {
    if (std::all_of(c.begin(), c.end(), [&](std::uint32_t v) { return v >= min_stops; })) out.push_back(o);
  }
  return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mobfair_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
