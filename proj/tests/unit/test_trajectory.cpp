#include <doctest.h>

#include <fstream>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/rng.hpp"
#include "mobfair/trajectory.hpp"
#include "oracles.hpp"

using namespace mobfair;

namespace {

std::vector<TimedPoint> walk(std::int64_t t0, std::int64_t dt, std::vector<PlanarPoint> pts) {
  std::vector<TimedPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({t0 + static_cast<std::int64_t>(i) * dt, pts[i]});
  return out;
}

}  // namespace

TEST_CASE("registry assigns first-seen indices") {
  ObjectRegistry r;
  CHECK(r.intern("b") == 0);
  CHECK(r.intern("a") == 1);
  CHECK(r.intern("b") == 0);
  CHECK(r.find("a") == 1u);
  CHECK_FALSE(r.find("c").has_value());
  CHECK(r.id(1) == "a");
}

TEST_CASE("compression takes the component-wise median at the anchor time") {
  const auto s = walk(0, 10, {{0, 0}, {0.5, 0}, {0, 0.9}, {0.2, 0.2}, {5, 5}, {5.5, 5}, {20, 20}});
  const auto c = compress(s, 1.0);
  REQUIRE(c.size() == 3);
  CHECK(c[0].t == 0);
  CHECK(c[0].position.x == doctest::Approx(0.1));
  CHECK(c[0].position.y == doctest::Approx(0.1));
  CHECK(c[1].t == 40);
  CHECK(c[1].position == PlanarPoint{5.25, 5});
  CHECK(c[2] .t == 60);
  CHECK(c[2].position == PlanarPoint{20, 20});
}

TEST_CASE("compression runs are anchored on their first sample") {
  const auto s = walk(0, 10, {{0, 0}, {0.8, 0}, {1.6, 0}, {2.4, 0}});
  const auto c = compress(s, 1.0);
  REQUIRE(c.size() == 2);
  CHECK(c[0].position.x == doctest::Approx(0.4));
  CHECK(c[1].t == 20);
}

TEST_CASE("unsorted samples are rejected") {
  const std::vector<TimedPoint> s{{10, {0, 0}}, {5, {0, 0}}};
  CHECK_THROWS_AS(compress(s, 1.0), InvalidInputError);
  CHECK_THROWS_AS(detect_stops(0, s, {}), InvalidInputError);
}

TEST_CASE("stay detection on a hand-built trajectory") {
  SegmentationConfig cfg;
  std::vector<PlanarPoint> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({static_cast<double>(i % 2) * 10.0, 0});
  for (int i = 0; i < 3; ++i) pts.push_back({200.0 + 100.0 * i, 0});
  for (int i = 0; i < 4; ++i) pts.push_back({1000, static_cast<double>(i) * 5.0});
  const auto s = walk(1000, 120, pts);
  const auto stops = detect_stops(3, s, cfg);
  REQUIRE(stops.size() == 1);
  CHECK(stops[0].object == 3);
  CHECK(stops[0].t_start == 1000);
  CHECK(stops[0].t_end == 1000 + 7 * 120);
  CHECK(stops[0].location == PlanarPoint{5, 0});
}

TEST_CASE("minimum duration boundary is inclusive") {
  SegmentationConfig cfg;
  cfg.min_stay_duration = 600;
  const auto exact = walk(0, 300, {{0, 0}, {1, 1}, {2, 2}});
  CHECK(detect_stops(0, exact, cfg).size() == 1);
  const auto short_stay = walk(0, 299, {{0, 0}, {1, 1}, {2, 2}});
  CHECK(detect_stops(0, short_stay, cfg).empty());
}

TEST_CASE("stops are ordered, disjoint, and satisfy the stay definition") {
  Rng rng(3);
  SegmentationConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TimedPoint> s;
    std::int64_t t = 0;
    PlanarPoint here{0, 0};
    for (int leg = 0; leg < 10; ++leg) {
      const auto n = rng.between(1, 15);
      for (std::int64_t k = 0; k < n; ++k) {
        s.push_back({t, {here.x + rng.normal() * 10, here.y + rng.normal() * 10}});
        t += rng.between(30, 180);
      }
      here = {rng.uniform(0, 2000), rng.uniform(0, 2000)};
    }
    const auto stops = detect_stops(0, s, cfg);
    for (std::size_t i = 0; i < stops.size(); ++i) {
      CHECK(stops[i].t_end - stops[i].t_start >= cfg.min_stay_duration);
      if (i > 0) CHECK(stops[i].t_start > stops[i - 1].t_end);
      PlanarPoint anchor;
      for (const auto& p : s) {
        if (p.t == stops[i].t_start) anchor = p.position;
      }
      for (const auto& p : s) {
        if (p.t >= stops[i].t_start && p.t <= stops[i].t_end) {
          CHECK(distance(p.position, anchor) <= cfg.max_stay_radius);
        }
      }
    }
  }
}

TEST_CASE("segment_all is independent of the worker count") {
  Rng rng(9);
  std::vector<Trajectory> trajs;
  for (ObjectIndex o = 0; o < 20; ++o) {
    Trajectory tr{o, {}};
    for (int k = 0; k < 200; ++k) {
      tr.samples.push_back({k * 120, {std::floor(k / 20.0) * 300 + rng.normal() * 5, rng.normal() * 5}});
    }
    trajs.push_back(tr);
  }
  const auto a = segment_all(trajs, {}, 1);
  const auto b = segment_all(trajs, {}, 4);
  CHECK(a == b);
  CHECK_FALSE(a.empty());
  CHECK_THROWS_AS(segment_all(trajs, {0.0, 600, 1.0}, 1), ConfigError);
}

TEST_CASE("trajectory and stop csv round trip") {
  const auto dir = oracle::scratch_dir("traj_csv");
  {
    std::ofstream f(dir / "t.csv");
    f << "object_id,t,x,y\nb,20,1,1\na,0,5,5\nb,10,0,0\nb,10,9,9\n";
  }
  const auto table = read_trajectories_csv(dir / "t.csv");
  REQUIRE(table.objects.size() == 2);
  CHECK(table.objects.id(0) == "b");
  REQUIRE(table.trajectories[0].samples.size() == 2);
  CHECK(table.trajectories[0].samples[0].t == 10);
  CHECK(table.trajectories[0].samples[0].position == PlanarPoint{0, 0});

  ObjectRegistry reg;
  reg.intern("x");
  reg.intern("y");
  const std::vector<StopSegment> stops{{0, {1.5, 2.25}, 10, 700}, {1, {0.1, 0.2}, 0, 600}};
  write_stops_csv(dir / "s.csv", stops, reg);
  ObjectRegistry reg2;
  CHECK(read_stops_csv(dir / "s.csv", reg2) == stops);
  CHECK(reg2.ids() == reg.ids());
}

TEST_CASE("malformed csv input is an input error") {
  const auto dir = oracle::scratch_dir("traj_bad");
  {
    std::ofstream f(dir / "t.csv");
    f << "object_id,t,x\na,0,1\n";
  }
  CHECK_THROWS_AS(read_trajectories_csv(dir / "t.csv"), InputError);
  {
    std::ofstream f(dir / "u.csv");
    f << "object_id,t,x,y\na,zero,1,1\n";
  }
  CHECK_THROWS_AS(read_trajectories_csv(dir / "u.csv"), InputError);
  CHECK_THROWS_AS(read_trajectories_csv(dir / "missing.csv"), InputError);
}
