#include <doctest.h>

#include <map>
#include <set>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/mapping.hpp"
#include "mobfair/rng.hpp"
#include "oracles.hpp"

using namespace mobfair;

TEST_CASE("day boundaries respect the utc offset") {
  CHECK(day_of(0, 0) == 0);
  CHECK(day_of(86399, 0) == 0);
  CHECK(day_of(86400, 0) == 1);
  CHECK(day_of(-1, 0) == -1);
  CHECK(day_of(82800, 3600) == 1);
  CHECK(day_of(3599, -3600) == -1);
}

TEST_CASE("distinct days counts every day an interval touches") {
  std::vector<AnnotatedStop> s{{0, {}, {}, 86000, 87000}, {0, {}, {}, 86500, 86600}, {0, {}, {}, 5 * 86400, 5 * 86400}};
  CHECK(distinct_days(s, 0) == 3);
  std::vector<AnnotatedStop> overnight{{0, {}, {}, 80000, 3 * 86400 + 10}};
  CHECK(distinct_days(overnight, 0) == 4);
}

TEST_CASE("cellsets rank by days then dense index") {
  const auto g = make_grid({0, 0, 1000, 1000}, 100, 0, 0, "g");
  std::vector<StopSegment> stops;
  const std::int64_t day = 86400;
  for (int d = 0; d < 3; ++d) stops.push_back({0, {550, 550}, d * day + 100, d * day + 900});
  for (int d = 0; d < 2; ++d) stops.push_back({0, {50, 50}, d * day + 100, d * day + 900});
  for (int d = 0; d < 2; ++d) stops.push_back({0, {950, 50}, d * day + 100, d * day + 900});
  stops.push_back({0, {50, 950}, 100, 900});
  stops.push_back({1, {2000, 2000}, 0, 600});
  MappingConfig cfg;
  cfg.top_i = 3;
  std::size_t dropped = 0;
  const auto sets = map_grid(stops, g, cfg, &dropped);
  CHECK(dropped == 1);
  REQUIRE(sets.size() == 1);
  const auto d = [&](double x, double y) { return cell_of({x, y}, g)->dense; };
  CHECK(sets[0].cells == std::vector<std::uint32_t>{d(50, 50), d(950, 50), d(550, 550)});
  CHECK(sets[0].days == std::vector<std::uint32_t>{2, 2, 3});
}

TEST_CASE("top-i selection matches a direct ranking") {
  Rng rng(5);
  const auto g = make_grid({0, 0, 1000, 1000}, 250, 0, 0, "g");
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<StopSegment> stops;
    for (ObjectIndex o = 0; o < 10; ++o) {
      const auto n = rng.between(1, 40);
      for (std::int64_t k = 0; k < n; ++k) {
        const std::int64_t t = rng.between(0, 20 * 86400);
        stops.push_back({o, {rng.uniform(0, 1000), rng.uniform(0, 1000)}, t, t + rng.between(600, 30000)});
      }
    }
    MappingConfig cfg;
    cfg.top_i = static_cast<std::uint32_t>(rng.between(1, 8));
    const auto sets = map_grid(stops, g, cfg);
    REQUIRE(sets.size() == 10);
    for (const auto& cs : sets) {
      std::map<std::uint32_t, std::set<std::int64_t>> days;
      for (const auto& s : stops) {
        if (s.object != cs.object) continue;
        const auto c = cell_of(s.location, g)->dense;
        for (auto dd = day_of(s.t_start, 0); dd <= day_of(s.t_end, 0); ++dd) days[c].insert(dd);
      }
      std::vector<std::pair<std::int64_t, std::uint32_t>> ranked;
      for (const auto& [c, ds] : days) ranked.push_back({-static_cast<std::int64_t>(ds.size()), c});
      std::sort(ranked.begin(), ranked.end());
      ranked.resize(std::min<std::size_t>(ranked.size(), cfg.top_i));
      std::vector<std::uint32_t> expect;
      for (const auto& r : ranked) expect.push_back(r.second);
      std::sort(expect.begin(), expect.end());
      CHECK(cs.cells == expect);
      for (std::size_t k = 0; k < cs.cells.size(); ++k) CHECK(cs.days[k] == days[cs.cells[k]].size());
    }
  }
}

TEST_CASE("map_family is independent of the worker count") {
  Rng rng(6);
  std::vector<StopSegment> stops;
  for (ObjectIndex o = 0; o < 50; ++o) {
    for (int k = 0; k < 20; ++k) {
      const std::int64_t t = rng.between(0, 10 * 86400);
      stops.push_back({o, {rng.uniform(0, 2000), rng.uniform(0, 2000)}, t, t + 900});
    }
  }
  const auto fam = build_family({0, 0, 2000, 2000}, std::vector<double>{100, 400}, 3);
  CHECK(map_family(stops, fam, {}, 1) == map_family(stops, fam, {}, 3));
}

TEST_CASE("reduce maps points to singleton cellsets") {
  const auto g = make_grid({0, 0, 100, 100}, 50, 0, 0, "g");
  const std::vector<ObjectPoint> pts{{0, {10, 10}}, {1, {60, 10}}, {2, {500, 500}}};
  std::size_t dropped = 0;
  const auto sets = reduce_points(pts, g, &dropped);
  CHECK(dropped == 1);
  REQUIRE(sets.size() == 2);
  CHECK(sets[1].cells == std::vector<std::uint32_t>{1});
  CHECK(sets[1].days == std::vector<std::uint32_t>{1});
}

TEST_CASE("cellset csv round trip") {
  const auto g = make_grid({0, 0, 100, 100}, 50, 0, 0, "g", 1, 10);
  ObjectRegistry reg;
  reg.intern("a");
  reg.intern("b");
  const std::vector<CellSet> sets{{0, 1, {10, 12}, {3, 1}}, {1, 1, {11}, {2}}};
  const auto dir = oracle::scratch_dir("cellsets");
  io::write_file(dir / "c.csv", cellsets_csv(sets, g, reg));
  ObjectRegistry reg2;
  CHECK(read_cellsets_csv(dir / "c.csv", g, reg2) == sets);
  const auto other = make_grid({0, 0, 100, 100}, 50, 0, 0, "h", 1, 10);
  CHECK_THROWS_AS(read_cellsets_csv(dir / "c.csv", other, reg2), InputError);
  MappingConfig bad;
  bad.top_i = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
