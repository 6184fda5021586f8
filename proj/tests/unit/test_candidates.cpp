#include <doctest.h>

#include <map>

#include "mobfair/candidates.hpp"
#include "mobfair/rng.hpp"
#include "oracles.hpp"

using namespace mobfair;

namespace {

std::vector<CellSet> random_cellsets(Rng& rng, std::uint32_t cells, std::uint32_t objects, std::uint32_t max_size) {
  std::vector<CellSet> out;
  for (ObjectIndex o = 0; o < objects; ++o) {
    std::vector<std::uint32_t> all(cells);
    for (std::uint32_t c = 0; c < cells; ++c) all[c] = c;
    for (std::uint32_t i = cells; i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
    const auto k = static_cast<std::size_t>(rng.between(1, std::min(max_size, cells)));
    std::vector<std::uint32_t> chosen(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    out.push_back({o, 0, chosen, std::vector<std::uint32_t>(k, 1)});
  }
  return out;
}

}  // namespace

TEST_CASE("mining a tiny instance") {
  const std::vector<CellSet> sets{{0, 0, {1, 2}, {1, 1}}, {1, 0, {2, 3}, {1, 1}}, {2, 0, {1, 2, 3}, {1, 1, 1}}};
  const auto got = mine(sets);
  const CandidateList expect{{0, {1}, {0, 2}},    {0, {1, 2}, {0, 2}}, {0, {1, 2, 3}, {2}}, {0, {1, 3}, {2}},
                             {0, {2}, {0, 1, 2}}, {0, {2, 3}, {1, 2}}, {0, {3}, {1, 2}}};
  CHECK(got == expect);
}

TEST_CASE("mining equals exhaustive subset enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const auto cells = static_cast<std::uint32_t>(rng.between(1, 12));
    const auto objects = static_cast<std::uint32_t>(rng.between(1, 50));
    const auto sets = random_cellsets(rng, cells, objects, 8);
    CHECK(mine(sets) == oracle::brute_force_mine(sets));
  }
}

TEST_CASE("mining is independent of the worker count") {
  Rng rng(22);
  const auto sets = random_cellsets(rng, 30, 200, 8);
  CHECK(mine(sets, 1) == mine(sets, 4));
}

TEST_CASE("support is anti-monotone") {
  Rng rng(23);
  const auto sets = random_cellsets(rng, 12, 40, 6);
  const auto cands = mine(sets);
  std::map<std::vector<std::uint32_t>, std::size_t> support;
  for (const auto& c : cands) support[c.cells] = c.support();
  for (const auto& c : cands) {
    for (std::size_t drop = 0; drop < c.cells.size() && c.cells.size() > 1; ++drop) {
      auto sub = c.cells;
      sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
      REQUIRE(support.count(sub) == 1);
      CHECK(support[sub] >= c.support());
    }
  }
}

TEST_CASE("empty input mines nothing") {
  CHECK(mine(std::vector<CellSet>{}).empty());
}

TEST_CASE("sorted intersection") {
  const std::vector<ObjectIndex> a{1, 3, 5, 7}, b{2, 3, 4, 7, 9};
  CHECK(intersect_sorted(a, b) == std::vector<ObjectIndex>{3, 7});
  CHECK(intersect_sorted(a, {}).empty());
}

TEST_CASE("pool indexes across parts without merging grids") {
  CandidateList g0{{0, {1}, {0}}, {0, {2}, {1}}};
  CandidateList g1{{1, {1}, {0}}};
  const auto p = pool({g0, g1});
  CHECK(p.size() == 3);
  CHECK(p[2].grid == 1);
  CHECK(p[1].cells == std::vector<std::uint32_t>{2});
  std::size_t seen = 0;
  p.for_each([&](std::size_t i, const Candidate& c) {
    CHECK(&p[i] == &c);
    ++seen;
  });
  CHECK(seen == 3);
}

TEST_CASE("candidate dump resolves ids") {
  const auto fam = build_family({0, 0, 100, 100}, std::vector<double>{50}, 1);
  ObjectRegistry reg;
  reg.intern("a");
  reg.intern("b");
  const CandidateList c{{0, {0, 3}, {0, 1}}};
  const auto line = nlohmann::json::parse(candidates_jsonl(c, fam, reg));
  CHECK(line["grid"] == "r50_s0");
  CHECK(line["support"] == 2);
  CHECK(line["tidset"] == nlohmann::json({"a", "b"}));
}
