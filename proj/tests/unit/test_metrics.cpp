#include <doctest.h>

#include <memory>

#include "mobfair/error.hpp"
#include "mobfair/metrics.hpp"

using namespace mobfair;

namespace {

std::vector<ObjectIndex> range(ObjectIndex lo, ObjectIndex hi) {
  std::vector<ObjectIndex> v;
  for (ObjectIndex o = lo; o < hi; ++o) v.push_back(o);
  return v;
}

}  // namespace

TEST_CASE("sensitivity and ppv from sets") {
  const auto truth = range(0, 600);
  const auto detected = range(300, 1300);
  const auto m = sensitivity_ppv(truth, detected);
  CHECK(m.sensitivity == 0.5);
  CHECK(*m.ppv == 0.3);
  const auto none = sensitivity_ppv(truth, std::vector<ObjectIndex>{});
  CHECK(none.sensitivity == 0.0);
  CHECK_FALSE(none.ppv.has_value());
  CHECK_THROWS_AS(sensitivity_ppv(std::vector<ObjectIndex>{}, detected), InvalidInputError);
  CHECK_THROWS_AS(sensitivity_ppv(10, 5, 6), InvalidInputError);
}

TEST_CASE("resolution scopes") {
  const auto fam = build_family({0, 0, 1000, 1000}, std::vector<double>{100, 200}, 2);
  const auto scopes = resolution_scopes(fam);
  REQUIRE(scopes.size() == 3);
  CHECK(scopes[0].name == "r100");
  CHECK(scopes[0].grids == std::vector<std::uint32_t>{0, 1});
  CHECK(scopes[2].name == "all");
  CHECK(scopes[2].grids.size() == 4);
  CHECK(resolution_mode_from_string("averaged") == ResolutionMode::averaged);
  CHECK_THROWS_AS(resolution_mode_from_string("mean"), ConfigError);
}

TEST_CASE("summaries average over detected datasets") {
  const Scope scope{"r100", 100, {0}};
  const std::vector<DatasetOutcome> outcomes{{true, range(0, 10)}, {false, {}}, {true, range(5, 25)}, {true, {}}};
  const std::vector<std::vector<ObjectIndex>> truths{range(0, 10), range(0, 10), range(0, 10), range(0, 10)};
  const auto m = summarize(scope, outcomes, truths);
  CHECK(m.power == 0.75);
  CHECK(m.n_detected == 3);
  CHECK(*m.sensitivity == doctest::Approx((1.0 + 0.5 + 0.0) / 3.0));
  CHECK(*m.ppv == doctest::Approx((1.0 + 0.25) / 2.0));
  CHECK(m.n_undefined_ppv == 1);

  const std::vector<DatasetOutcome> fair{{false, {}}, {false, {}}};
  const std::vector<std::vector<ObjectIndex>> empty(2);
  const auto f = summarize(scope, fair, empty);
  CHECK(f.power == 0.0);
  CHECK_FALSE(f.sensitivity.has_value());
  CHECK_FALSE(f.ppv.has_value());
}

TEST_CASE("averaging per-shift metrics") {
  const Scope scope{"r100", 100, {0, 1}};
  ScopeMetrics a{"r100_s0", 100, 0.5, 0.4, 0.2, 10, 5, 0};
  ScopeMetrics b{"r100_s1", 100, 1.0, 0.6, std::nullopt, 10, 10, 10};
  const std::vector<ScopeMetrics> parts{a, b};
  const auto m = average(scope, parts);
  CHECK(m.power == doctest::Approx(0.75));
  CHECK(*m.sensitivity == doctest::Approx(0.5));
  CHECK(*m.ppv == doctest::Approx(0.2));
}

TEST_CASE("evaluation detects a planted cluster and reports every scope") {
  const auto fam = build_family({0, 0, 1000, 1000}, std::vector<double>{100, 500}, 1);
  const std::size_t n = 200;
  auto g0 = std::make_shared<CandidateList>();
  auto g1 = std::make_shared<CandidateList>();
  g0->push_back({0, {0}, range(0, 50)});
  g0->push_back({0, {1}, range(50, 60)});
  g1->push_back({1, {fam.grids[1].dense_base}, range(0, 100)});
  const std::vector<std::shared_ptr<const CandidateList>> per_grid{g0, g1};

  std::vector<AuditableDataset> datasets(3);
  for (std::size_t k = 0; k < 3; ++k) {
    auto& d = datasets[k];
    d.labels.values.assign(n, 0);
    for (std::size_t o = 50; o < n; o += 2) d.labels.values[o] = 1;
    d.unfair = range(0, 50);
    Hotspot h;
    h.associated = d.unfair;
    d.hotspots.push_back(h);
  }
  EvaluationOptions opt;
  opt.scan.n_sims = 99;
  const auto report = evaluate_configuration(per_grid, fam, n, datasets, opt);
  REQUIRE(report.scopes.size() == 3);
  CHECK(report.scopes[0].scope == "r100");
  CHECK(report.scopes[0].power == 1.0);
  CHECK(*report.scopes[0].sensitivity == 1.0);
  CHECK(*report.scopes[0].ppv == 1.0);
  CHECK(report.scopes[1].power == 1.0);
  CHECK(*report.scopes[1].ppv == 0.5);

  opt.mode = ResolutionMode::averaged;
  opt.include_all_grids = false;
  const auto avg = evaluate_configuration(per_grid, fam, n, datasets, opt);
  CHECK(avg.scopes.size() == 2);

  const auto back = report_from_json(to_json(report));
  CHECK(back.scopes.size() == report.scopes.size());
  CHECK(*back.scopes[1].ppv == 0.5);
  const std::vector<EvaluationReport> reps{report};
  const auto csv = report_csv(reps);
  CHECK(csv.rfind("scope,param_value,power,sensitivity,ppv,n_datasets,n_detected\n", 0) == 0);
  const auto svg = render_svg(reps);
  CHECK(svg.find("<svg") != std::string::npos);
}
