#include "mobfair/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/parallel.hpp"
#include "mobfair/rng.hpp"

namespace mobfair {

namespace {

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string optional_text(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::vector<DatasetOutcome> scan_scope(const Scope& scope,
                                       std::span<const std::shared_ptr<const CandidateList>> per_grid,
                                       std::size_t objects, std::span<const AuditableDataset> datasets,
                                       const ScanConfig& scan) {
  CandidatePool candidates;
  for (std::uint32_t g : scope.grids) candidates.add(per_grid[g]);
  std::vector<DatasetOutcome> outcomes(datasets.size());
  if (candidates.empty()) return outcomes;
  const ScanEngine engine(candidates, objects);
  if (engine.unique_tidsets() == 0) return outcomes;

  ScanConfig per_dataset = scan;
  per_dataset.workers = 1;
  parallel_for(datasets.size(), scan.workers, [&](std::size_t k) {
    ScanConfig cfg = per_dataset;
    cfg.seed = derive_seed(scan.seed, k);
    const ScanResult r = engine.run(datasets[k].labels, cfg);
    outcomes[k].rejected = r.rejected;
    outcomes[k].detected = r.u_hat;
  });
  return outcomes;
}

}  // namespace

SensitivityPpv sensitivity_ppv(std::size_t truth, std::size_t detected, std::size_t overlap) {
  if (truth == 0) throw InvalidInputError("sensitivity is undefined for an empty ground truth");
  if (overlap > truth || overlap > detected) throw InvalidInputError("overlap exceeds a set size");
  SensitivityPpv out;
  out.sensitivity = static_cast<double>(overlap) / static_cast<double>(truth);
  if (detected > 0) out.ppv = static_cast<double>(overlap) / static_cast<double>(detected);
  return out;
}

SensitivityPpv sensitivity_ppv(std::span<const ObjectIndex> truth, std::span<const ObjectIndex> detected) {
  std::size_t overlap = 0;
  auto a = truth.begin();
  auto b = detected.begin();
  while (a != truth.end() && b != detected.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++overlap;
      ++a;
      ++b;
    }
  }
  return sensitivity_ppv(truth.size(), detected.size(), overlap);
}

std::string to_string(ResolutionMode mode) { return mode == ResolutionMode::pooled ? "pooled" : "averaged"; }

ResolutionMode resolution_mode_from_string(const std::string& s) {
  if (s == "pooled") return ResolutionMode::pooled;
  if (s == "averaged") return ResolutionMode::averaged;
  throw ConfigError("evaluation.mode must be pooled or averaged; got '" + s + "'");
}

std::vector<Scope> resolution_scopes(const GridFamily& family) {
  std::vector<Scope> out;
  for (double res : family.resolutions) out.push_back({"r" + format_resolution(res), res, family.grids_at(res)});
  Scope all{"all", 0.0, {}};
  for (const auto& g : family.grids) all.grids.push_back(g.index);
  out.push_back(std::move(all));
  return out;
}

ScopeMetrics summarize(const Scope& scope, std::span<const DatasetOutcome> outcomes,
                       std::span<const std::vector<ObjectIndex>> truths) {
  if (outcomes.size() != truths.size()) throw InvalidInputError("one ground truth per outcome is required");
  ScopeMetrics m;
  m.scope = scope.name;
  m.resolution = scope.resolution;
  m.n_datasets = outcomes.size();
  std::vector<double> sens;
  std::vector<double> ppv;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!outcomes[k].rejected) continue;
    ++m.n_detected;
    if (truths[k].empty()) continue;
    const auto sp = sensitivity_ppv(truths[k], outcomes[k].detected);
    sens.push_back(sp.sensitivity);
    if (sp.ppv) {
      ppv.push_back(*sp.ppv);
    } else {
      ++m.n_undefined_ppv;
    }
  }
  m.power = m.n_datasets ? static_cast<double>(m.n_detected) / static_cast<double>(m.n_datasets) : 0.0;
  m.sensitivity = mean(sens);
  m.ppv = mean(ppv);
  return m;
}

ScopeMetrics average(const Scope& scope, std::span<const ScopeMetrics> parts) {
  ScopeMetrics m;
  m.scope = scope.name;
  m.resolution = scope.resolution;
  std::vector<double> power;
  std::vector<double> sens;
  std::vector<double> ppv;
  for (const auto& p : parts) {
    power.push_back(p.power);
    if (p.sensitivity) sens.push_back(*p.sensitivity);
    if (p.ppv) ppv.push_back(*p.ppv);
    m.n_datasets += p.n_datasets;
    m.n_detected += p.n_detected;
    m.n_undefined_ppv += p.n_undefined_ppv;
  }
  m.power = mean(power).value_or(0.0);
  m.sensitivity = mean(sens);
  m.ppv = mean(ppv);
  return m;
}

EvaluationReport evaluate_configuration(std::span<const std::shared_ptr<const CandidateList>> per_grid,
                                        const GridFamily& family, std::size_t objects,
                                        std::span<const AuditableDataset> datasets, const EvaluationOptions& options) {
  options.scan.validate();
  if (per_grid.size() != family.grids.size()) throw InvalidInputError("one candidate list per grid is required");
  std::vector<std::vector<ObjectIndex>> truths;
  for (const auto& d : datasets) {
    if (d.labels.size() != objects) throw InvalidInputError("dataset label count differs from the object count");
    truths.push_back(d.unfair);
  }

  EvaluationReport report;
  report.mode = options.mode;
  for (const auto& scope : resolution_scopes(family)) {
    const bool all = scope.resolution == 0.0;
    if (all && !options.include_all_grids) continue;
    if (all || options.mode == ResolutionMode::pooled) {
      const auto outcomes = scan_scope(scope, per_grid, objects, datasets, options.scan);
      report.scopes.push_back(summarize(scope, outcomes, truths));
      continue;
    }
    std::vector<ScopeMetrics> parts;
    for (std::uint32_t g : scope.grids) {
      const Scope single{family.grids[g].id, scope.resolution, {g}};
      const auto outcomes = scan_scope(single, per_grid, objects, datasets, options.scan);
      parts.push_back(summarize(single, outcomes, truths));
    }
    report.scopes.push_back(average(scope, parts));
  }
  return report;
}

std::string report_csv(std::span<const EvaluationReport> reports) {
  std::string out = "scope,param_value,power,sensitivity,ppv,n_datasets,n_detected\n";
  for (const auto& r : reports) {
    for (const auto& s : r.scopes) {
      out += s.scope + ',' + r.param_value + ',' + io::format_double(s.power) + ',' + optional_text(s.sensitivity) +
             ',' + optional_text(s.ppv) + ',' + std::to_string(s.n_datasets) + ',' + std::to_string(s.n_detected) +
             '\n';
    }
  }
  return out;
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json scopes = nlohmann::json::array();
  for (const auto& s : report.scopes) {
    scopes.push_back({{"scope", s.scope},
                      {"resolution", s.resolution},
                      {"power", s.power},
                      {"sensitivity", optional_json(s.sensitivity)},
                      {"ppv", optional_json(s.ppv)},
                      {"n_datasets", s.n_datasets},
                      {"n_detected", s.n_detected},
                      {"n_undefined_ppv", s.n_undefined_ppv}});
  }
  return {{"parameter", report.parameter},
          {"param_value", report.param_value},
          {"mode", to_string(report.mode)},
          {"scopes", std::move(scopes)}};
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport r;
    r.parameter = j.value("parameter", std::string());
    r.param_value = j.value("param_value", std::string());
    r.mode = resolution_mode_from_string(j.value("mode", std::string("pooled")));
    for (const auto& s : j.at("scopes")) {
      ScopeMetrics m;
      m.scope = s.at("scope").get<std::string>();
      m.resolution = s.value("resolution", 0.0);
      m.power = s.at("power").get<double>();
      m.sensitivity = optional_from(s, "sensitivity");
      m.ppv = optional_from(s, "ppv");
      m.n_datasets = s.at("n_datasets").get<std::size_t>();
      m.n_detected = s.at("n_detected").get<std::size_t>();
      m.n_undefined_ppv = s.value("n_undefined_ppv", std::size_t{0});
      r.scopes.push_back(std::move(m));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string render_svg(std::span<const EvaluationReport> reports) {
  constexpr double kPanelW = 360.0;
  constexpr double kPanelH = 260.0;
  constexpr double kMarginL = 50.0;
  constexpr double kMarginT = 40.0;
  constexpr double kGap = 40.0;
  constexpr double kLegendH = 24.0;
  static const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"};

  std::vector<double> resolutions;
  for (const auto& r : reports) {
    for (const auto& s : r.scopes) {
      if (s.resolution > 0.0) resolutions.push_back(s.resolution);
    }
  }
  std::sort(resolutions.begin(), resolutions.end());
  resolutions.erase(std::unique(resolutions.begin(), resolutions.end()), resolutions.end());

  const double width = kMarginL + 3.0 * (kPanelW + kGap);
  const double height = kMarginT + kPanelH + 60.0 + kLegendH * static_cast<double>(reports.size());
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto x_at = [&](double left, std::size_t i) {
    if (resolutions.size() <= 1) return left + kPanelW / 2.0;
    return left + kPanelW * static_cast<double>(i) / static_cast<double>(resolutions.size() - 1);
  };
  auto y_at = [&](double v) { return kMarginT + kPanelH * (1.0 - v); };

  const char* titles[] = {"Power", "Sensitivity", "PPV"};
  for (int panel = 0; panel < 3; ++panel) {
    const double left = kMarginL + panel * (kPanelW + kGap);
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
                  left + kPanelW / 2.0, kMarginT - 14.0, titles[panel]);
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"#444\"/>\n", left,
                  kMarginT, kPanelW, kPanelH);
    svg += buf;
    for (int t = 0; t <= 4; ++t) {
      const double v = t / 4.0;
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n",
                    left, y_at(v), left + kPanelW, y_at(v), left - 4.0, y_at(v) + 4.0, v);
      svg += buf;
    }
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", x_at(left, i),
                    kMarginT + kPanelH + 16.0, format_resolution(resolutions[i]).c_str());
      svg += buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">resolution (m)</text>\n",
                  left + kPanelW / 2.0, kMarginT + kPanelH + 34.0);
    svg += buf;

    for (std::size_t r = 0; r < reports.size(); ++r) {
      const char* color = kColors[r % std::size(kColors)];
      std::string points;
      std::string markers;
      for (std::size_t i = 0; i < resolutions.size(); ++i) {
        for (const auto& s : reports[r].scopes) {
          if (s.resolution != resolutions[i]) continue;
          const std::optional<double> v = panel == 0 ? std::optional<double>(s.power)
                                          : panel == 1 ? s.sensitivity
                                                       : s.ppv;
          if (!v) continue;
          std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x_at(left, i), y_at(*v));
          points += buf;
          std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>", x_at(left, i),
                        y_at(*v), color);
          markers += buf;
        }
      }
      if (!points.empty()) {
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + points +
               "\"/>" + markers + "\n";
      }
    }
  }

  for (std::size_t r = 0; r < reports.size(); ++r) {
    const double y = kMarginT + kPanelH + 56.0 + kLegendH * static_cast<double>(r);
    const std::string label = reports[r].parameter.empty() ? reports[r].param_value
                                                           : reports[r].parameter + " = " + reports[r].param_value;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"14\" height=\"14\" fill=\"%s\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\">",
                  kMarginL, y - 11.0, kColors[r % std::size(kColors)], kMarginL + 20.0, y);
    svg += buf;
    for (char c : label) {
      if (c == '<') svg += "&lt;";
      else if (c == '>') svg += "&gt;";
      else if (c == '&') svg += "&amp;";
      else svg += c;
    }
    svg += "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mobfair
