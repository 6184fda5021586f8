#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/candidates.hpp"
#include "mobfair/scan.hpp"
#include "mobfair/synthesis.hpp"
#include "mobfair/zoning.hpp"

namespace mobfair {

struct SensitivityPpv {
  double sensitivity = 0.0;
  std::optional<double> ppv;  // undefined when the detected set is empty
};

// Both inputs sorted and duplicate-free. Throws InvalidInputError when `truth`
// is empty.
SensitivityPpv sensitivity_ppv(std::span<const ObjectIndex> truth, std::span<const ObjectIndex> detected);

// Same, from set sizes and the size of their intersection.
SensitivityPpv sensitivity_ppv(std::size_t truth, std::size_t detected, std::size_t overlap);

// A set of grids scanned as one candidate pool.
struct Scope {
  std::string name;  // "r200", "r200_s3", or "all"
  double resolution = 0.0;  // 0 for the all-grids scope
  std::vector<std::uint32_t> grids;
};

// How a resolution's shifted grids are combined.
enum class ResolutionMode {
  pooled,    // one scan over the union of the shifts' candidates
  averaged,  // one scan per shift, metrics averaged over the shifts
};

std::string to_string(ResolutionMode mode);
ResolutionMode resolution_mode_from_string(const std::string& s);

// One scope per resolution followed by the all-grids scope.
std::vector<Scope> resolution_scopes(const GridFamily& family);

// Outcome of one scan on one dataset.
struct DatasetOutcome {
  bool rejected = false;
  std::vector<ObjectIndex> detected;  // the union of extreme tidsets
};

struct ScopeMetrics {
  std::string scope;
  double resolution = 0.0;
  double power = 0.0;
  std::optional<double> sensitivity;  // over detected datasets with ground truth
  std::optional<double> ppv;          // over detected datasets with defined PPV
  std::size_t n_datasets = 0;
  std::size_t n_detected = 0;
  std::size_t n_undefined_ppv = 0;
};

// Power over all outcomes; sensitivity and PPV averaged over rejected ones.
// `truths[k]` is the ground truth of dataset k (may be empty for fair data, in
// which case it does not enter the sensitivity average).
ScopeMetrics summarize(const Scope& scope, std::span<const DatasetOutcome> outcomes,
                       std::span<const std::vector<ObjectIndex>> truths);

// Mean of per-shift metrics, used for ResolutionMode::averaged.
ScopeMetrics average(const Scope& scope, std::span<const ScopeMetrics> parts);

struct EvaluationReport {
  std::string parameter;    // name of the varied parameter, e.g. "magnitude"
  std::string param_value;  // its value for this configuration
  ResolutionMode mode = ResolutionMode::pooled;
  std::vector<ScopeMetrics> scopes;
};

struct EvaluationOptions {
  ScanConfig scan;
  ResolutionMode mode = ResolutionMode::pooled;
  bool include_all_grids = true;
};

// Scans every dataset in every scope. Candidate lists are mined once per grid
// and shared by all datasets; dataset k's simulations use
// derive_seed(options.scan.seed, k).
EvaluationReport evaluate_configuration(std::span<const std::shared_ptr<const CandidateList>> per_grid,
                                        const GridFamily& family, std::size_t objects,
                                        std::span<const AuditableDataset> datasets, const EvaluationOptions& options);

// `scope,param_value,power,sensitivity,ppv,n_datasets,n_detected`; undefined
// means are left empty.
std::string report_csv(std::span<const EvaluationReport> reports);
nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

// Three panels (power, sensitivity, PPV against resolution), one series per
// report.
std::string render_svg(std::span<const EvaluationReport> reports);

}  // namespace mobfair
