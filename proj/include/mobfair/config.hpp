#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/mapping.hpp"
#include "mobfair/metrics.hpp"
#include "mobfair/scan.hpp"
#include "mobfair/synthesis.hpp"
#include "mobfair/trajectory.hpp"

namespace mobfair {

// Seed used when an assess or reduce run gives none.
inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct InputPaths {
  std::optional<std::filesystem::path> trajectories;  // object_id,t,x,y
  std::optional<std::filesystem::path> stops;         // object_id,x,y,t_start,t_end
  std::optional<std::filesystem::path> points;        // object_id,x,y
  std::optional<std::filesystem::path> labels;        // object_id,label
  std::optional<std::filesystem::path> ground_truth_objects;
  std::optional<std::filesystem::path> ground_truth_geojson;
  std::optional<std::filesystem::path> seed_polygons;
  bool lonlat = false;  // coordinates are lon/lat and get projected
};

struct GridSpec {
  std::vector<double> resolutions{50, 75, 100, 200, 400, 600, 800, 1000};
  std::uint32_t shifts = 5;
  bool independent_shifts = false;
  std::optional<BoundingBox> bbox;  // defaults to the bbox of the data
};

struct EvaluationSpec {
  std::size_t datasets = 100;
  ResolutionMode mode = ResolutionMode::pooled;
  bool include_all_grids = true;
  // Injection field varied across configurations; empty means a single
  // configuration with the injection settings as given.
  std::string parameter;
  std::vector<double> values;
};

struct ExportSpec {
  std::size_t max_stops = 5000;  // stop centroids kept in the bundle
};

// Every random stream of a run, all derived from the master seed.
struct Seeds {
  std::uint64_t master = kDefaultSeed;
  std::uint64_t movement = 0;
  std::uint64_t injection = 0;
  std::uint64_t scan = 0;
  std::uint64_t polygons = 0;
  std::uint64_t subsample = 0;

  static Seeds from(std::uint64_t master);
};

nlohmann::json to_json(const Seeds& seeds);

struct RunConfig {
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::filesystem::path output_dir = "run";
  InputPaths inputs;
  SegmentationConfig segmentation;
  GridSpec grids;
  MappingConfig mapping;
  ScanConfig scan;
  MovementConfig movement;
  InjectionConfig injection;
  EvaluationSpec evaluation;
  ExportSpec export_spec;
  bool dump_candidates = false;
  bool write_trajectories = false;

  Seeds seeds() const { return Seeds::from(seed.value_or(kDefaultSeed)); }

  // Everything that influences artifact content. Excludes the output
  // directory and the worker count.
  nlohmann::json canonical() const;
  std::string hash() const;
};

// Parses a run configuration document. Unknown keys and ill-typed values
// raise ConfigError naming the field.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const SegmentationConfig& cfg);
nlohmann::json to_json(const MappingConfig& cfg);
nlohmann::json to_json(const ScanConfig& cfg);

}  // namespace mobfair
