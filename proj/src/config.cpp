#include "mobfair/config.hpp"

#include <algorithm>
#include <initializer_list>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"

namespace mobfair {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError((section.empty() ? "config" : section) + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError("unknown config field '" + (section.empty() ? key : section + "." + key) + "'");
  }
}

template <typename T>
T field(const json& obj, const std::string& section, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + (section.empty() ? std::string(key) : section + "." + key) +
                      "' has the wrong type");
  }
}

std::optional<std::filesystem::path> path_field(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) throw ConfigError(std::string("config field 'inputs.") + key + "' must be a string");
  return std::filesystem::path(obj.at(key).get<std::string>());
}

json path_json(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->generic_string()) : json();
}

BoundingBox bbox_field(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
    throw ConfigError("config field '" + name + "' must be [min_x, min_y, max_x, max_y]");
  }
  BoundingBox b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (!(b.max_x > b.min_x && b.max_y > b.min_y)) throw ConfigError("config field '" + name + "' is empty");
  return b;
}

}  // namespace

Seeds Seeds::from(std::uint64_t master) {
  Seeds s;
  s.master = master;
  s.movement = derive_seed(master, 1);
  s.injection = derive_seed(master, 2);
  s.scan = derive_seed(master, 3);
  s.polygons = derive_seed(master, 4);
  s.subsample = derive_seed(master, 5);
  return s;
}

json to_json(const Seeds& seeds) {
  return {{"master", seeds.master},       {"movement", seeds.movement}, {"injection", seeds.injection},
          {"scan", seeds.scan},           {"polygons", seeds.polygons}, {"subsample", seeds.subsample}};
}

json to_json(const SegmentationConfig& cfg) {
  return {{"max_stay_radius", cfg.max_stay_radius},
          {"min_stay_duration", cfg.min_stay_duration},
          {"compression_radius", cfg.compression_radius}};
}

json to_json(const MappingConfig& cfg) {
  return {{"top_i", cfg.top_i}, {"tz_offset_seconds", cfg.tz_offset_seconds}};
}

json to_json(const ScanConfig& cfg) {
  return {{"alpha", cfg.alpha}, {"n_sims", cfg.n_sims}, {"tail", to_string(cfg.tail)}};
}

json RunConfig::canonical() const {
  json grid = {{"resolutions", grids.resolutions},
               {"shifts", grids.shifts},
               {"independent_shifts", grids.independent_shifts},
               {"bbox", grids.bbox ? json({grids.bbox->min_x, grids.bbox->min_y, grids.bbox->max_x, grids.bbox->max_y})
                                   : json()}};
  json values = json::array();
  for (double v : evaluation.values) values.push_back(v);
  return {{"seed", seeds().master},
          {"inputs",
           {{"trajectories", path_json(inputs.trajectories)},
            {"stops", path_json(inputs.stops)},
            {"points", path_json(inputs.points)},
            {"labels", path_json(inputs.labels)},
            {"ground_truth_objects", path_json(inputs.ground_truth_objects)},
            {"ground_truth_geojson", path_json(inputs.ground_truth_geojson)},
            {"seed_polygons", path_json(inputs.seed_polygons)},
            {"lonlat", inputs.lonlat}}},
          {"segmentation", to_json(segmentation)},
          {"grids", std::move(grid)},
          {"mapping", to_json(mapping)},
          {"scan", to_json(scan)},
          {"movement", to_json(movement)},
          {"injection", to_json(injection)},
          {"evaluation",
           {{"datasets", evaluation.datasets},
            {"mode", to_string(evaluation.mode)},
            {"include_all_grids", evaluation.include_all_grids},
            {"parameter", evaluation.parameter},
            {"values", std::move(values)}}},
          {"export", {{"max_stops", export_spec.max_stops}}},
          {"dump_candidates", dump_candidates},
          {"write_trajectories", write_trajectories}};
}

std::string RunConfig::hash() const { return io::hex64(io::fnv1a(canonical().dump())); }

RunConfig config_from_json(const json& doc) {
  check_keys(doc, "",
             {"seed", "workers", "output_dir", "inputs", "segmentation", "grids", "mapping", "scan", "movement",
              "injection", "evaluation", "export", "dump_candidates", "write_trajectories"});
  RunConfig cfg;
  if (doc.contains("seed") && !doc.at("seed").is_null()) {
    const auto& v = doc.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError("config field 'seed' must be a non-negative integer");
    }
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  cfg.workers = field<unsigned>(doc, "", "workers", cfg.workers);
  cfg.output_dir = field<std::string>(doc, "", "output_dir", cfg.output_dir.string());
  cfg.dump_candidates = field<bool>(doc, "", "dump_candidates", cfg.dump_candidates);
  cfg.write_trajectories = field<bool>(doc, "", "write_trajectories", cfg.write_trajectories);

  if (doc.contains("inputs")) {
    const auto& s = doc.at("inputs");
    check_keys(s, "inputs",
               {"trajectories", "stops", "points", "labels", "ground_truth_objects", "ground_truth_geojson",
                "seed_polygons", "lonlat"});
    cfg.inputs.trajectories = path_field(s, "trajectories");
    cfg.inputs.stops = path_field(s, "stops");
    cfg.inputs.points = path_field(s, "points");
    cfg.inputs.labels = path_field(s, "labels");
    cfg.inputs.ground_truth_objects = path_field(s, "ground_truth_objects");
    cfg.inputs.ground_truth_geojson = path_field(s, "ground_truth_geojson");
    cfg.inputs.seed_polygons = path_field(s, "seed_polygons");
    cfg.inputs.lonlat = field<bool>(s, "inputs", "lonlat", false);
  }
  if (doc.contains("segmentation")) {
    const auto& s = doc.at("segmentation");
    check_keys(s, "segmentation", {"max_stay_radius", "min_stay_duration", "compression_radius"});
    cfg.segmentation.max_stay_radius = field<double>(s, "segmentation", "max_stay_radius", 50.0);
    cfg.segmentation.min_stay_duration = field<std::int64_t>(s, "segmentation", "min_stay_duration", 600);
    cfg.segmentation.compression_radius = field<double>(s, "segmentation", "compression_radius", 1.0);
  }
  cfg.segmentation.validate();
  if (doc.contains("grids")) {
    const auto& s = doc.at("grids");
    check_keys(s, "grids", {"resolutions", "shifts", "independent_shifts", "bbox"});
    cfg.grids.resolutions = field<std::vector<double>>(s, "grids", "resolutions", cfg.grids.resolutions);
    cfg.grids.shifts = field<std::uint32_t>(s, "grids", "shifts", cfg.grids.shifts);
    cfg.grids.independent_shifts = field<bool>(s, "grids", "independent_shifts", false);
    if (s.contains("bbox") && !s.at("bbox").is_null()) cfg.grids.bbox = bbox_field(s.at("bbox"), "grids.bbox");
  }
  if (cfg.grids.resolutions.empty()) throw ConfigError("grids.resolutions must not be empty");
  for (double r : cfg.grids.resolutions) {
    if (!(r > 0.0)) throw ConfigError("grids.resolutions must be positive");
  }
  if (cfg.grids.shifts < 1) throw ConfigError("grids.shifts must be >= 1");
  if (doc.contains("mapping")) {
    const auto& s = doc.at("mapping");
    check_keys(s, "mapping", {"top_i", "tz_offset_seconds"});
    cfg.mapping.top_i = field<std::uint32_t>(s, "mapping", "top_i", cfg.mapping.top_i);
    cfg.mapping.tz_offset_seconds = field<std::int64_t>(s, "mapping", "tz_offset_seconds", 0);
  }
  cfg.mapping.validate();
  if (doc.contains("scan")) {
    const auto& s = doc.at("scan");
    check_keys(s, "scan", {"alpha", "n_sims", "tail"});
    cfg.scan.alpha = field<double>(s, "scan", "alpha", cfg.scan.alpha);
    cfg.scan.n_sims = field<std::uint32_t>(s, "scan", "n_sims", cfg.scan.n_sims);
    cfg.scan.tail = tail_from_string(field<std::string>(s, "scan", "tail", "two_sided"));
  }
  cfg.scan.seed = cfg.seeds().scan;
  cfg.scan.workers = cfg.workers;
  cfg.scan.validate();
  if (doc.contains("movement")) {
    const auto& s = doc.at("movement");
    check_keys(s, "movement",
               {"objects", "days", "bbox", "epoch", "sampling_interval", "position_jitter", "travel_speed",
                "density_skew", "hubs", "hub_spread"});
    if (s.contains("bbox")) bbox_field(s.at("bbox"), "movement.bbox");
    cfg.movement = movement_config_from_json(s);
  }
  if (doc.contains("injection")) {
    const auto& s = doc.at("injection");
    check_keys(s, "injection",
               {"regions_per_hotspot", "stops_per_region", "objects_per_hotspot", "tolerance", "hotspots",
                "magnitude", "q_out", "max_attempts", "placement_retries", "buffer_iterations"});
    cfg.injection = injection_config_from_json(s);
  }
  if (doc.contains("evaluation")) {
    const auto& s = doc.at("evaluation");
    check_keys(s, "evaluation", {"datasets", "mode", "include_all_grids", "parameter", "values"});
    cfg.evaluation.datasets = field<std::size_t>(s, "evaluation", "datasets", cfg.evaluation.datasets);
    cfg.evaluation.mode = resolution_mode_from_string(field<std::string>(s, "evaluation", "mode", "pooled"));
    cfg.evaluation.include_all_grids = field<bool>(s, "evaluation", "include_all_grids", true);
    cfg.evaluation.parameter = field<std::string>(s, "evaluation", "parameter", "");
    cfg.evaluation.values = field<std::vector<double>>(s, "evaluation", "values", {});
  }
  if (cfg.evaluation.datasets < 1) throw ConfigError("evaluation.datasets must be >= 1");
  static const char* kParameters[] = {"",         "magnitude", "objects_per_hotspot", "regions_per_hotspot",
                                      "stops_per_region", "hotspots"};
  if (std::find(std::begin(kParameters), std::end(kParameters), cfg.evaluation.parameter) == std::end(kParameters)) {
    throw ConfigError("evaluation.parameter '" + cfg.evaluation.parameter + "' is not an injection parameter");
  }
  if (!cfg.evaluation.parameter.empty() && cfg.evaluation.values.empty()) {
    throw ConfigError("evaluation.values must list at least one value for evaluation.parameter");
  }
  if (doc.contains("export")) {
    const auto& s = doc.at("export");
    check_keys(s, "export", {"max_stops"});
    cfg.export_spec.max_stops = field<std::size_t>(s, "export", "max_stops", cfg.export_spec.max_stops);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = io::read_json(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(doc);
}

}  // namespace mobfair
