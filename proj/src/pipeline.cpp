#include "mobfair/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "mobfair/candidates.hpp"
#include "mobfair/error.hpp"
#include "mobfair/geojson.hpp"
#include "mobfair/io.hpp"
#include "mobfair/mapping.hpp"
#include "mobfair/metrics.hpp"
#include "mobfair/parallel.hpp"
#include "mobfair/scan.hpp"
#include "mobfair/synthesis.hpp"
#include "mobfair/zoning.hpp"

namespace mobfair::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kStops = "stops.csv";
constexpr const char* kPoints = "points.csv";
constexpr const char* kTrajectories = "trajectories.csv";
constexpr const char* kLabels = "labels.csv";
constexpr const char* kGroundTruth = "ground_truth.geojson";
constexpr const char* kGroundTruthObjects = "ground_truth_objects.csv";
constexpr const char* kGrids = "grids.json";
constexpr const char* kCandidates = "candidates.jsonl";
constexpr const char* kScanResult = "scan_result.json";
constexpr const char* kReportCsv = "report.csv";
constexpr const char* kReportJson = "report.json";

std::string cellset_file(const Grid& g) { return "cellsets/" + g.id + ".csv"; }

json stamp(const RunConfig& cfg) { return {{"config_hash", cfg.hash()}, {"seeds", to_json(cfg.seeds())}}; }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw InputError(what + " not found: " + p.string());
}

// Stop file feeding downstream stages: the configured stops, stops segmented
// from configured trajectories, or the stops already in the run directory.
fs::path resolve_stops(const RunConfig& cfg, StageRunner& runner, const Options& options) {
  if (cfg.inputs.stops) {
    require_file(*cfg.inputs.stops, "inputs.stops");
    return *cfg.inputs.stops;
  }
  if (cfg.inputs.trajectories) {
    segment(cfg, options);
    return runner.dir() / kStops;
  }
  const fs::path local = runner.dir() / kStops;
  if (fs::is_regular_file(local)) return local;
  throw ConfigError("no movement data: set inputs.stops or inputs.trajectories, or run generate first");
}

fs::path resolve_labels(const RunConfig& cfg, const fs::path& dir) {
  if (cfg.inputs.labels) {
    require_file(*cfg.inputs.labels, "inputs.labels");
    return *cfg.inputs.labels;
  }
  const fs::path local = dir / kLabels;
  if (fs::is_regular_file(local)) return local;
  throw ConfigError("no labels: set inputs.labels or run inject first");
}

std::vector<PlanarPoint> centroids(std::span<const StopSegment> stops) {
  std::vector<PlanarPoint> out;
  out.reserve(stops.size());
  for (const auto& s : stops) out.push_back(s.location);
  return out;
}

std::vector<SimplePolygon> seed_polygons(const RunConfig& cfg, const BoundingBox& bbox) {
  if (cfg.inputs.seed_polygons) {
    require_file(*cfg.inputs.seed_polygons, "inputs.seed_polygons");
    auto polys = geojson::read_polygons(geojson::load(*cfg.inputs.seed_polygons));
    if (polys.empty()) throw InputError(cfg.inputs.seed_polygons->string() + ": no polygons");
    return polys;
  }
  return fallback_seed_polygons(bbox, cfg.seeds().polygons);
}

json polygons_fingerprint(const RunConfig& cfg) {
  return cfg.inputs.seed_polygons ? json(file_hash(*cfg.inputs.seed_polygons)) : json("fallback");
}

GridFamily family_for(const RunConfig& cfg, std::span<const PlanarPoint> points) {
  const BoundingBox bbox = cfg.grids.bbox ? *cfg.grids.bbox : BoundingBox::of(points);
  return build_family(bbox, cfg.grids.resolutions, cfg.grids.shifts, cfg.grids.independent_shifts);
}

std::vector<std::shared_ptr<const CandidateList>> mine_all(const std::vector<std::vector<CellSet>>& cellsets,
                                                           unsigned workers) {
  std::vector<std::shared_ptr<const CandidateList>> out(cellsets.size());
  parallel_for(cellsets.size(), workers,
               [&](std::size_t g) { out[g] = std::make_shared<const CandidateList>(mine(cellsets[g], 1)); });
  return out;
}

struct PointTable {
  ObjectRegistry objects;
  std::vector<ObjectPoint> points;
};

PointTable read_points_csv(const fs::path& path, bool lonlat) {
  const auto table = io::CsvTable::read(path);
  const std::size_t id = table.column("object_id");
  const std::size_t a = table.column(lonlat ? "lon" : "x");
  const std::size_t b = table.column(lonlat ? "lat" : "y");
  PointTable out;
  std::vector<LonLat> raw;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto before = out.objects.size();
    const ObjectIndex o = out.objects.intern(table.text(r, id));
    if (out.objects.size() == before) {
      throw InputError(path.string() + ": object " + table.text(r, id) + " has more than one point");
    }
    raw.push_back({table.number(r, a), table.number(r, b)});
    out.points.push_back({o, {raw.back().lon, raw.back().lat}});
  }
  if (lonlat) {
    const auto projected = project_equirectangular(raw);
    for (std::size_t i = 0; i < projected.size(); ++i) out.points[i].location = projected[i];
  }
  return out;
}

std::string points_csv(std::span<const ObjectPoint> points, const ObjectRegistry& objects) {
  std::string out = "object_id,x,y\n";
  for (const auto& p : points) {
    out += objects.id(p.object) + ',' + io::format_double(p.location.x) + ',' + io::format_double(p.location.y) + '\n';
  }
  return out;
}

json combined_hash(const fs::path& dir, const std::vector<std::string>& files) {
  json j = json::object();
  for (const auto& f : files) j[f] = file_hash(dir / f);
  return j;
}

// Shared tail of assess and reduce: zoning is already on disk and the
// cellsets are written; mine and scan.
void scan_stage(const RunConfig& cfg, StageRunner& runner, const GridFamily& family, const fs::path& labels_path,
                const std::vector<std::string>& cellset_files, const std::function<void(ObjectRegistry&)>& preload) {
  const fs::path dir = runner.dir();
  std::vector<std::string> outputs{kScanResult};
  if (cfg.dump_candidates) outputs.push_back(kCandidates);
  const json fingerprint = {{"cellsets", combined_hash(dir, cellset_files)},
                            {"grids", file_hash(dir / kGrids)},
                            {"labels", file_hash(labels_path)},
                            {"scan", to_json(cfg.scan)},
                            {"seed", cfg.seeds().scan},
                            {"dump_candidates", cfg.dump_candidates}};
  runner.run("scan", fingerprint, outputs, [&] {
    ObjectRegistry objects;
    preload(objects);
    const LabelVector labels = read_labels_csv(labels_path, objects);
    std::vector<std::vector<CellSet>> cellsets;
    for (std::size_t g = 0; g < family.grids.size(); ++g) {
      cellsets.push_back(read_cellsets_csv(dir / cellset_files[g], family.grids[g], objects));
    }
    if (objects.size() != labels.size()) {
      const std::string& first = objects.id(static_cast<ObjectIndex>(labels.size()));
      throw InputError("cellsets reference object " + first + ", which has no label");
    }
    runner.log("mining candidates over " + std::to_string(family.grids.size()) + " grids");
    const auto lists = mine_all(cellsets, cfg.workers);
    const CandidatePool candidates = pool(lists);
    if (cfg.dump_candidates) {
      std::string dump;
      for (const auto& l : lists) dump += candidates_jsonl(*l, family, objects);
      io::write_file(dir / kCandidates, dump);
    }
    runner.log("scanning " + std::to_string(candidates.size()) + " candidates with " + std::to_string(cfg.scan.n_sims) +
               " simulations");
    if (!cfg.scan.rejection_possible()) {
      runner.log("warning: with n_sims = " + std::to_string(cfg.scan.n_sims) + " no outcome can reach alpha");
    }
    const ScanResult result = run_scan(candidates, labels, cfg.scan);
    json doc = to_json(result, candidates, family, objects);
    doc.update(stamp(cfg));
    doc["tail"] = to_string(cfg.scan.tail);
    doc["n_objects"] = objects.size();
    doc["n_positives"] = labels.positives();
    doc["n_candidates"] = candidates.size();
    io::write_json(dir / kScanResult, doc);
    runner.log(std::string("p_hat = ") + io::format_double(result.p_hat) +
               (result.rejected ? ", unfairness detected" : ", no unfairness detected"));
  });
}

void zoning_stage(const RunConfig& cfg, StageRunner& runner, const GridFamily& family) {
  runner.run("zoning", {{"family", to_json(family)}}, {kGrids}, [&] {
    json doc = to_json(family);
    doc.update(stamp(cfg));
    io::write_json(runner.dir() / kGrids, doc);
  });
}

std::vector<std::string> cellset_files(const GridFamily& family) {
  std::vector<std::string> out;
  for (const auto& g : family.grids) out.push_back(cellset_file(g));
  return out;
}

std::uint32_t integral(double v, const std::string& name) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) throw ConfigError(name + " values must be non-negative integers");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string file_hash(const fs::path& path) { return io::hex64(io::fnv1a(io::read_file(path))); }

StageRunner::StageRunner(const RunConfig& cfg, const Options& options)
    : cfg_(cfg), options_(options), dir_(cfg.output_dir) {
  fs::create_directories(dir_);
  reload();
}

void StageRunner::reload() {
  manifest_ = json::object();
  const fs::path m = dir_ / kManifest;
  if (fs::is_regular_file(m)) {
    try {
      manifest_ = io::read_json(m);
    } catch (const Error&) {
      manifest_ = json::object();
    }
  }
  if (!manifest_.is_object()) manifest_ = json::object();
  if (!manifest_.contains("stages") || !manifest_["stages"].is_object()) manifest_["stages"] = json::object();
}

void StageRunner::log(const std::string& message) const {
  if (options_.log) *options_.log << message << '\n';
}

bool StageRunner::run(const std::string& name, const json& fingerprint, const std::vector<std::string>& outputs,
                      const std::function<void()>& body) {
  reload();
  const std::string print = io::hex64(io::fnv1a(json{{"stage", name}, {"inputs", fingerprint}}.dump()));
  auto& stages = manifest_["stages"];
  if (!options_.force && stages.contains(name) && stages[name].value("fingerprint", "") == print) {
    bool intact = true;
    const auto& recorded = stages[name]["outputs"];
    for (const auto& out : outputs) {
      const fs::path p = dir_ / out;
      if (!recorded.contains(out) || !fs::is_regular_file(p) || recorded[out] != file_hash(p)) {
        intact = false;
        break;
      }
    }
    if (intact) {
      log(name + ": up to date");
      reports_.push_back({name, false});
      return false;
    }
  }
  log(name + ": running");
  body();
  json entry = {{"fingerprint", print}, {"config_hash", cfg_.hash()}, {"outputs", json::object()}};
  for (const auto& out : outputs) entry["outputs"][out] = file_hash(dir_ / out);
  stages[name] = std::move(entry);
  save();
  reports_.push_back({name, true});
  return true;
}

void StageRunner::save() const {
  json doc = manifest_;
  doc["config_hash"] = cfg_.hash();
  doc["seeds"] = to_json(cfg_.seeds());
  doc["config"] = cfg_.canonical();
  io::write_json(dir_ / kManifest, doc);
}

std::vector<StageReport> generate(const RunConfig& cfg, const Options& options) {
  if (!cfg.seed) throw ConfigError("seed is required for generate");
  StageRunner runner(cfg, options);
  std::vector<std::string> outputs{kStops};
  if (cfg.write_trajectories) outputs.push_back(kTrajectories);
  const json fingerprint = {{"movement", to_json(cfg.movement)},
                            {"segmentation", to_json(cfg.segmentation)},
                            {"seed", cfg.seeds().movement},
                            {"write_trajectories", cfg.write_trajectories}};
  runner.run("generate", fingerprint, outputs, [&] {
    runner.log("generating " + std::to_string(cfg.movement.objects) + " objects over " +
               std::to_string(cfg.movement.days) + " days");
    if (cfg.write_trajectories) {
      const auto table = generate_trajectories(cfg.movement, cfg.seeds().movement, cfg.workers);
      write_trajectories_csv(runner.dir() / kTrajectories, table.trajectories, table.objects);
      const auto stops = segment_all(table.trajectories, cfg.segmentation, cfg.workers);
      write_stops_csv(runner.dir() / kStops, stops, table.objects);
    } else {
      const auto data = generate_movement(cfg.movement, cfg.seeds().movement, cfg.segmentation, cfg.workers);
      write_stops_csv(runner.dir() / kStops, data.stops, data.objects);
    }
  });
  return runner.reports();
}

std::vector<StageReport> segment(const RunConfig& cfg, const Options& options) {
  if (!cfg.inputs.trajectories) throw ConfigError("inputs.trajectories is required for segment");
  require_file(*cfg.inputs.trajectories, "inputs.trajectories");
  StageRunner runner(cfg, options);
  const json fingerprint = {{"trajectories", file_hash(*cfg.inputs.trajectories)},
                            {"lonlat", cfg.inputs.lonlat},
                            {"segmentation", to_json(cfg.segmentation)}};
  runner.run("segment", fingerprint, {kStops}, [&] {
    const auto table = read_trajectories_csv(*cfg.inputs.trajectories, cfg.inputs.lonlat);
    const auto stops = segment_all(table.trajectories, cfg.segmentation, cfg.workers);
    runner.log("segmented " + std::to_string(table.trajectories.size()) + " trajectories into " +
               std::to_string(stops.size()) + " stops");
    write_stops_csv(runner.dir() / kStops, stops, table.objects);
  });
  return runner.reports();
}

std::vector<StageReport> inject(const RunConfig& cfg, const Options& options) {
  if (!cfg.seed) throw ConfigError("seed is required for inject");
  StageRunner runner(cfg, options);
  const fs::path stops_path = resolve_stops(cfg, runner, options);
  const bool copy_stops = fs::weakly_canonical(stops_path) != fs::weakly_canonical(runner.dir() / kStops);
  std::vector<std::string> outputs{kLabels, kGroundTruth, kGroundTruthObjects};
  if (copy_stops) outputs.push_back(kStops);
  const json fingerprint = {{"stops", file_hash(stops_path)},
                            {"seed_polygons", polygons_fingerprint(cfg)},
                            {"injection", to_json(cfg.injection)},
                            {"seed", cfg.seeds().injection}};
  runner.run("inject", fingerprint, outputs, [&] {
        ObjectRegistry objects;
        const auto stops = read_stops_csv(stops_path, objects);
        if (stops.empty()) throw InputError(stops_path.string() + ": no stops");
        const auto points = centroids(stops);
        const auto seeds = seed_polygons(cfg, BoundingBox::of(points));
        const StopIndex index(stops, objects.size());
        const AuditableDataset ds = make_dataset(cfg.injection, seeds, index, cfg.seeds().injection);
        io::write_file(runner.dir() / kLabels, labels_csv(ds.labels, objects));
        io::write_json(runner.dir() / kGroundTruth, ground_truth_geojson(ds.hotspots));
        io::write_file(runner.dir() / kGroundTruthObjects, ground_truth_objects_csv(ds.hotspots, objects));
        if (copy_stops) io::write_file(runner.dir() / kStops, io::read_file(stops_path));
        runner.log("injected " + std::to_string(ds.hotspots.size()) + " hotspot(s) covering " +
                   std::to_string(ds.unfair.size()) + " objects");
  });
  return runner.reports();
}

std::vector<StageReport> assess(const RunConfig& cfg, const Options& options) {
  StageRunner runner(cfg, options);
  const fs::path stops_path = resolve_stops(cfg, runner, options);
  const fs::path labels_path = resolve_labels(cfg, runner.dir());

  ObjectRegistry objects;
  const auto stops = read_stops_csv(stops_path, objects);
  if (stops.empty()) throw InputError(stops_path.string() + ": no stops");
  const GridFamily family = family_for(cfg, centroids(stops));
  zoning_stage(cfg, runner, family);

  const auto files = cellset_files(family);
  const json fingerprint = {{"stops", file_hash(stops_path)},
                            {"grids", file_hash(runner.dir() / kGrids)},
                            {"mapping", to_json(cfg.mapping)}};
  runner.run("mapping", fingerprint, files, [&] {
    for (const auto& g : family.grids) {
      for (const auto& w : check_coarseness(g, stops)) {
        runner.log("warning: grid " + w.grid_id + " cell " + std::to_string(w.cell.dense) + " holds stops of " +
                   io::format_double(std::round(w.fraction * 1000.0) / 10.0) + "% of the objects");
      }
    }
    const auto per_grid = map_family(stops, family, cfg.mapping, cfg.workers);
    for (std::size_t g = 0; g < family.grids.size(); ++g) {
      io::write_file(runner.dir() / files[g], cellsets_csv(per_grid[g], family.grids[g], objects));
    }
  });

  scan_stage(cfg, runner, family, labels_path, files, [&](ObjectRegistry& r) {
    for (const auto& id : objects.ids()) r.intern(id);
  });
  return runner.reports();
}

std::vector<StageReport> reduce(const RunConfig& cfg, const Options& options) {
  if (!cfg.inputs.points) throw ConfigError("inputs.points is required for reduce");
  require_file(*cfg.inputs.points, "inputs.points");
  StageRunner runner(cfg, options);
  const fs::path labels_path = resolve_labels(cfg, runner.dir());

  const PointTable table = read_points_csv(*cfg.inputs.points, cfg.inputs.lonlat);
  if (table.points.empty()) throw InputError(cfg.inputs.points->string() + ": no points");
  std::vector<PlanarPoint> locations;
  for (const auto& p : table.points) locations.push_back(p.location);
  const GridFamily family = family_for(cfg, locations);
  zoning_stage(cfg, runner, family);

  auto files = cellset_files(family);
  std::vector<std::string> outputs = files;
  outputs.push_back(kPoints);
  const json fingerprint = {{"points", file_hash(*cfg.inputs.points)},
                            {"lonlat", cfg.inputs.lonlat},
                            {"grids", file_hash(runner.dir() / kGrids)}};
  runner.run("mapping", fingerprint, outputs, [&] {
    io::write_file(runner.dir() / kPoints, points_csv(table.points, table.objects));
    std::vector<std::vector<CellSet>> per_grid(family.grids.size());
    parallel_for(family.grids.size(), cfg.workers,
                 [&](std::size_t g) { per_grid[g] = reduce_points(table.points, family.grids[g]); });
    for (std::size_t g = 0; g < family.grids.size(); ++g) {
      io::write_file(runner.dir() / files[g], cellsets_csv(per_grid[g], family.grids[g], table.objects));
    }
  });

  scan_stage(cfg, runner, family, labels_path, files, [&](ObjectRegistry& r) {
    for (const auto& id : table.objects.ids()) r.intern(id);
  });
  return runner.reports();
}

std::vector<StageReport> evaluate(const RunConfig& cfg, const Options& options) {
  if (!cfg.seed) throw ConfigError("seed is required for evaluate");
  StageRunner runner(cfg, options);
  fs::path stops_path;
  if (cfg.inputs.stops || cfg.inputs.trajectories || fs::is_regular_file(runner.dir() / kStops)) {
    stops_path = resolve_stops(cfg, runner, options);
  } else {
    generate(cfg, options);
    stops_path = runner.dir() / kStops;
  }

  json params = cfg.canonical();
  params.erase("inputs");
  params.erase("export");
  params.erase("dump_candidates");
  params.erase("write_trajectories");
  const json fingerprint = {
      {"stops", file_hash(stops_path)}, {"seed_polygons", polygons_fingerprint(cfg)}, {"params", params}};
  runner.run("evaluate", fingerprint, {kReportCsv, kReportJson}, [&] {
    ObjectRegistry objects;
    const auto stops = read_stops_csv(stops_path, objects);
    if (stops.empty()) throw InputError(stops_path.string() + ": no stops");
    const auto points = centroids(stops);
    const GridFamily family = family_for(cfg, points);
    const auto seeds = seed_polygons(cfg, BoundingBox::of(points));
    const StopIndex index(stops, objects.size());
    runner.log("mapping and mining " + std::to_string(family.grids.size()) + " grids");
    const auto lists = mine_all(map_family(stops, family, cfg.mapping, cfg.workers), cfg.workers);

    std::vector<double> values = cfg.evaluation.values;
    if (cfg.evaluation.parameter.empty()) values = {0.0};
    std::vector<EvaluationReport> reports;
    for (std::size_t v = 0; v < values.size(); ++v) {
      InjectionConfig inj = cfg.injection;
      const std::string& p = cfg.evaluation.parameter;
      if (p == "magnitude") inj.magnitude = values[v];
      if (p == "objects_per_hotspot") inj.objects_per_hotspot = integral(values[v], p);
      if (p == "regions_per_hotspot") inj.regions_per_hotspot = integral(values[v], p);
      if (p == "stops_per_region") inj.stops_per_region = integral(values[v], p);
      if (p == "hotspots") inj.hotspots = integral(values[v], p);
      inj.validate();
      runner.log("configuration " + std::to_string(v + 1) + "/" + std::to_string(values.size()) + ": " +
                 std::to_string(cfg.evaluation.datasets) + " datasets");
      const auto datasets = generate_configuration(inj, seeds, index, cfg.evaluation.datasets,
                                                   derive_seed(cfg.seeds().injection, v), cfg.workers);
      EvaluationOptions eo;
      eo.scan = cfg.scan;
      eo.scan.seed = derive_seed(cfg.seeds().scan, v);
      eo.mode = cfg.evaluation.mode;
      eo.include_all_grids = cfg.evaluation.include_all_grids;
      EvaluationReport report = evaluate_configuration(lists, family, objects.size(), datasets, eo);
      report.parameter = p;
      report.param_value = p.empty() ? std::string() : io::format_double(values[v]);
      reports.push_back(std::move(report));
    }
    io::write_file(runner.dir() / kReportCsv, report_csv(reports));
    json doc = stamp(cfg);
    doc["reports"] = json::array();
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    io::write_json(runner.dir() / kReportJson, doc);
  });
  return runner.reports();
}

void plot(std::span<const fs::path> reports, const fs::path& output) {
  if (reports.empty()) throw ConfigError("plot needs at least one report");
  std::vector<EvaluationReport> all;
  for (const auto& path : reports) {
    require_file(path, "report");
    const json doc = io::read_json(path);
    if (!doc.contains("reports") || !doc.at("reports").is_array()) {
      throw InputError(path.string() + ": not an evaluation report");
    }
    for (const auto& r : doc.at("reports")) all.push_back(report_from_json(r));
  }
  io::write_file(output, render_svg(all));
}

json build_bundle(const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  auto need = [&](const char* file, const char* stage) {
    if (!fs::is_regular_file(dir / file)) {
      throw MissingStageError(std::string(stage) + " stage has not run: " + (dir / file).string() + " is missing");
    }
  };
  need(kGrids, "zoning");
  need(kScanResult, "scan");
  const GridFamily family = family_from_json(io::read_json(dir / kGrids));
  const json scan = io::read_json(dir / kScanResult);

  ObjectRegistry objects;
  std::vector<std::vector<CellSet>> cellsets;
  for (const auto& g : family.grids) {
    const fs::path p = dir / cellset_file(g);
    if (!fs::is_regular_file(p)) {
      throw MissingStageError("mapping stage has not run: " + p.string() + " is missing");
    }
    cellsets.push_back(read_cellsets_csv(p, g, objects));
  }

  std::map<std::string, std::uint32_t> grid_by_id;
  for (const auto& g : family.grids) grid_by_id[g.id] = g.index;

  struct Extreme {
    std::vector<std::uint32_t> cells;
    json entry;
    std::vector<ObjectIndex> tidset;
  };
  std::vector<std::vector<Extreme>> extremes(family.grids.size());
  try {
    for (const auto& e : scan.at("extreme")) {
      const auto it = grid_by_id.find(e.at("grid").get<std::string>());
      if (it == grid_by_id.end()) throw InputError("scan result names an unknown grid");
      Extreme x;
      x.cells = e.at("cells").get<std::vector<std::uint32_t>>();
      for (const auto& cs : cellsets[it->second]) {
        if (std::includes(cs.cells.begin(), cs.cells.end(), x.cells.begin(), x.cells.end())) {
          x.tidset.push_back(cs.object);
        }
      }
      std::sort(x.tidset.begin(), x.tidset.end());
      json ids = json::array();
      for (ObjectIndex o : x.tidset) ids.push_back(objects.id(o));
      x.entry = {{"cells", x.cells},
                 {"support", e.at("support")},
                 {"t_c", e.at("t_c")},
                 {"p_c", e.at("p_c")},
                 {"objects", std::move(ids)}};
      extremes[it->second].push_back(std::move(x));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed scan result: ") + e.what());
  }

  std::optional<std::vector<ObjectIndex>> truth;
  const fs::path truth_path =
      cfg.inputs.ground_truth_objects ? *cfg.inputs.ground_truth_objects : dir / kGroundTruthObjects;
  if (fs::is_regular_file(truth_path)) truth = read_ground_truth_objects(truth_path, objects);
  auto ids_of = [&](const std::vector<ObjectIndex>& v) {
    json out = json::array();
    for (ObjectIndex o : v) out.push_back(objects.id(o));
    return out;
  };
  auto metrics_of = [&](const std::vector<ObjectIndex>& detected) -> json {
    if (!truth || truth->empty()) return nullptr;
    const auto sp = sensitivity_ppv(*truth, detected);
    return {{"sensitivity", sp.sensitivity}, {"ppv", sp.ppv ? json(*sp.ppv) : json()}};
  };

  json resolutions = json::object();
  json order = json::array();
  std::vector<ObjectIndex> all_detected;
  for (double res : family.resolutions) {
    const std::string key = format_resolution(res);
    order.push_back(res);
    json shifts = json::array();
    std::vector<ObjectIndex> detected;
    for (std::uint32_t g : family.grids_at(res)) {
      const Grid& grid = family.grids[g];
      std::map<std::uint32_t, std::uint32_t> coverage;
      json cands = json::array();
      for (const auto& x : extremes[g]) {
        for (std::uint32_t c : x.cells) ++coverage[c];
        cands.push_back(x.entry);
        detected.insert(detected.end(), x.tidset.begin(), x.tidset.end());
      }
      std::vector<std::uint32_t> cells;
      for (const auto& [c, n] : coverage) cells.push_back(c);
      json layer = cells_geojson(grid, cells);
      for (auto& f : layer["features"]) f["properties"]["coverage"] = coverage.at(f["properties"]["cell"].get<std::uint32_t>());
      shifts.push_back({{"grid_id", grid.id},
                        {"shift_index", grid.shift_index},
                        {"shift_x", grid.shift_x},
                        {"shift_y", grid.shift_y},
                        {"grid", to_json(grid)},
                        {"extreme", std::move(cands)},
                        {"cells", std::move(layer)}});
    }
    std::sort(detected.begin(), detected.end());
    detected.erase(std::unique(detected.begin(), detected.end()), detected.end());
    all_detected.insert(all_detected.end(), detected.begin(), detected.end());
    resolutions[key] = {
        {"resolution", res}, {"shifts", std::move(shifts)}, {"u_hat", ids_of(detected)}, {"metrics", metrics_of(detected)}};
  }
  std::sort(all_detected.begin(), all_detected.end());
  all_detected.erase(std::unique(all_detected.begin(), all_detected.end()), all_detected.end());

  json stops_layer = {{"total", 0}, {"included", 0}, {"points", json::array()}};
  std::vector<PlanarPoint> locations;
  if (fs::is_regular_file(dir / kStops)) {
    ObjectRegistry scratch;
    for (const auto& s : read_stops_csv(dir / kStops, scratch)) locations.push_back(s.location);
  } else if (fs::is_regular_file(dir / kPoints)) {
    for (const auto& p : read_points_csv(dir / kPoints, false).points) locations.push_back(p.location);
  }
  if (!locations.empty()) {
    std::vector<std::size_t> keep(locations.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    if (keep.size() > cfg.export_spec.max_stops) {
      Rng rng(cfg.seeds().subsample);
      for (std::size_t i = 0; i < cfg.export_spec.max_stops; ++i) std::swap(keep[i], keep[i + rng.below(keep.size() - i)]);
      keep.resize(cfg.export_spec.max_stops);
      std::sort(keep.begin(), keep.end());
    }
    json pts = json::array();
    for (std::size_t i : keep) pts.push_back({locations[i].x, locations[i].y});
    stops_layer = {{"total", locations.size()}, {"included", keep.size()}, {"points", std::move(pts)}};
  }

  json ground_truth = nullptr;
  if (truth) {
    const fs::path gj = cfg.inputs.ground_truth_geojson ? *cfg.inputs.ground_truth_geojson : dir / kGroundTruth;
    ground_truth = {{"objects", ids_of(*truth)},
                    {"hotspots", fs::is_regular_file(gj) ? geojson::load(gj) : geojson::feature_collection({})}};
  }

  json manifest = fs::is_regular_file(dir / kManifest) ? io::read_json(dir / kManifest) : json::object();
  if (manifest.contains("stages") && manifest["stages"].is_object()) manifest["stages"].erase("evaluate");
  return {{"schema_version", "1.0.0"},
          {"config_hash", scan.value("config_hash", "")},
          {"seeds", scan.value("seeds", json::object())},
          {"crs", "planar-meters"},
          {"bbox", {family.bbox.min_x, family.bbox.min_y, family.bbox.max_x, family.bbox.max_y}},
          {"scan",
           {{"t_obs", scan.at("t_obs")},
            {"p_hat", scan.at("p_hat")},
            {"rejected", scan.at("rejected")},
            {"alpha", scan.at("alpha")},
            {"n_sims", scan.at("n_sims")},
            {"n_objects", scan.value("n_objects", 0)},
            {"n_candidates", scan.value("n_candidates", 0)}}},
          {"resolution_order", std::move(order)},
          {"resolutions", std::move(resolutions)},
          {"u_hat", ids_of(all_detected)},
          {"metrics", metrics_of(all_detected)},
          {"stops", std::move(stops_layer)},
          {"ground_truth", std::move(ground_truth)},
          {"manifest", manifest}};
}

void export_bundle(const RunConfig& cfg, const fs::path& output, const Options& options) {
  const json bundle = build_bundle(cfg);
  io::write_json(output, bundle);
  if (options.log) *options.log << "wrote " << output.string() << '\n';
}

}  // namespace mobfair::pipeline
