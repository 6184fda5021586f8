#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobfair/config.hpp"
#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/pipeline.hpp"
#include "mobfair/serve.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitRuntime = 4;

mobfair::BundleServer* active_server = nullptr;

void on_signal(int) {
  if (active_server) active_server->stop();
}

// Flag values that override fields of the JSON config.
struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool force = false;
  bool quiet = false;

  std::optional<std::string> trajectories, stops, points, labels, seed_polygons, ground_truth;
  bool lonlat = false;

  std::optional<std::size_t> objects;
  std::optional<int> days;
  bool write_trajectories = false;

  std::optional<double> magnitude, q_out;
  std::optional<std::uint32_t> objects_per_hotspot, regions, stops_per_region, hotspots, tolerance;

  std::vector<double> resolutions;
  std::optional<std::uint32_t> shifts, top_i;
  std::optional<std::int64_t> tz_offset;
  std::vector<double> bbox;
  std::optional<double> alpha;
  std::optional<std::uint32_t> sims;
  std::optional<std::string> tail;
  bool dump_candidates = false;

  std::optional<std::size_t> datasets;
  std::optional<std::string> parameter, mode;
  std::vector<double> values;

  std::optional<std::size_t> max_stops;

  json patch() const {
    json p = json::object();
    auto set = [&](std::initializer_list<const char*> path, const json& v) {
      json* node = &p;
      const char* const* key = path.begin();
      for (; key + 1 != path.end(); ++key) node = &(*node)[*key];
      (*node)[*key] = v;
    };
    if (out) set({"output_dir"}, *out);
    if (seed) set({"seed"}, *seed);
    if (workers) set({"workers"}, *workers);
    if (trajectories) set({"inputs", "trajectories"}, *trajectories);
    if (stops) set({"inputs", "stops"}, *stops);
    if (points) set({"inputs", "points"}, *points);
    if (labels) set({"inputs", "labels"}, *labels);
    if (seed_polygons) set({"inputs", "seed_polygons"}, *seed_polygons);
    if (ground_truth) set({"inputs", "ground_truth_objects"}, *ground_truth);
    if (lonlat) set({"inputs", "lonlat"}, true);
    if (objects) set({"movement", "objects"}, *objects);
    if (days) set({"movement", "days"}, *days);
    if (write_trajectories) set({"write_trajectories"}, true);
    if (magnitude) set({"injection", "magnitude"}, *magnitude);
    if (q_out) set({"injection", "q_out"}, *q_out);
    if (objects_per_hotspot) set({"injection", "objects_per_hotspot"}, *objects_per_hotspot);
    if (regions) set({"injection", "regions_per_hotspot"}, *regions);
    if (stops_per_region) set({"injection", "stops_per_region"}, *stops_per_region);
    if (hotspots) set({"injection", "hotspots"}, *hotspots);
    if (tolerance) set({"injection", "tolerance"}, *tolerance);
    if (!resolutions.empty()) set({"grids", "resolutions"}, resolutions);
    if (shifts) set({"grids", "shifts"}, *shifts);
    if (!bbox.empty()) set({"grids", "bbox"}, bbox);
    if (top_i) set({"mapping", "top_i"}, *top_i);
    if (tz_offset) set({"mapping", "tz_offset_seconds"}, *tz_offset);
    if (alpha) set({"scan", "alpha"}, *alpha);
    if (sims) set({"scan", "n_sims"}, *sims);
    if (tail) set({"scan", "tail"}, *tail);
    if (dump_candidates) set({"dump_candidates"}, true);
    if (datasets) set({"evaluation", "datasets"}, *datasets);
    if (parameter) set({"evaluation", "parameter"}, *parameter);
    if (mode) set({"evaluation", "mode"}, *mode);
    if (!values.empty()) set({"evaluation", "values"}, values);
    if (max_stops) set({"export", "max_stops"}, *max_stops);
    return p;
  }

  mobfair::RunConfig resolve() const {
    json doc = json::object();
    if (!config.empty()) {
      try {
        doc = mobfair::io::read_json(config);
      } catch (const mobfair::InputError& e) {
        throw mobfair::ConfigError(e.what());
      }
    }
    doc.merge_patch(patch());
    return mobfair::config_from_json(doc);
  }
};

void common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.out, "run directory (default: run)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("-j,--workers", o.workers, "maximum concurrent workers (0: all cores)");
  cmd->add_flag("--force", o.force, "rerun stages that are up to date");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress messages");
}

void grid_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--resolutions", o.resolutions, "grid resolutions in meters")->delimiter(',');
  cmd->add_option("--shifts", o.shifts, "alignment shifts per resolution");
  cmd->add_option("--bbox", o.bbox, "study area min_x,min_y,max_x,max_y")->delimiter(',')->expected(4);
  cmd->add_option("--top-i", o.top_i, "cells kept per object and grid");
  cmd->add_option("--tz-offset", o.tz_offset, "UTC offset in seconds for day boundaries");
  cmd->add_option("--alpha", o.alpha, "significance level");
  cmd->add_option("--sims", o.sims, "Monte Carlo simulations");
  cmd->add_option("--tail", o.tail, "two_sided, high or low");
}

void injection_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed-polygons", o.seed_polygons, "GeoJSON polygons hotspots are drawn from");
  cmd->add_option("--magnitude", o.magnitude, "difference of positive rates outside and inside hotspots");
  cmd->add_option("--q-out", o.q_out, "positive rate outside hotspots");
  cmd->add_option("--objects-per-hotspot", o.objects_per_hotspot, "target associated objects");
  cmd->add_option("--tolerance", o.tolerance, "allowed deviation from the target");
  cmd->add_option("--regions", o.regions, "regions per hotspot");
  cmd->add_option("--stops-per-region", o.stops_per_region, "stops required in each region");
  cmd->add_option("--hotspots", o.hotspots, "hotspots per dataset");
}

void movement_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--objects", o.objects, "number of moving objects");
  cmd->add_option("--days", o.days, "simulated days");
}

int run(int argc, char** argv) {
  CLI::App app{"Assess movement-pattern unfairness in the predictions of a model about moving objects."};
  app.require_subcommand(1);
  Overrides o;

  auto* generate = app.add_subcommand("generate", "generate synthetic movement and its stops");
  common(generate, o);
  movement_flags(generate, o);
  generate->add_flag("--trajectories", o.write_trajectories, "also write the raw trajectories");

  auto* segment = app.add_subcommand("segment", "detect stops in trajectories");
  common(segment, o);
  segment->add_option("--trajectories", o.trajectories, "CSV object_id,t,x,y");
  segment->add_flag("--lonlat", o.lonlat, "coordinates are lon/lat");

  auto* inject = app.add_subcommand("inject", "inject a hotspot of unfairness and draw labels");
  common(inject, o);
  inject->add_option("--stops", o.stops, "CSV object_id,x,y,t_start,t_end");
  injection_flags(inject, o);

  auto* assess = app.add_subcommand("assess", "run the assessment on stops and labels");
  common(assess, o);
  assess->add_option("--stops", o.stops, "CSV object_id,x,y,t_start,t_end");
  assess->add_option("--trajectories", o.trajectories, "CSV object_id,t,x,y (segmented first)");
  assess->add_option("--labels", o.labels, "CSV object_id,label");
  assess->add_flag("--lonlat", o.lonlat, "trajectory coordinates are lon/lat");
  assess->add_flag("--dump-candidates", o.dump_candidates, "write candidates.jsonl");
  grid_flags(assess, o);

  auto* reduce = app.add_subcommand("reduce", "assess objects described by a single location");
  common(reduce, o);
  reduce->add_option("--points", o.points, "CSV object_id,x,y");
  reduce->add_option("--labels", o.labels, "CSV object_id,label");
  reduce->add_flag("--lonlat", o.lonlat, "point coordinates are lon/lat");
  reduce->add_flag("--dump-candidates", o.dump_candidates, "write candidates.jsonl");
  grid_flags(reduce, o);

  auto* evaluate = app.add_subcommand("evaluate", "measure power, sensitivity and PPV on injected datasets");
  common(evaluate, o);
  evaluate->add_option("--stops", o.stops, "movement data (generated when absent)");
  evaluate->add_option("--datasets", o.datasets, "datasets per configuration");
  evaluate->add_option("--parameter", o.parameter, "injection parameter to vary");
  evaluate->add_option("--values", o.values, "values of the varied parameter")->delimiter(',');
  evaluate->add_option("--mode", o.mode, "pooled or averaged shifts per resolution");
  movement_flags(evaluate, o);
  injection_flags(evaluate, o);
  grid_flags(evaluate, o);

  std::vector<std::string> reports;
  std::string svg = "plot.svg";
  auto* plot = app.add_subcommand("plot", "render evaluation reports as SVG");
  plot->add_option("-r,--report", reports, "report.json files")->required()->check(CLI::ExistingFile);
  plot->add_option("--output", svg, "SVG file to write");

  std::optional<std::string> bundle_out;
  auto* exporter = app.add_subcommand("export", "write the explorer bundle of a run");
  common(exporter, o);
  exporter->add_option("--output", bundle_out, "bundle file (default: <run>/bundle.json)");
  exporter->add_option("--max-stops", o.max_stops, "stop centroids kept in the bundle");
  exporter->add_option("--ground-truth", o.ground_truth, "CSV object_id,hotspot_index");

  std::optional<std::string> bundle_in;
  std::optional<std::string> static_dir;
  std::string host = "127.0.0.1";
  int port = mobfair::kDefaultPort;
  auto* serve = app.add_subcommand("serve", "serve a bundle over HTTP");
  serve->add_option("--bundle", bundle_in, "bundle file (default: run/bundle.json)");
  serve->add_option("--static", static_dir, "directory of explorer assets");
  serve->add_option("--host", host, "interface to bind");
  serve->add_option("--port", port, "TCP port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  mobfair::pipeline::Options options;
  options.force = o.force;
  options.log = o.quiet ? nullptr : &std::cerr;

  if (*plot) {
    std::vector<fs::path> paths(reports.begin(), reports.end());
    mobfair::pipeline::plot(paths, svg);
    return 0;
  }
  if (*serve) {
    const fs::path path = bundle_in ? fs::path(*bundle_in) : fs::path("run") / "bundle.json";
    mobfair::BundleServer server(path, static_dir ? std::optional<fs::path>(*static_dir) : std::nullopt);
    const int bound = server.bind(host, port);
    std::cerr << "serving " << path.string() << " at http://" << host << ":" << bound << "/bundle.json\n";
    active_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    active_server = nullptr;
    return 0;
  }

  const mobfair::RunConfig cfg = o.resolve();
  if (*generate) mobfair::pipeline::generate(cfg, options);
  if (*segment) mobfair::pipeline::segment(cfg, options);
  if (*inject) mobfair::pipeline::inject(cfg, options);
  if (*assess) mobfair::pipeline::assess(cfg, options);
  if (*reduce) mobfair::pipeline::reduce(cfg, options);
  if (*evaluate) mobfair::pipeline::evaluate(cfg, options);
  if (*exporter) {
    const fs::path out = bundle_out ? fs::path(*bundle_out) : cfg.output_dir / "bundle.json";
    mobfair::pipeline::export_bundle(cfg, out, options);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mobfair::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mobfair::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const mobfair::InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const mobfair::MissingStageError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const mobfair::NoCandidatesError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
