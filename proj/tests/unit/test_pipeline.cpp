#include <doctest.h>

#include <chrono>
#include <map>
#include <thread>

#include <httplib.h>

#include "mobfair/config.hpp"
#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/pipeline.hpp"
#include "mobfair/serve.hpp"
#include "oracles.hpp"

using namespace mobfair;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config(const fs::path& out) {
  return {{"seed", 11},
          {"output_dir", out.string()},
          {"movement", {{"objects", 300}, {"days", 5}, {"bbox", {0, 0, 2000, 2000}}}},
          {"grids", {{"resolutions", {200, 500}}, {"shifts", 2}}},
          {"scan", {{"n_sims", 99}}},
          {"injection", {{"objects_per_hotspot", 60}, {"regions_per_hotspot", 1}, {"magnitude", 0.6}}},
          {"evaluation", {{"datasets", 4}}}};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_file(e.path());
  }
  return out;
}

bool any_ran(const std::vector<pipeline::StageReport>& r) {
  for (const auto& s : r) {
    if (s.ran) return true;
  }
  return false;
}

void full_run(const RunConfig& cfg) {
  pipeline::generate(cfg, {});
  pipeline::inject(cfg, {});
  pipeline::assess(cfg, {});
  pipeline::export_bundle(cfg, cfg.output_dir / "bundle.json", {});
}

}  // namespace

TEST_CASE("assess run writes every artifact and a bundle") {
  const auto dir = oracle::scratch_dir("pipe_full");
  const auto cfg = config_from_json(small_config(dir));
  full_run(cfg);
  for (const char* f : {"manifest.json", "stops.csv", "labels.csv", "ground_truth.geojson", "ground_truth_objects.csv",
                        "grids.json", "scan_result.json", "cellsets/r200_s0.csv", "cellsets/r500_s1.csv",
                        "bundle.json"}) {
    CHECK_MESSAGE(fs::is_regular_file(dir / f), f);
  }
  const auto scan = io::read_json(dir / "scan_result.json");
  CHECK(scan["config_hash"] == cfg.hash());
  CHECK(scan["seeds"]["master"] == 11);
  CHECK(scan["n_sims"] == 99);
  const auto manifest = io::read_json(dir / "manifest.json");
  CHECK(manifest["config_hash"] == cfg.hash());
  for (const char* stage : {"generate", "inject", "zoning", "mapping", "scan"}) {
    CHECK_MESSAGE(manifest["stages"].contains(stage), stage);
  }

  const auto bundle = io::read_json(dir / "bundle.json");
  CHECK(bundle["schema_version"] == "1.0.0");
  CHECK(bundle["config_hash"] == cfg.hash());
  CHECK(bundle["resolutions"].size() == 2);
  for (const auto& [key, res] : bundle["resolutions"].items()) {
    REQUIRE(res["shifts"].size() == 2);
    for (const auto& s : res["shifts"]) {
      CHECK(s["cells"]["type"] == "FeatureCollection");
      for (const auto& f : s["cells"]["features"]) CHECK(f["properties"]["coverage"].get<int>() >= 1);
    }
  }
  REQUIRE(bundle["ground_truth"].is_object());
  CHECK(bundle["ground_truth"]["hotspots"]["features"].size() == 1);
  CHECK(bundle["stops"]["included"].get<std::size_t>() <= cfg.export_spec.max_stops);
  if (bundle["scan"]["rejected"].get<bool>()) {
    CHECK(bundle["metrics"].is_object());
  } else {
    CHECK(bundle["u_hat"].empty());
  }
}

TEST_CASE("unchanged stages are skipped and changed ones rerun") {
  const auto dir = oracle::scratch_dir("pipe_cache");
  auto doc = small_config(dir);
  const auto cfg = config_from_json(doc);
  full_run(cfg);
  const auto before = snapshot(dir);
  CHECK_FALSE(any_ran(pipeline::generate(cfg, {})));
  CHECK_FALSE(any_ran(pipeline::inject(cfg, {})));
  CHECK_FALSE(any_ran(pipeline::assess(cfg, {})));

  doc["scan"]["n_sims"] = 199;
  const auto changed = config_from_json(doc);
  const auto reports = pipeline::assess(changed, {});
  for (const auto& r : reports) CHECK_MESSAGE(r.ran == (r.name == "scan"), r.name);

  io::write_file(dir / "cellsets/r200_s0.csv", "object_id,grid_id,cell_dense_index,distinct_days\n");
  const auto repaired = pipeline::assess(changed, {});
  for (const auto& r : repaired) {
    if (r.name == "mapping") CHECK(r.ran);
    if (r.name == "zoning") CHECK_FALSE(r.ran);
  }
  CHECK(io::read_file(dir / "cellsets/r200_s0.csv") == before.at("cellsets/r200_s0.csv"));

  pipeline::Options force;
  force.force = true;
  for (const auto& r : pipeline::assess(changed, force)) CHECK(r.ran);
}

TEST_CASE("same seed in two directories gives byte-identical artifacts") {
  const auto a = oracle::scratch_dir("pipe_det_a");
  const auto b = oracle::scratch_dir("pipe_det_b");
  auto doc_b = small_config(b);
  doc_b["workers"] = 4;
  full_run(config_from_json(small_config(a)));
  full_run(config_from_json(doc_b));
  const auto sa = snapshot(a);
  const auto sb = snapshot(b);
  REQUIRE(sa.size() == sb.size());
  for (const auto& [name, bytes] : sa) {
    REQUIRE(sb.count(name) == 1);
    CHECK_MESSAGE(bytes == sb.at(name), name);
  }
}

TEST_CASE("missing inputs and stages are reported") {
  const auto dir = oracle::scratch_dir("pipe_missing");
  auto doc = small_config(dir);
  doc.erase("seed");
  const auto unseeded = config_from_json(doc);
  CHECK_THROWS_AS(pipeline::generate(unseeded, {}), ConfigError);
  CHECK_THROWS_AS(pipeline::inject(unseeded, {}), ConfigError);
  CHECK_THROWS_AS(pipeline::assess(unseeded, {}), ConfigError);
  CHECK_THROWS_AS(pipeline::build_bundle(unseeded), MissingStageError);
  doc["inputs"] = {{"stops", (dir / "nope.csv").string()}};
  CHECK_THROWS_AS(pipeline::assess(config_from_json(doc), {}), InputError);
}

TEST_CASE("segment then assess from external files") {
  const auto dir = oracle::scratch_dir("pipe_segment");
  const auto src = oracle::scratch_dir("pipe_segment_src");
  auto gen_doc = small_config(src);
  gen_doc["write_trajectories"] = true;
  gen_doc["movement"]["objects"] = 100;
  const auto gen = config_from_json(gen_doc);
  pipeline::generate(gen, {});
  pipeline::inject(gen, {});

  auto doc = small_config(dir);
  doc["inputs"] = {{"trajectories", (src / "trajectories.csv").string()}, {"labels", (src / "labels.csv").string()}};
  const auto cfg = config_from_json(doc);
  pipeline::assess(cfg, {});
  CHECK(io::read_file(dir / "stops.csv") == io::read_file(src / "stops.csv"));
  CHECK(fs::is_regular_file(dir / "scan_result.json"));
}

TEST_CASE("reduce assesses single points") {
  const auto dir = oracle::scratch_dir("pipe_reduce");
  std::string points = "object_id,x,y\n";
  std::string labels = "object_id,label\n";
  Rng rng(1);
  for (int i = 0; i < 400; ++i) {
    const double x = rng.uniform(0, 1000);
    const double y = rng.uniform(0, 1000);
    const bool cluster = x < 250 && y < 250;
    points += "p" + std::to_string(i) + "," + io::format_double(x) + "," + io::format_double(y) + "\n";
    labels += "p" + std::to_string(i) + "," + (rng.bernoulli(cluster ? 0.05 : 0.6) ? "1" : "0") + "\n";
  }
  io::write_file(dir / "points_in.csv", points);
  io::write_file(dir / "labels_in.csv", labels);
  auto doc = small_config(dir);
  doc["inputs"] = {{"points", (dir / "points_in.csv").string()}, {"labels", (dir / "labels_in.csv").string()}};
  doc["grids"] = {{"resolutions", {250}}, {"shifts", 1}, {"bbox", {0, 0, 1000, 1000}}};
  doc["dump_candidates"] = true;
  const auto cfg = config_from_json(doc);
  pipeline::reduce(cfg, {});
  const auto scan = io::read_json(dir / "scan_result.json");
  CHECK(scan["rejected"] == true);
  const auto cellsets = io::CsvTable::read(dir / "cellsets/r250_s0.csv");
  CHECK(cellsets.rows() == 400);
  const auto dump = io::read_file(dir / "candidates.jsonl");
  CHECK(std::count(dump.begin(), dump.end(), '\n') == 16);
  const auto bundle = pipeline::build_bundle(cfg);
  CHECK(bundle["stops"]["total"] == 400);
  CHECK(bundle["ground_truth"].is_null());
  CHECK(bundle["resolutions"]["250"]["shifts"][0]["extreme"].size() >= 1);
}

TEST_CASE("evaluate writes reports and plot renders them") {
  const auto dir = oracle::scratch_dir("pipe_eval");
  auto doc = small_config(dir);
  doc["evaluation"] = {{"datasets", 3}, {"parameter", "magnitude"}, {"values", {0.0, 0.6}}};
  const auto cfg = config_from_json(doc);
  pipeline::evaluate(cfg, {});
  const auto report = io::read_json(dir / "report.json");
  REQUIRE(report["reports"].size() == 2);
  CHECK(report["reports"][1]["param_value"] == "0.6");
  CHECK(report["reports"][0]["scopes"].size() == 3);
  const auto csv = io::CsvTable::read(dir / "report.csv");
  CHECK(csv.rows() == 6);
  CHECK_FALSE(any_ran(pipeline::evaluate(cfg, {})));
  const std::vector<fs::path> reports{dir / "report.json"};
  pipeline::plot(reports, dir / "plot.svg");
  CHECK(io::read_file(dir / "plot.svg").find("<svg") != std::string::npos);
  const std::vector<fs::path> bogus{dir / "scan_result.json"};
  CHECK_THROWS(pipeline::plot(bogus, dir / "x.svg"));
}

TEST_CASE("serve returns the exported bundle byte for byte") {
  const auto dir = oracle::scratch_dir("serve");
  io::write_file(dir / "bundle.json", R"({"schema_version": "1.0.0", "x": [1, 2, 3]})" "\n");
  fs::create_directories(dir / "static");
  io::write_file(dir / "static" / "index.html", "<html></html>");
  BundleServer server(dir / "bundle.json", dir / "static");
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 50 && !res; ++i) {
    res = client.Get("/bundle.json");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == io::read_file(dir / "bundle.json"));
  const auto index = client.Get("/index.html");
  REQUIRE(index);
  CHECK(index->body == "<html></html>");
  const auto post = client.Post("/bundle.json", "{}", "application/json");
  REQUIRE(post);
  CHECK(post->status != 200);
  server.stop();
  t.join();
  CHECK(kDefaultPort == 8080);
  CHECK_THROWS_AS(BundleServer(dir / "absent.json"), InputError);
}
