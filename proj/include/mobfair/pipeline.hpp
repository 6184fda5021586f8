#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/config.hpp"

namespace mobfair::pipeline {

struct Options {
  bool force = false;             // rerun stages even when up to date
  std::ostream* log = nullptr;    // progress messages; null for silence
};

struct StageReport {
  std::string name;
  bool ran = false;  // false when skipped as up to date
};

// Content fingerprint of a file (16 hex digits).
std::string file_hash(const std::filesystem::path& path);

// `manifest.json` of a run directory: for each stage, the fingerprint of its
// inputs and the hashes of the files it wrote.
class StageRunner {
 public:
  StageRunner(const RunConfig& cfg, const Options& options);

  const std::filesystem::path& dir() const { return dir_; }

  // Runs `body` unless the stored fingerprint equals `fingerprint` and every
  // output still has its recorded hash. Output paths are relative to dir().
  bool run(const std::string& name, const nlohmann::json& fingerprint, const std::vector<std::string>& outputs,
           const std::function<void()>& body);

  const std::vector<StageReport>& reports() const { return reports_; }
  void log(const std::string& message) const;

 private:
  void reload();
  void save() const;

  const RunConfig& cfg_;
  Options options_;
  std::filesystem::path dir_;
  nlohmann::json manifest_;
  std::vector<StageReport> reports_;
};

// Subcommand bodies. Each returns the stages it considered.
std::vector<StageReport> generate(const RunConfig& cfg, const Options& options);
std::vector<StageReport> segment(const RunConfig& cfg, const Options& options);
std::vector<StageReport> inject(const RunConfig& cfg, const Options& options);
std::vector<StageReport> assess(const RunConfig& cfg, const Options& options);
std::vector<StageReport> reduce(const RunConfig& cfg, const Options& options);
std::vector<StageReport> evaluate(const RunConfig& cfg, const Options& options);

// Renders the reports stored in one or more `report.json` files.
void plot(std::span<const std::filesystem::path> reports, const std::filesystem::path& output);

// Writes the explorer bundle of a completed assess or reduce run. Throws
// MissingStageError naming the absent artifact otherwise.
nlohmann::json build_bundle(const RunConfig& cfg);
void export_bundle(const RunConfig& cfg, const std::filesystem::path& output, const Options& options);

}  // namespace mobfair::pipeline
