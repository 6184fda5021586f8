#include "mobfair/trajectory.hpp"

#include <algorithm>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/parallel.hpp"

namespace mobfair {

namespace {

void require_sorted(std::span<const TimedPoint> samples, const char* op) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t < samples[i - 1].t) {
      throw InvalidInputError(std::string(op) + ": samples are not sorted by time");
    }
  }
}

double median(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

}  // namespace

ObjectIndex ObjectRegistry::intern(std::string_view id) {
  std::string key(id);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const auto idx = static_cast<ObjectIndex>(ids_.size());
  ids_.push_back(key);
  index_.emplace(std::move(key), idx);
  return idx;
}

std::optional<ObjectIndex> ObjectRegistry::find(std::string_view id) const {
  if (auto it = index_.find(std::string(id)); it != index_.end()) return it->second;
  return std::nullopt;
}

void SegmentationConfig::validate() const {
  if (!(max_stay_radius > 0.0)) throw ConfigError("segmentation.max_stay_radius must be > 0");
  if (min_stay_duration <= 0) throw ConfigError("segmentation.min_stay_duration must be > 0");
  if (!(compression_radius > 0.0)) throw ConfigError("segmentation.compression_radius must be > 0");
}

std::vector<TimedPoint> compress(std::span<const TimedPoint> samples, double radius) {
  require_sorted(samples, "compress");
  std::vector<TimedPoint> out;
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t i = 0;
  while (i < samples.size()) {
    const TimedPoint& anchor = samples[i];
    std::size_t j = i + 1;
    while (j < samples.size() && distance(samples[j].position, anchor.position) <= radius) ++j;
    if (j == i + 1) {
      out.push_back(anchor);
    } else {
      xs.clear();
      ys.clear();
      for (std::size_t k = i; k < j; ++k) {
        xs.push_back(samples[k].position.x);
        ys.push_back(samples[k].position.y);
      }
      out.push_back({anchor.t, {median(xs), median(ys)}});
    }
    i = j;
  }
  return out;
}

std::vector<StopSegment> detect_stops(ObjectIndex object, std::span<const TimedPoint> samples,
                                      const SegmentationConfig& cfg) {
  require_sorted(samples, "detect_stops");
  std::vector<StopSegment> stops;
  const std::size_t n = samples.size();
  std::size_t a = 0;
  while (a < n) {
    std::size_t end = a + 1;
    while (end < n && distance(samples[end].position, samples[a].position) <= cfg.max_stay_radius) ++end;
    const std::size_t b = end - 1;
    if (samples[b].t - samples[a].t >= cfg.min_stay_duration) {
      double sx = 0.0;
      double sy = 0.0;
      for (std::size_t k = a; k <= b; ++k) {
        sx += samples[k].position.x;
        sy += samples[k].position.y;
      }
      const auto count = static_cast<double>(b - a + 1);
      stops.push_back({object, {sx / count, sy / count}, samples[a].t, samples[b].t});
      a = b + 1;
    } else {
      ++a;
    }
  }
  return stops;
}

std::vector<StopSegment> segment_trajectory(const Trajectory& trajectory, const SegmentationConfig& cfg) {
  const auto compressed = compress(trajectory.samples, cfg.compression_radius);
  return detect_stops(trajectory.object, compressed, cfg);
}

std::vector<StopSegment> segment_all(std::span<const Trajectory> trajectories, const SegmentationConfig& cfg,
                                     unsigned workers) {
  cfg.validate();
  std::vector<std::vector<StopSegment>> parts(trajectories.size());
  parallel_for(trajectories.size(), workers,
               [&](std::size_t i) { parts[i] = segment_trajectory(trajectories[i], cfg); });
  std::vector<StopSegment> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

TrajectoryTable read_trajectories_csv(const std::filesystem::path& path, bool lonlat) {
  const auto csv = io::CsvTable::read(path);
  const std::size_t c_id = csv.column("object_id");
  const std::size_t c_t = csv.column("t");
  const std::size_t c_x = csv.column(lonlat ? "lon" : "x");
  const std::size_t c_y = csv.column(lonlat ? "lat" : "y");

  std::vector<PlanarPoint> positions(csv.rows());
  if (lonlat) {
    std::vector<LonLat> coords(csv.rows());
    for (std::size_t r = 0; r < csv.rows(); ++r) coords[r] = {csv.number(r, c_x), csv.number(r, c_y)};
    positions = project_equirectangular(coords);
  } else {
    for (std::size_t r = 0; r < csv.rows(); ++r) positions[r] = {csv.number(r, c_x), csv.number(r, c_y)};
  }

  TrajectoryTable table;
  for (std::size_t r = 0; r < csv.rows(); ++r) {
    const ObjectIndex o = table.objects.intern(csv.text(r, c_id));
    if (o == table.trajectories.size()) table.trajectories.push_back({o, {}});
    table.trajectories[o].samples.push_back({csv.integer(r, c_t), positions[r]});
  }
  for (auto& tr : table.trajectories) {
    std::stable_sort(tr.samples.begin(), tr.samples.end(),
                     [](const TimedPoint& a, const TimedPoint& b) { return a.t < b.t; });
    tr.samples.erase(std::unique(tr.samples.begin(), tr.samples.end(),
                                 [](const TimedPoint& a, const TimedPoint& b) { return a.t == b.t; }),
                     tr.samples.end());
  }
  return table;
}

void write_trajectories_csv(const std::filesystem::path& path, std::span<const Trajectory> trajectories,
                            const ObjectRegistry& objects) {
  std::string out = "object_id,t,x,y\n";
  for (const auto& tr : trajectories) {
    const std::string& id = objects.id(tr.object);
    for (const auto& s : tr.samples) {
      out += id;
      out += ',';
      out += std::to_string(s.t);
      out += ',';
      out += io::format_double(s.position.x);
      out += ',';
      out += io::format_double(s.position.y);
      out += '\n';
    }
  }
  io::write_file(path, out);
}

std::string stops_csv(std::span<const StopSegment> stops, const ObjectRegistry& objects) {
  std::string out = "object_id,x,y,t_start,t_end\n";
  for (const auto& s : stops) {
    out += objects.id(s.object);
    out += ',';
    out += io::format_double(s.location.x);
    out += ',';
    out += io::format_double(s.location.y);
    out += ',';
    out += std::to_string(s.t_start);
    out += ',';
    out += std::to_string(s.t_end);
    out += '\n';
  }
  return out;
}

void write_stops_csv(const std::filesystem::path& path, std::span<const StopSegment> stops,
                     const ObjectRegistry& objects) {
  io::write_file(path, stops_csv(stops, objects));
}

std::vector<StopSegment> read_stops_csv(const std::filesystem::path& path, ObjectRegistry& objects) {
  const auto csv = io::CsvTable::read(path);
  const std::size_t c_id = csv.column("object_id");
  const std::size_t c_x = csv.column("x");
  const std::size_t c_y = csv.column("y");
  const std::size_t c_ts = csv.column("t_start");
  const std::size_t c_te = csv.column("t_end");
  std::vector<StopSegment> stops;
  stops.reserve(csv.rows());
  for (std::size_t r = 0; r < csv.rows(); ++r) {
    StopSegment s{objects.intern(csv.text(r, c_id)), {csv.number(r, c_x), csv.number(r, c_y)},
                  csv.integer(r, c_ts), csv.integer(r, c_te)};
    if (s.t_end < s.t_start) {
      throw InputError(path.string() + ": row " + std::to_string(r + 1) + " has t_end < t_start");
    }
    stops.push_back(s);
  }
  return stops;
}

}  // namespace mobfair
