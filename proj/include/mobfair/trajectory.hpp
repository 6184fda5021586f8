#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mobfair/geo.hpp"

namespace mobfair {

// Dense re-indexing of object identifiers; index order is first-seen order.
using ObjectIndex = std::uint32_t;

class ObjectRegistry {
 public:
  // Index of `id`, registering it if new.
  ObjectIndex intern(std::string_view id);
  std::optional<ObjectIndex> find(std::string_view id) const;
  const std::string& id(ObjectIndex i) const { return ids_[i]; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, ObjectIndex> index_;
};

struct TimedPoint {
  std::int64_t t = 0;  // epoch seconds
  PlanarPoint position;
};

struct Trajectory {
  ObjectIndex object = 0;
  std::vector<TimedPoint> samples;  // strictly increasing t
};

// A stay: centroid of the contributing samples and the stay's time bounds.
struct StopSegment {
  ObjectIndex object = 0;
  PlanarPoint location;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;

  friend bool operator==(const StopSegment&, const StopSegment&) = default;
};

struct SegmentationConfig {
  double max_stay_radius = 50.0;        // meters, distance to the window's first sample
  std::int64_t min_stay_duration = 600;  // seconds
  double compression_radius = 1.0;       // meters

  // Throws ConfigError unless every field is strictly positive.
  void validate() const;
};

// Anchor-based compression: each maximal run of consecutive samples within
// `radius` of the run's first sample collapses to one sample at the
// component-wise median (even counts average the two middle values), stamped
// with the anchor's time. Throws InvalidInputError on unsorted input.
std::vector<TimedPoint> compress(std::span<const TimedPoint> samples, double radius);

// Stay-point detection over a time-sorted sample list. A window [a..b] is a
// stay when every sample lies within max_stay_radius of sample a (inclusive)
// and t_b - t_a >= min_stay_duration; the window is extended maximally, the
// stop location is the mean of the window, and scanning resumes at b + 1.
std::vector<StopSegment> detect_stops(ObjectIndex object, std::span<const TimedPoint> samples,
                                      const SegmentationConfig& cfg);

// compress() with cfg.compression_radius followed by detect_stops().
std::vector<StopSegment> segment_trajectory(const Trajectory& trajectory, const SegmentationConfig& cfg);

// Segments every trajectory on up to `workers` threads; output is grouped by
// trajectory in input order.
std::vector<StopSegment> segment_all(std::span<const Trajectory> trajectories, const SegmentationConfig& cfg,
                                     unsigned workers = 1);

struct TrajectoryTable {
  ObjectRegistry objects;
  std::vector<Trajectory> trajectories;  // one per object, ordered by ObjectIndex
};

// Reads `object_id,t,x,y` (or `object_id,t,lon,lat` when `lonlat` is set, which
// projects the coordinates about their centroid). Samples are sorted by time
// and samples sharing a timestamp collapse to the first one read.
TrajectoryTable read_trajectories_csv(const std::filesystem::path& path, bool lonlat = false);

void write_trajectories_csv(const std::filesystem::path& path, std::span<const Trajectory> trajectories,
                            const ObjectRegistry& objects);

// `object_id,x,y,t_start,t_end`
void write_stops_csv(const std::filesystem::path& path, std::span<const StopSegment> stops,
                     const ObjectRegistry& objects);
std::string stops_csv(std::span<const StopSegment> stops, const ObjectRegistry& objects);

// Appends unknown object ids to `objects`.
std::vector<StopSegment> read_stops_csv(const std::filesystem::path& path, ObjectRegistry& objects);

}  // namespace mobfair
