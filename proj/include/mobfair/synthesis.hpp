#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/geo.hpp"
#include "mobfair/rng.hpp"
#include "mobfair/scan.hpp"
#include "mobfair/trajectory.hpp"

namespace mobfair {

// Routine-based movement generator. Each object owns a home, a work place and
// 2-4 extra places; every day it alternates stays at those places with
// straight-line trips, sampled at a fixed interval.
struct MovementConfig {
  std::size_t objects = 2000;
  int days = 10;
  BoundingBox bbox{0.0, 0.0, 4690.0, 4830.0};
  std::int64_t epoch = 1704067200;  // 2024-01-01T00:00:00Z
  std::int64_t sampling_interval = 120;
  double position_jitter = 4.0;  // meters, standard deviation per axis
  double travel_speed = 6.0;     // meters per second
  // Fraction of places drawn around shared hubs instead of uniformly.
  double density_skew = 0.5;
  int hubs = 6;
  double hub_spread = 0.08;  // hub standard deviation as a fraction of the shorter bbox side

  void validate() const;
};

nlohmann::json to_json(const MovementConfig& cfg);
MovementConfig movement_config_from_json(const nlohmann::json& j);

// Object identifier used by the generator, e.g. "mo000042".
std::string generated_object_id(std::size_t index);

// Full trajectory of one object. Objects are generated independently from
// derive_seed(seed, index), so any subset can be regenerated on its own.
Trajectory generate_trajectory(ObjectIndex index, const MovementConfig& cfg, std::uint64_t seed);

TrajectoryTable generate_trajectories(const MovementConfig& cfg, std::uint64_t seed, unsigned workers = 1);

struct MovementData {
  ObjectRegistry objects;
  std::vector<StopSegment> stops;
};

// Generates and segments one object at a time, without keeping raw samples.
// Equivalent to segment_all(generate_trajectories(...)).
MovementData generate_movement(const MovementConfig& cfg, std::uint64_t seed, const SegmentationConfig& segmentation,
                               unsigned workers = 1);

// Median over objects of (number of stops / days).
double median_daily_stops(std::span<const StopSegment> stops, std::size_t objects, int days);

// Stop centroids grouped for fast region counting.
class StopIndex {
 public:
  StopIndex(std::span<const StopSegment> stops, std::size_t objects);

  std::size_t objects() const { return objects_; }
  // Number of stop centroids of each object inside `region`.
  std::vector<std::uint32_t> count_inside(const SimplePolygon& region) const;
  // Objects having at least `min_stops` centroids in every region, sorted.
  std::vector<ObjectIndex> associated(std::span<const SimplePolygon> regions, std::uint32_t min_stops) const;
  BoundingBox bbox() const { return bbox_; }

 private:
  std::size_t objects_;
  BoundingBox bbox_;
  double bucket_size_ = 1.0;
  std::size_t columns_ = 1;
  std::size_t rows_ = 1;
  std::vector<std::size_t> bucket_offsets_;
  std::vector<PlanarPoint> points_;
  std::vector<ObjectIndex> owners_;
};

struct InjectionConfig {
  std::uint32_t regions_per_hotspot = 2;
  std::uint32_t stops_per_region = 1;
  std::uint32_t objects_per_hotspot = 400;
  std::uint32_t tolerance = 10;
  std::uint32_t hotspots = 1;
  double magnitude = 0.4;
  std::optional<double> q_out;  // defaults to 0.5 + magnitude / 2
  std::uint32_t max_attempts = 25;    // hotspot draws before giving up
  std::uint32_t placement_retries = 100;  // translations tried per region
  std::uint32_t buffer_iterations = 64;

  double base_rate() const { return q_out.value_or(0.5 + magnitude / 2.0); }
  double hotspot_rate() const { return base_rate() - magnitude; }
  // Throws ConfigError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const InjectionConfig& cfg);
InjectionConfig injection_config_from_json(const nlohmann::json& j);

struct Hotspot {
  std::vector<SimplePolygon> regions;
  std::vector<std::size_t> seed_indices;
  double buffer = 0.0;
  std::vector<ObjectIndex> associated;  // sorted
};

// 51 star-shaped polygons centered on a jittered lattice over `bbox`; a
// stand-in for census block groups.
std::vector<SimplePolygon> fallback_seed_polygons(const BoundingBox& bbox, std::uint64_t seed, std::size_t count = 51);

// Draws regions from distinct seed polygons, moves them at random, and
// calibrates one buffer distance shared by all regions so the associated
// object count lands within tolerance of the target. nullopt when no buffer
// in the search range does.
std::optional<Hotspot> make_hotspot(const InjectionConfig& cfg, std::span<const SimplePolygon> seeds,
                                    const StopIndex& stops, Rng& rng);

// Sorted union of every hotspot's associated objects.
std::vector<ObjectIndex> unfair_objects(std::span<const Hotspot> hotspots);

// Objects in `unfair` are positive with probability q_in, all others with q_out.
LabelVector assign_labels(std::size_t objects, std::span<const ObjectIndex> unfair, double q_out, double magnitude,
                          Rng& rng);

struct AuditableDataset {
  std::uint64_t seed = 0;
  LabelVector labels;
  std::vector<Hotspot> hotspots;
  std::vector<ObjectIndex> unfair;  // union of hotspot associations
};

// One dataset: hotspots drawn with retries, then labels.
AuditableDataset make_dataset(const InjectionConfig& cfg, std::span<const SimplePolygon> seeds, const StopIndex& stops,
                              std::uint64_t seed);

// `count` datasets over the same movement data; dataset k uses
// derive_seed(master_seed, k).
std::vector<AuditableDataset> generate_configuration(const InjectionConfig& cfg, std::span<const SimplePolygon> seeds,
                                                     const StopIndex& stops, std::size_t count,
                                                     std::uint64_t master_seed, unsigned workers = 1);

// `object_id,label`
std::string labels_csv(const LabelVector& labels, const ObjectRegistry& objects);
// Every object in `objects` must have a label; ids absent from `objects` are registered.
LabelVector read_labels_csv(const std::filesystem::path& path, ObjectRegistry& objects);

nlohmann::json ground_truth_geojson(std::span<const Hotspot> hotspots);
// `object_id,hotspot_index`
std::string ground_truth_objects_csv(std::span<const Hotspot> hotspots, const ObjectRegistry& objects);
// Sorted union of the objects listed in a ground-truth object file.
std::vector<ObjectIndex> read_ground_truth_objects(const std::filesystem::path& path, ObjectRegistry& objects);

}  // namespace mobfair
