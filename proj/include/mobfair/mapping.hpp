#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mobfair/trajectory.hpp"
#include "mobfair/zoning.hpp"

namespace mobfair {

struct AnnotatedStop {
  ObjectIndex object = 0;
  PlanarPoint location;
  CellId cell;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
};

// Top-i cells of one object in one grid. `cells` is sorted by dense index and
// `days[k]` is the distinct-day count of `cells[k]`.
struct CellSet {
  ObjectIndex object = 0;
  std::uint32_t grid = 0;
  std::vector<std::uint32_t> cells;
  std::vector<std::uint32_t> days;

  friend bool operator==(const CellSet&, const CellSet&) = default;
};

struct MappingConfig {
  std::uint32_t top_i = 8;
  std::int64_t tz_offset_seconds = 0;  // day boundaries at local midnight for this UTC offset

  void validate() const;
};

// Pairs each stop with the cell containing its centroid. Stops outside the
// grid are dropped and counted in `*dropped` when given.
std::vector<AnnotatedStop> annotate_stops(std::span<const StopSegment> stops, const Grid& grid,
                                          std::size_t* dropped = nullptr);

// Calendar day (at the given UTC offset) containing instant t; days are
// half-open [00:00, 24:00).
std::int64_t day_of(std::int64_t t, std::int64_t tz_offset_seconds);

// Number of distinct days overlapped by at least one closed interval
// [t_start, t_end] of the given stops.
std::int64_t distinct_days(std::span<const AnnotatedStop> stops, std::int64_t tz_offset_seconds);

// One CellSet per object that has annotated stops, ordered by object index.
// Cells are ranked by descending distinct-day count, ties by ascending dense
// index, and the first top_i are kept.
std::vector<CellSet> build_cellsets(std::span<const AnnotatedStop> annotated, const MappingConfig& cfg);

// annotate_stops() followed by build_cellsets().
std::vector<CellSet> map_grid(std::span<const StopSegment> stops, const Grid& grid, const MappingConfig& cfg,
                              std::size_t* dropped = nullptr);

// Cellsets for every grid of the family, computed on up to `workers` threads.
std::vector<std::vector<CellSet>> map_family(std::span<const StopSegment> stops, const GridFamily& family,
                                             const MappingConfig& cfg, unsigned workers = 1);

struct ObjectPoint {
  ObjectIndex object = 0;
  PlanarPoint location;
};

// Single-location mode: every object maps to the singleton cell containing
// its point (day count 1). Objects outside the grid are dropped and counted.
std::vector<CellSet> reduce_points(std::span<const ObjectPoint> points, const Grid& grid,
                                   std::size_t* dropped = nullptr);

// `object_id,grid_id,cell_dense_index,distinct_days`, one row per retained cell.
std::string cellsets_csv(std::span<const CellSet> cellsets, const Grid& grid, const ObjectRegistry& objects);

// Reads a cellset file written for `grid`. Unknown object ids are registered.
std::vector<CellSet> read_cellsets_csv(const std::filesystem::path& path, const Grid& grid,
                                       ObjectRegistry& objects);

}  // namespace mobfair
