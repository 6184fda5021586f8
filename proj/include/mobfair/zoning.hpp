#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/geo.hpp"
#include "mobfair/trajectory.hpp"

namespace mobfair {

// Cell of one grid. `dense` is unique across the grid family and the cells
// of a family are numbered contiguously from 0.
struct CellId {
  std::uint32_t grid = 0;  // index of the grid within its family
  std::uint32_t column = 0;
  std::uint32_t row = 0;
  std::uint32_t dense = 0;

  friend bool operator==(const CellId&, const CellId&) = default;
};

// Uniform square grid of half-open cells [x0, x0 + res) x [y0, y0 + res).
struct Grid {
  std::string id;
  std::uint32_t index = 0;
  double resolution = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
  std::uint32_t shift_index = 0;
  PlanarPoint origin;
  std::uint32_t columns = 0;
  std::uint32_t rows = 0;
  std::uint32_t dense_base = 0;

  std::uint32_t cell_count() const { return columns * rows; }
  BoundingBox coverage() const;
  BoundingBox cell_extent(std::uint32_t column, std::uint32_t row) const;
  CellId cell(std::uint32_t column, std::uint32_t row) const;
  bool owns(std::uint32_t dense) const { return dense >= dense_base && dense < dense_base + cell_count(); }
  CellId cell_from_dense(std::uint32_t dense) const;
};

// Grid whose lines sit at bbox.min + shift + k * resolution, extended so the
// half-open coverage contains the closed bbox.
Grid make_grid(const BoundingBox& bbox, double resolution, double shift_x, double shift_y, std::string id,
               std::uint32_t index = 0, std::uint32_t dense_base = 0);

std::optional<CellId> cell_of(PlanarPoint p, const Grid& grid);

struct GridFamily {
  std::vector<Grid> grids;
  std::vector<double> resolutions;
  std::uint32_t shifts_per_resolution = 1;
  bool independent_shifts = false;
  BoundingBox bbox;

  std::uint32_t total_cells() const;
  // Grid indices built at `resolution`, in family order.
  std::vector<std::uint32_t> grids_at(double resolution) const;
  const Grid& grid_owning(std::uint32_t dense) const;
};

// For each resolution X and k = 0..shifts-1 the grid shifted by k * X / shifts
// on both axes (or on every (kx, ky) pair when `independent_shifts`).
// Throws InvalidInputError for non-positive or repeated resolutions or zero shifts.
GridFamily build_family(const BoundingBox& bbox, std::span<const double> resolutions,
                        std::uint32_t shifts_per_resolution, bool independent_shifts = false);

struct CoarsenessWarning {
  std::string grid_id;
  CellId cell;
  double fraction = 0.0;  // distinct objects stopping in the cell / distinct objects overall
};

// Cells in which more than half of the objects have at least one stop centroid.
std::vector<CoarsenessWarning> check_coarseness(const Grid& grid, std::span<const StopSegment> stops);

nlohmann::json to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridFamily& family);
GridFamily family_from_json(const nlohmann::json& j);

// GeoJSON FeatureCollection with one square per listed cell; properties hold
// grid id, dense index, column and row.
nlohmann::json cells_geojson(const Grid& grid, std::span<const std::uint32_t> dense_cells);

std::string format_resolution(double resolution);

}  // namespace mobfair
