#include "mobfair/zoning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "mobfair/error.hpp"
#include "mobfair/geojson.hpp"
#include "mobfair/io.hpp"

namespace mobfair {

BoundingBox Grid::coverage() const {
  return {origin.x, origin.y, origin.x + columns * resolution, origin.y + rows * resolution};
}

BoundingBox Grid::cell_extent(std::uint32_t column, std::uint32_t row) const {
  const double x0 = origin.x + column * resolution;
  const double y0 = origin.y + row * resolution;
  return {x0, y0, x0 + resolution, y0 + resolution};
}

CellId Grid::cell(std::uint32_t column, std::uint32_t row) const {
  return {index, column, row, dense_base + row * columns + column};
}

CellId Grid::cell_from_dense(std::uint32_t dense) const {
  if (!owns(dense)) throw InvalidInputError("cell " + std::to_string(dense) + " is not in grid " + id);
  const std::uint32_t local = dense - dense_base;
  return {index, local % columns, local / columns, dense};
}

Grid make_grid(const BoundingBox& bbox, double resolution, double shift_x, double shift_y, std::string id,
               std::uint32_t index, std::uint32_t dense_base) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw InvalidInputError("grid resolution must be positive, got " + io::format_double(resolution));
  }
  Grid g;
  g.id = std::move(id);
  g.index = index;
  g.resolution = resolution;
  g.shift_x = shift_x;
  g.shift_y = shift_y;
  g.origin = {bbox.min_x + shift_x - (shift_x > 0.0 ? resolution : 0.0),
              bbox.min_y + shift_y - (shift_y > 0.0 ? resolution : 0.0)};
  const double cols = std::floor((bbox.max_x - g.origin.x) / resolution) + 1.0;
  const double rows = std::floor((bbox.max_y - g.origin.y) / resolution) + 1.0;
  if (cols * rows > static_cast<double>(std::numeric_limits<std::uint32_t>::max() - dense_base)) {
    throw InvalidInputError("grid " + g.id + " has too many cells");
  }
  g.columns = static_cast<std::uint32_t>(cols);
  g.rows = static_cast<std::uint32_t>(rows);
  g.dense_base = dense_base;
  return g;
}

std::optional<CellId> cell_of(PlanarPoint p, const Grid& grid) {
  const double fx = std::floor((p.x - grid.origin.x) / grid.resolution);
  const double fy = std::floor((p.y - grid.origin.y) / grid.resolution);
  if (!(fx >= 0.0 && fy >= 0.0 && fx < grid.columns && fy < grid.rows)) return std::nullopt;
  return grid.cell(static_cast<std::uint32_t>(fx), static_cast<std::uint32_t>(fy));
}

std::uint32_t GridFamily::total_cells() const {
  return grids.empty() ? 0 : grids.back().dense_base + grids.back().cell_count();
}

std::vector<std::uint32_t> GridFamily::grids_at(double resolution) const {
  std::vector<std::uint32_t> out;
  for (const auto& g : grids) {
    if (g.resolution == resolution) out.push_back(g.index);
  }
  return out;
}

const Grid& GridFamily::grid_owning(std::uint32_t dense) const {
  auto it = std::upper_bound(grids.begin(), grids.end(), dense,
                             [](std::uint32_t d, const Grid& g) { return d < g.dense_base; });
  if (it == grids.begin() || !std::prev(it)->owns(dense)) {
    throw InvalidInputError("dense cell index " + std::to_string(dense) + " outside the grid family");
  }
  return *std::prev(it);
}

std::string format_resolution(double resolution) { return io::format_double(resolution); }

GridFamily build_family(const BoundingBox& bbox, std::span<const double> resolutions,
                        std::uint32_t shifts_per_resolution, bool independent_shifts) {
  if (resolutions.empty()) throw InvalidInputError("at least one grid resolution is required");
  if (shifts_per_resolution < 1) throw InvalidInputError("shifts_per_resolution must be >= 1");
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    if (!(resolutions[i] > 0.0) || !std::isfinite(resolutions[i])) {
      throw InvalidInputError("grid resolution must be positive, got " + io::format_double(resolutions[i]));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (resolutions[i] == resolutions[j]) throw InvalidInputError("grid resolutions must be distinct");
    }
  }
  GridFamily family;
  family.resolutions.assign(resolutions.begin(), resolutions.end());
  family.shifts_per_resolution = shifts_per_resolution;
  family.independent_shifts = independent_shifts;
  family.bbox = bbox;
  std::uint32_t base = 0;
  auto add = [&](double res, std::uint32_t kx, std::uint32_t ky, std::uint32_t shift_index, std::string id) {
    const double step = res / shifts_per_resolution;
    Grid g = make_grid(bbox, res, kx * step, ky * step, std::move(id),
                       static_cast<std::uint32_t>(family.grids.size()), base);
    g.shift_index = shift_index;
    base += g.cell_count();
    family.grids.push_back(std::move(g));
  };
  for (double res : resolutions) {
    const std::string prefix = "r" + format_resolution(res) + "_s";
    if (independent_shifts) {
      for (std::uint32_t ky = 0; ky < shifts_per_resolution; ++ky) {
        for (std::uint32_t kx = 0; kx < shifts_per_resolution; ++kx) {
          add(res, kx, ky, ky * shifts_per_resolution + kx, prefix + std::to_string(kx) + "x" + std::to_string(ky));
        }
      }
    } else {
      for (std::uint32_t k = 0; k < shifts_per_resolution; ++k) add(res, k, k, k, prefix + std::to_string(k));
    }
  }
  return family;
}

std::vector<CoarsenessWarning> check_coarseness(const Grid& grid, std::span<const StopSegment> stops) {
  std::unordered_set<ObjectIndex> objects;
  std::unordered_map<std::uint32_t, std::unordered_set<ObjectIndex>> per_cell;
  for (const auto& s : stops) {
    objects.insert(s.object);
    if (auto c = cell_of(s.location, grid)) per_cell[c->dense].insert(s.object);
  }
  std::vector<CoarsenessWarning> warnings;
  if (objects.empty()) return warnings;
  const auto total = static_cast<double>(objects.size());
  for (const auto& [dense, members] : per_cell) {
    const double fraction = static_cast<double>(members.size()) / total;
    if (fraction > 0.5) warnings.push_back({grid.id, grid.cell_from_dense(dense), fraction});
  }
  std::sort(warnings.begin(), warnings.end(),
            [](const CoarsenessWarning& a, const CoarsenessWarning& b) { return a.cell.dense < b.cell.dense; });
  return warnings;
}

nlohmann::json to_json(const Grid& g) {
  return {{"id", g.id},           {"index", g.index},       {"resolution", g.resolution},
          {"shift_x", g.shift_x}, {"shift_y", g.shift_y},   {"shift_index", g.shift_index},
          {"origin", {g.origin.x, g.origin.y}},             {"columns", g.columns},
          {"rows", g.rows},       {"dense_base", g.dense_base}};
}

Grid grid_from_json(const nlohmann::json& j) {
  try {
    Grid g;
    g.id = j.at("id").get<std::string>();
    g.index = j.at("index").get<std::uint32_t>();
    g.resolution = j.at("resolution").get<double>();
    g.shift_x = j.at("shift_x").get<double>();
    g.shift_y = j.at("shift_y").get<double>();
    g.shift_index = j.at("shift_index").get<std::uint32_t>();
    g.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
    g.columns = j.at("columns").get<std::uint32_t>();
    g.rows = j.at("rows").get<std::uint32_t>();
    g.dense_base = j.at("dense_base").get<std::uint32_t>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed grid description: ") + e.what());
  }
}

nlohmann::json to_json(const GridFamily& f) {
  nlohmann::json grids = nlohmann::json::array();
  for (const auto& g : f.grids) grids.push_back(to_json(g));
  return {{"resolutions", f.resolutions},
          {"shifts_per_resolution", f.shifts_per_resolution},
          {"independent_shifts", f.independent_shifts},
          {"bbox", {f.bbox.min_x, f.bbox.min_y, f.bbox.max_x, f.bbox.max_y}},
          {"grids", std::move(grids)}};
}

GridFamily family_from_json(const nlohmann::json& j) {
  try {
    GridFamily f;
    f.resolutions = j.at("resolutions").get<std::vector<double>>();
    f.shifts_per_resolution = j.at("shifts_per_resolution").get<std::uint32_t>();
    f.independent_shifts = j.at("independent_shifts").get<bool>();
    const auto& b = j.at("bbox");
    f.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
    for (const auto& g : j.at("grids")) f.grids.push_back(grid_from_json(g));
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed grid family: ") + e.what());
  }
}

nlohmann::json cells_geojson(const Grid& grid, std::span<const std::uint32_t> dense_cells) {
  std::vector<nlohmann::json> features;
  features.reserve(dense_cells.size());
  for (std::uint32_t d : dense_cells) {
    const CellId c = grid.cell_from_dense(d);
    const BoundingBox e = grid.cell_extent(c.column, c.row);
    const SimplePolygon square({{e.min_x, e.min_y}, {e.max_x, e.min_y}, {e.max_x, e.max_y}, {e.min_x, e.max_y}});
    features.push_back(geojson::feature(
        geojson::polygon(square), {{"grid", grid.id}, {"cell", d}, {"column", c.column}, {"row", c.row}}));
  }
  return geojson::feature_collection(std::move(features));
}

}  // namespace mobfair
