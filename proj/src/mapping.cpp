#include "mobfair/mapping.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"
#include "mobfair/parallel.hpp"

namespace mobfair {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

void MappingConfig::validate() const {
  if (top_i < 1) throw ConfigError("mapping.top_i must be >= 1");
}

std::vector<AnnotatedStop> annotate_stops(std::span<const StopSegment> stops, const Grid& grid,
                                          std::size_t* dropped) {
  std::vector<AnnotatedStop> out;
  out.reserve(stops.size());
  std::size_t outside = 0;
  for (const auto& s : stops) {
    if (auto c = cell_of(s.location, grid)) {
      out.push_back({s.object, s.location, *c, s.t_start, s.t_end});
    } else {
      ++outside;
    }
  }
  if (dropped != nullptr) *dropped = outside;
  return out;
}

std::int64_t day_of(std::int64_t t, std::int64_t tz_offset_seconds) {
  return floor_div(t + tz_offset_seconds, kSecondsPerDay);
}

std::int64_t distinct_days(std::span<const AnnotatedStop> stops, std::int64_t tz_offset_seconds) {
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
  ranges.reserve(stops.size());
  for (const auto& s : stops) {
    ranges.emplace_back(day_of(s.t_start, tz_offset_seconds), day_of(s.t_end, tz_offset_seconds));
  }
  std::sort(ranges.begin(), ranges.end());
  std::int64_t count = 0;
  for (std::size_t i = 0; i < ranges.size();) {
    const std::int64_t lo = ranges[i].first;
    std::int64_t hi = ranges[i].second;
    for (++i; i < ranges.size() && ranges[i].first <= hi + 1; ++i) hi = std::max(hi, ranges[i].second);
    count += hi - lo + 1;
  }
  return count;
}

std::vector<CellSet> build_cellsets(std::span<const AnnotatedStop> annotated, const MappingConfig& cfg) {
  cfg.validate();
  // object -> cell -> stops
  std::map<ObjectIndex, std::map<std::uint32_t, std::vector<AnnotatedStop>>> grouped;
  std::uint32_t grid = 0;
  for (const auto& a : annotated) {
    grouped[a.object][a.cell.dense].push_back(a);
    grid = a.cell.grid;
  }
  std::vector<CellSet> out;
  out.reserve(grouped.size());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ranked;  // (dense, days)
  for (const auto& [object, cells] : grouped) {
    ranked.clear();
    for (const auto& [dense, stops] : cells) {
      ranked.emplace_back(dense, static_cast<std::uint32_t>(distinct_days(stops, cfg.tz_offset_seconds)));
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > cfg.top_i) ranked.resize(cfg.top_i);
    std::sort(ranked.begin(), ranked.end());
    CellSet cs{object, grid, {}, {}};
    for (const auto& [dense, days] : ranked) {
      cs.cells.push_back(dense);
      cs.days.push_back(days);
    }
    out.push_back(std::move(cs));
  }
  return out;
}

std::vector<CellSet> map_grid(std::span<const StopSegment> stops, const Grid& grid, const MappingConfig& cfg,
                              std::size_t* dropped) {
  auto cellsets = build_cellsets(annotate_stops(stops, grid, dropped), cfg);
  for (auto& cs : cellsets) cs.grid = grid.index;
  return cellsets;
}

std::vector<std::vector<CellSet>> map_family(std::span<const StopSegment> stops, const GridFamily& family,
                                             const MappingConfig& cfg, unsigned workers) {
  cfg.validate();
  std::vector<std::vector<CellSet>> out(family.grids.size());
  parallel_for(family.grids.size(), workers, [&](std::size_t g) { out[g] = map_grid(stops, family.grids[g], cfg); });
  return out;
}

std::vector<CellSet> reduce_points(std::span<const ObjectPoint> points, const Grid& grid, std::size_t* dropped) {
  std::vector<CellSet> out;
  out.reserve(points.size());
  std::size_t outside = 0;
  for (const auto& p : points) {
    if (auto c = cell_of(p.location, grid)) {
      out.push_back({p.object, grid.index, {c->dense}, {1}});
    } else {
      ++outside;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const CellSet& a, const CellSet& b) { return a.object < b.object; });
  if (dropped != nullptr) *dropped = outside;
  return out;
}

std::string cellsets_csv(std::span<const CellSet> cellsets, const Grid& grid, const ObjectRegistry& objects) {
  std::string out = "object_id,grid_id,cell_dense_index,distinct_days\n";
  for (const auto& cs : cellsets) {
    for (std::size_t k = 0; k < cs.cells.size(); ++k) {
      out += objects.id(cs.object);
      out += ',';
      out += grid.id;
      out += ',';
      out += std::to_string(cs.cells[k]);
      out += ',';
      out += std::to_string(cs.days[k]);
      out += '\n';
    }
  }
  return out;
}

std::vector<CellSet> read_cellsets_csv(const std::filesystem::path& path, const Grid& grid,
                                       ObjectRegistry& objects) {
  const auto csv = io::CsvTable::read(path);
  const std::size_t c_id = csv.column("object_id");
  const std::size_t c_grid = csv.column("grid_id");
  const std::size_t c_cell = csv.column("cell_dense_index");
  const std::size_t c_days = csv.column("distinct_days");
  std::map<ObjectIndex, CellSet> by_object;
  for (std::size_t r = 0; r < csv.rows(); ++r) {
    if (csv.text(r, c_grid) != grid.id) {
      throw InputError(path.string() + ": row " + std::to_string(r + 1) + " belongs to grid '" +
                       csv.text(r, c_grid) + "', expected '" + grid.id + "'");
    }
    const auto dense = csv.integer(r, c_cell);
    const auto days = csv.integer(r, c_days);
    if (dense < 0 || !grid.owns(static_cast<std::uint32_t>(dense)) || days < 1) {
      throw InputError(path.string() + ": row " + std::to_string(r + 1) + " has an invalid cell or day count");
    }
    const ObjectIndex o = objects.intern(csv.text(r, c_id));
    auto& cs = by_object[o];
    cs.object = o;
    cs.grid = grid.index;
    cs.cells.push_back(static_cast<std::uint32_t>(dense));
    cs.days.push_back(static_cast<std::uint32_t>(days));
  }
  std::vector<CellSet> out;
  out.reserve(by_object.size());
  for (auto& [o, cs] : by_object) {
    std::vector<std::size_t> order(cs.cells.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cs.cells[a] < cs.cells[b]; });
    CellSet sorted{o, cs.grid, {}, {}};
    for (std::size_t k : order) {
      sorted.cells.push_back(cs.cells[k]);
      sorted.days.push_back(cs.days[k]);
    }
    out.push_back(std::move(sorted));
  }
  return out;
}

}  // namespace mobfair
