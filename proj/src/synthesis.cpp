#include "mobfair/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "mobfair/error.hpp"
#include "mobfair/geojson.hpp"
#include "mobfair/io.hpp"
#include "mobfair/parallel.hpp"

namespace mobfair {

namespace {

constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kMinute = 60;
constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kShortestStay = 20 * kMinute;

struct Stay {
  PlanarPoint at;
  std::int64_t start = 0;
  std::int64_t end = 0;
};

struct Places {
  PlanarPoint home;
  PlanarPoint work;
  std::vector<PlanarPoint> extras;
};

std::vector<PlanarPoint> draw_hubs(const MovementConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6875627300000000ULL));
  std::vector<PlanarPoint> hubs;
  for (int h = 0; h < cfg.hubs; ++h) {
    hubs.push_back({rng.uniform(cfg.bbox.min_x, cfg.bbox.max_x), rng.uniform(cfg.bbox.min_y, cfg.bbox.max_y)});
  }
  return hubs;
}

PlanarPoint draw_place(const MovementConfig& cfg, std::span<const PlanarPoint> hubs, Rng& rng) {
  const BoundingBox& b = cfg.bbox;
  if (!hubs.empty() && rng.bernoulli(cfg.density_skew)) {
    const PlanarPoint hub = hubs[rng.below(hubs.size())];
    const double sigma = cfg.hub_spread * std::min(b.width(), b.height());
    for (int tries = 0; tries < 20; ++tries) {
      const PlanarPoint p{hub.x + sigma * rng.normal(), hub.y + sigma * rng.normal()};
      if (b.contains(p)) return p;
    }
  }
  return {rng.uniform(b.min_x, b.max_x), rng.uniform(b.min_y, b.max_y)};
}

class Schedule {
 public:
  Schedule(PlanarPoint start, std::int64_t t0, const MovementConfig& cfg) : cfg_(cfg) {
    stays_.push_back({start, t0, t0});
  }

  std::int64_t now() const { return stays_.back().end; }

  // Extends the current stay until t (at least the shortest stay length).
  void stay_until(std::int64_t t) {
    Stay& s = stays_.back();
    s.end = std::max({t, s.end, s.start + kShortestStay});
  }

  // Travels to `place` and stays there for `duration` seconds.
  void visit(PlanarPoint place, std::int64_t duration) {
    const Stay& last = stays_.back();
    const auto trip = std::max<std::int64_t>(
        cfg_.sampling_interval, static_cast<std::int64_t>(std::ceil(distance(last.at, place) / cfg_.travel_speed)));
    const std::int64_t arrive = last.end + trip;
    stays_.push_back({place, arrive, arrive + std::max(duration, kShortestStay)});
  }

  const std::vector<Stay>& stays() const { return stays_; }

 private:
  const MovementConfig& cfg_;
  std::vector<Stay> stays_;
};

std::int64_t around(Rng& rng, double mean_seconds, double sd_seconds) {
  return static_cast<std::int64_t>(std::llround(mean_seconds + sd_seconds * rng.normal()));
}

std::vector<Stay> plan_days(const Places& places, const MovementConfig& cfg, Rng& rng) {
  Schedule s(places.home, cfg.epoch, cfg);
  auto extra = [&] { return places.extras[rng.below(places.extras.size())]; };
  for (int d = 0; d < cfg.days; ++d) {
    const std::int64_t day = cfg.epoch + d * kDay;
    const bool weekday = d % 7 < 5;
    if (weekday && rng.bernoulli(0.92)) {
      s.stay_until(day + around(rng, 7.5 * kHour, 0.5 * kHour));
      s.visit(places.work, around(rng, 12.0 * kHour, 0.25 * kHour) - s.now());
      if (rng.bernoulli(0.7)) {
        s.visit(extra(), rng.between(30 * kMinute, 60 * kMinute));
        s.visit(places.work, day + around(rng, 17.0 * kHour, 0.5 * kHour) - s.now());
      } else {
        s.stay_until(day + around(rng, 17.0 * kHour, 0.5 * kHour));
      }
      if (rng.bernoulli(0.8)) s.visit(extra(), rng.between(30 * kMinute, 120 * kMinute));
      if (rng.bernoulli(0.3)) s.visit(extra(), rng.between(30 * kMinute, 90 * kMinute));
    } else {
      s.stay_until(day + around(rng, 10.0 * kHour, 1.0 * kHour));
      const auto outings = rng.between(2, 4);
      for (std::int64_t k = 0; k < outings; ++k) s.visit(extra(), rng.between(40 * kMinute, 150 * kMinute));
    }
    s.visit(places.home, 0);
  }
  s.stay_until(cfg.epoch + cfg.days * kDay);
  return s.stays();
}

std::vector<TimedPoint> sample(std::span<const Stay> stays, const MovementConfig& cfg, Rng& rng) {
  std::vector<TimedPoint> out;
  const std::int64_t end = cfg.epoch + cfg.days * kDay;
  std::size_t k = 0;
  for (std::int64_t t = cfg.epoch; t < end; t += cfg.sampling_interval) {
    while (k + 1 < stays.size() && t >= stays[k + 1].start) ++k;
    PlanarPoint p = stays[k].at;
    if (t > stays[k].end && k + 1 < stays.size()) {
      const double f = static_cast<double>(t - stays[k].end) / static_cast<double>(stays[k + 1].start - stays[k].end);
      p = {p.x + f * (stays[k + 1].at.x - p.x), p.y + f * (stays[k + 1].at.y - p.y)};
    }
    p.x += cfg.position_jitter * rng.normal();
    p.y += cfg.position_jitter * rng.normal();
    out.push_back({t, p});
  }
  return out;
}

Trajectory generate_with_hubs(ObjectIndex index, const MovementConfig& cfg, std::uint64_t seed,
                              std::span<const PlanarPoint> hubs) {
  Rng rng(derive_seed(seed, index));
  Places places;
  places.home = draw_place(cfg, hubs, rng);
  places.work = draw_place(cfg, hubs, rng);
  const auto extras = rng.between(2, 4);
  for (std::int64_t k = 0; k < extras; ++k) places.extras.push_back(draw_place(cfg, hubs, rng));
  const auto stays = plan_days(places, cfg, rng);
  return {index, sample(stays, cfg, rng)};
}

double diameter(const SimplePolygon& poly) {
  double best = 0.0;
  const Ring& r = poly.exterior();
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) best = std::max(best, distance(r[i], r[j]));
  }
  return best;
}

std::uint32_t require_count(const nlohmann::json& j, const char* key, std::uint32_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string("injection.") + key + " must be a non-negative integer");
  }
  return v.get<std::uint32_t>();
}

}  // namespace

void MovementConfig::validate() const {
  if (objects == 0) throw ConfigError("movement.objects must be >= 1");
  if (days < 1) throw ConfigError("movement.days must be >= 1");
  if (!(bbox.width() > 0.0 && bbox.height() > 0.0)) throw ConfigError("movement.bbox must have positive extent");
  if (sampling_interval < 1) throw ConfigError("movement.sampling_interval must be >= 1");
  if (!(position_jitter >= 0.0)) throw ConfigError("movement.position_jitter must be >= 0");
  if (!(travel_speed > 0.0)) throw ConfigError("movement.travel_speed must be > 0");
  if (!(density_skew >= 0.0 && density_skew <= 1.0)) throw ConfigError("movement.density_skew must lie in [0, 1]");
  if (hubs < 0) throw ConfigError("movement.hubs must be >= 0");
  if (!(hub_spread > 0.0)) throw ConfigError("movement.hub_spread must be > 0");
}

nlohmann::json to_json(const MovementConfig& cfg) {
  return {{"objects", cfg.objects},
          {"days", cfg.days},
          {"bbox", {cfg.bbox.min_x, cfg.bbox.min_y, cfg.bbox.max_x, cfg.bbox.max_y}},
          {"epoch", cfg.epoch},
          {"sampling_interval", cfg.sampling_interval},
          {"position_jitter", cfg.position_jitter},
          {"travel_speed", cfg.travel_speed},
          {"density_skew", cfg.density_skew},
          {"hubs", cfg.hubs},
          {"hub_spread", cfg.hub_spread}};
}

MovementConfig movement_config_from_json(const nlohmann::json& j) {
  MovementConfig cfg;
  try {
    cfg.objects = j.value("objects", cfg.objects);
    cfg.days = j.value("days", cfg.days);
    if (j.contains("bbox")) {
      const auto& b = j.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ConfigError("movement.bbox must be [min_x, min_y, max_x, max_y]");
      cfg.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    }
    cfg.epoch = j.value("epoch", cfg.epoch);
    cfg.sampling_interval = j.value("sampling_interval", cfg.sampling_interval);
    cfg.position_jitter = j.value("position_jitter", cfg.position_jitter);
    cfg.travel_speed = j.value("travel_speed", cfg.travel_speed);
    cfg.density_skew = j.value("density_skew", cfg.density_skew);
    cfg.hubs = j.value("hubs", cfg.hubs);
    cfg.hub_spread = j.value("hub_spread", cfg.hub_spread);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("movement: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string generated_object_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mo%06zu", index);
  return buf;
}

Trajectory generate_trajectory(ObjectIndex index, const MovementConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return generate_with_hubs(index, cfg, seed, draw_hubs(cfg, seed));
}

TrajectoryTable generate_trajectories(const MovementConfig& cfg, std::uint64_t seed, unsigned workers) {
  cfg.validate();
  const auto hubs = draw_hubs(cfg, seed);
  TrajectoryTable table;
  for (std::size_t i = 0; i < cfg.objects; ++i) table.objects.intern(generated_object_id(i));
  table.trajectories.resize(cfg.objects);
  parallel_for(cfg.objects, workers, [&](std::size_t i) {
    table.trajectories[i] = generate_with_hubs(static_cast<ObjectIndex>(i), cfg, seed, hubs);
  });
  return table;
}

MovementData generate_movement(const MovementConfig& cfg, std::uint64_t seed, const SegmentationConfig& segmentation,
                               unsigned workers) {
  cfg.validate();
  segmentation.validate();
  const auto hubs = draw_hubs(cfg, seed);
  std::vector<std::vector<StopSegment>> per_object(cfg.objects);
  parallel_for(cfg.objects, workers, [&](std::size_t i) {
    per_object[i] = segment_trajectory(generate_with_hubs(static_cast<ObjectIndex>(i), cfg, seed, hubs), segmentation);
  });
  MovementData out;
  for (std::size_t i = 0; i < cfg.objects; ++i) {
    out.objects.intern(generated_object_id(i));
    out.stops.insert(out.stops.end(), per_object[i].begin(), per_object[i].end());
  }
  return out;
}

double median_daily_stops(std::span<const StopSegment> stops, std::size_t objects, int days) {
  if (objects == 0 || days < 1) throw InvalidInputError("median_daily_stops needs objects and days");
  std::vector<double> rate(objects, 0.0);
  for (const auto& s : stops) {
    if (s.object >= objects) throw InvalidInputError("stop references an unknown object");
    rate[s.object] += 1.0;
  }
  for (double& r : rate) r /= days;
  const auto mid = rate.begin() + static_cast<std::ptrdiff_t>(objects / 2);
  std::nth_element(rate.begin(), mid, rate.end());
  if (objects % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(rate.begin(), mid);
  return (lower + upper) / 2.0;
}

StopIndex::StopIndex(std::span<const StopSegment> stops, std::size_t objects) : objects_(objects) {
  if (stops.empty()) throw InvalidInputError("stop index needs at least one stop");
  std::vector<PlanarPoint> locations;
  locations.reserve(stops.size());
  for (const auto& s : stops) {
    if (s.object >= objects) throw InvalidInputError("stop references an unknown object");
    locations.push_back(s.location);
  }
  bbox_ = BoundingBox::of(locations);
  bucket_size_ = std::max(1.0, std::max(bbox_.width(), bbox_.height()) / 64.0);
  columns_ = static_cast<std::size_t>(bbox_.width() / bucket_size_) + 1;
  rows_ = static_cast<std::size_t>(bbox_.height() / bucket_size_) + 1;

  auto bucket_of = [&](PlanarPoint p) {
    const auto c = std::min(columns_ - 1, static_cast<std::size_t>((p.x - bbox_.min_x) / bucket_size_));
    const auto r = std::min(rows_ - 1, static_cast<std::size_t>((p.y - bbox_.min_y) / bucket_size_));
    return r * columns_ + c;
  };
  bucket_offsets_.assign(columns_ * rows_ + 1, 0);
  for (const auto& s : stops) ++bucket_offsets_[bucket_of(s.location) + 1];
  for (std::size_t i = 1; i < bucket_offsets_.size(); ++i) bucket_offsets_[i] += bucket_offsets_[i - 1];
  points_.resize(stops.size());
  owners_.resize(stops.size());
  std::vector<std::size_t> fill(bucket_offsets_.begin(), bucket_offsets_.end() - 1);
  for (const auto& s : stops) {
    const std::size_t at = fill[bucket_of(s.location)]++;
    points_[at] = s.location;
    owners_[at] = s.object;
  }
}

std::vector<std::uint32_t> StopIndex::count_inside(const SimplePolygon& region) const {
  std::vector<std::uint32_t> counts(objects_, 0);
  const BoundingBox& rb = region.bbox();
  if (!rb.intersects(bbox_)) return counts;
  auto clamp_index = [&](double v, double origin, std::size_t n) {
    const double k = std::floor((v - origin) / bucket_size_);
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n - 1)));
  };
  const std::size_t c0 = clamp_index(rb.min_x, bbox_.min_x, columns_);
  const std::size_t c1 = clamp_index(rb.max_x, bbox_.min_x, columns_);
  const std::size_t r0 = clamp_index(rb.min_y, bbox_.min_y, rows_);
  const std::size_t r1 = clamp_index(rb.max_y, bbox_.min_y, rows_);
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) {
      const std::size_t b = r * columns_ + c;
      for (std::size_t k = bucket_offsets_[b]; k < bucket_offsets_[b + 1]; ++k) {
        if (point_in_polygon(points_[k], region)) ++counts[owners_[k]];
      }
    }
  }
  return counts;
}

std::vector<ObjectIndex> StopIndex::associated(std::span<const SimplePolygon> regions, std::uint32_t min_stops) const {
  if (regions.empty()) return {};
  std::vector<std::uint8_t> ok(objects_, 1);
  for (const auto& region : regions) {
    const auto counts = count_inside(region);
    for (std::size_t o = 0; o < objects_; ++o) ok[o] = ok[o] && counts[o] >= min_stops;
  }
  std::vector<ObjectIndex> out;
  for (std::size_t o = 0; o < objects_; ++o) {
    if (ok[o]) out.push_back(static_cast<ObjectIndex>(o));
  }
  return out;
}

void InjectionConfig::validate() const {
  if (regions_per_hotspot < 1) throw ConfigError("injection.regions_per_hotspot must be >= 1");
  if (stops_per_region < 1) throw ConfigError("injection.stops_per_region must be >= 1");
  if (objects_per_hotspot < 1) throw ConfigError("injection.objects_per_hotspot must be >= 1");
  if (!(magnitude >= 0.0 && magnitude < 1.0)) throw ConfigError("injection.magnitude must lie in [0, 1)");
  if (q_out && !(*q_out >= 0.0 && *q_out <= 1.0)) throw ConfigError("injection.q_out must lie in [0, 1]");
  if (base_rate() > 1.0) throw ConfigError("injection.q_out must be <= 1");
  if (hotspot_rate() < 0.0) throw ConfigError("injection.q_out - injection.magnitude must be >= 0");
  if (max_attempts < 1) throw ConfigError("injection.max_attempts must be >= 1");
  if (placement_retries < 1) throw ConfigError("injection.placement_retries must be >= 1");
  if (buffer_iterations < 1) throw ConfigError("injection.buffer_iterations must be >= 1");
}

nlohmann::json to_json(const InjectionConfig& cfg) {
  nlohmann::json j = {{"regions_per_hotspot", cfg.regions_per_hotspot},
                      {"stops_per_region", cfg.stops_per_region},
                      {"objects_per_hotspot", cfg.objects_per_hotspot},
                      {"tolerance", cfg.tolerance},
                      {"hotspots", cfg.hotspots},
                      {"magnitude", cfg.magnitude},
                      {"q_out", cfg.base_rate()},
                      {"max_attempts", cfg.max_attempts},
                      {"placement_retries", cfg.placement_retries},
                      {"buffer_iterations", cfg.buffer_iterations}};
  return j;
}

InjectionConfig injection_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("injection must be an object");
  InjectionConfig cfg;
  cfg.regions_per_hotspot = require_count(j, "regions_per_hotspot", cfg.regions_per_hotspot);
  cfg.stops_per_region = require_count(j, "stops_per_region", cfg.stops_per_region);
  cfg.objects_per_hotspot = require_count(j, "objects_per_hotspot", cfg.objects_per_hotspot);
  cfg.tolerance = require_count(j, "tolerance", cfg.tolerance);
  cfg.hotspots = require_count(j, "hotspots", cfg.hotspots);
  cfg.max_attempts = require_count(j, "max_attempts", cfg.max_attempts);
  cfg.placement_retries = require_count(j, "placement_retries", cfg.placement_retries);
  cfg.buffer_iterations = require_count(j, "buffer_iterations", cfg.buffer_iterations);
  try {
    cfg.magnitude = j.value("magnitude", cfg.magnitude);
    if (j.contains("q_out") && !j.at("q_out").is_null()) cfg.q_out = j.at("q_out").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("injection: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<SimplePolygon> fallback_seed_polygons(const BoundingBox& bbox, std::uint64_t seed, std::size_t count) {
  if (count == 0) return {};
  if (!(bbox.width() > 0.0 && bbox.height() > 0.0)) throw InvalidInputError("seed polygons need a non-degenerate bbox");
  Rng rng(seed);
  const double aspect = bbox.width() / bbox.height();
  auto columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count) * aspect)));
  columns = std::max<std::size_t>(columns, 1);
  const std::size_t rows = (count + columns - 1) / columns;
  const double cw = bbox.width() / static_cast<double>(columns);
  const double ch = bbox.height() / static_cast<double>(rows);
  const double cell = std::min(cw, ch);

  std::vector<SimplePolygon> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t c = k % columns;
    const std::size_t r = k / columns;
    const PlanarPoint center{bbox.min_x + (static_cast<double>(c) + rng.uniform(0.3, 0.7)) * cw,
                             bbox.min_y + (static_cast<double>(r) + rng.uniform(0.3, 0.7)) * ch};
    const double radius = rng.uniform(0.35, 0.6) * cell;
    const auto vertices = rng.between(6, 10);
    std::vector<double> angles;
    for (std::int64_t v = 0; v < vertices; ++v) {
      angles.push_back((static_cast<double>(v) + rng.uniform(0.1, 0.9)) * 2.0 * std::numbers::pi /
                       static_cast<double>(vertices));
    }
    Ring ring;
    for (double a : angles) {
      const double rr = radius * rng.uniform(0.75, 1.0);
      ring.push_back({center.x + rr * std::cos(a), center.y + rr * std::sin(a)});
    }
    out.emplace_back(std::move(ring));
  }
  return out;
}

std::optional<Hotspot> make_hotspot(const InjectionConfig& cfg, std::span<const SimplePolygon> seeds,
                                    const StopIndex& stops, Rng& rng) {
  cfg.validate();
  const std::size_t n = cfg.regions_per_hotspot;
  if (seeds.size() < n) {
    throw ConfigError("injection.regions_per_hotspot is " + std::to_string(n) + " but only " +
                      std::to_string(seeds.size()) + " seed polygons are available");
  }

  std::vector<std::size_t> order(seeds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);

  Hotspot hs;
  hs.seed_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<SimplePolygon> base;
  for (std::size_t idx : hs.seed_indices) {
    const SimplePolygon& seed = seeds[idx];
    const double reach = seed.bbox().diagonal();
    std::optional<SimplePolygon> placed;
    for (std::uint32_t t = 0; t < cfg.placement_retries && !placed; ++t) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double dx = rng.uniform(-reach, reach);
      const double dy = rng.uniform(-reach, reach);
      SimplePolygon moved = transform_polygon(seed, angle, dx, dy);
      if (polygon_intersects_box(moved, seed.bbox())) placed = std::move(moved);
    }
    if (!placed) return std::nullopt;
    base.push_back(std::move(*placed));
  }

  const auto target = static_cast<std::int64_t>(cfg.objects_per_hotspot);
  const auto tol = static_cast<std::int64_t>(cfg.tolerance);
  auto evaluate = [&](double d, std::vector<SimplePolygon>& regions) -> std::int64_t {
    regions.clear();
    try {
      for (const auto& p : base) regions.push_back(buffer_polygon(p, d));
    } catch (const EmptyGeometryError&) {
      regions.clear();
      return 0;
    }
    return static_cast<std::int64_t>(stops.associated(regions, cfg.stops_per_region).size());
  };
  auto accept = [&](double d, std::vector<SimplePolygon> regions) {
    hs.buffer = d;
    hs.associated = stops.associated(regions, cfg.stops_per_region);
    hs.regions = std::move(regions);
    return hs;
  };

  std::vector<SimplePolygon> regions;
  const std::int64_t at_zero = evaluate(0.0, regions);
  if (std::abs(at_zero - target) <= tol) return accept(0.0, std::move(regions));

  double lo = 0.0;
  double hi = 0.0;
  if (at_zero < target) {
    double widest = 0.0;
    for (const auto& p : base) widest = std::max(widest, diameter(p));
    hi = 3.0 * widest;
    const std::int64_t c = evaluate(hi, regions);
    if (std::abs(c - target) <= tol) return accept(hi, std::move(regions));
    if (c < target) return std::nullopt;
  } else {
    double thinnest = std::numeric_limits<double>::infinity();
    for (const auto& p : base) thinnest = std::min(thinnest, approximate_inradius(p));
    lo = -0.9 * thinnest;
    const std::int64_t c = evaluate(lo, regions);
    if (std::abs(c - target) <= tol) return accept(lo, std::move(regions));
    if (c > target) return std::nullopt;
  }
  for (std::uint32_t it = 0; it < cfg.buffer_iterations; ++it) {
    const double mid = (lo + hi) / 2.0;
    const std::int64_t c = evaluate(mid, regions);
    if (std::abs(c - target) <= tol) return accept(mid, std::move(regions));
    (c < target ? lo : hi) = mid;
  }
  return std::nullopt;
}

std::vector<ObjectIndex> unfair_objects(std::span<const Hotspot> hotspots) {
  std::vector<ObjectIndex> out;
  for (const auto& h : hotspots) out.insert(out.end(), h.associated.begin(), h.associated.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LabelVector assign_labels(std::size_t objects, std::span<const ObjectIndex> unfair, double q_out, double magnitude,
                          Rng& rng) {
  const double q_in = q_out - magnitude;
  if (!(q_out >= 0.0 && q_out <= 1.0 && q_in >= 0.0 && q_in <= 1.0)) {
    throw InvalidInputError("label rates must lie in [0, 1]");
  }
  std::vector<std::uint8_t> in_hotspot(objects, 0);
  for (ObjectIndex o : unfair) {
    if (o >= objects) throw InvalidInputError("unfair object index out of range");
    in_hotspot[o] = 1;
  }
  LabelVector labels;
  labels.values.resize(objects);
  for (std::size_t o = 0; o < objects; ++o) labels.values[o] = rng.bernoulli(in_hotspot[o] ? q_in : q_out) ? 1 : 0;
  return labels;
}

AuditableDataset make_dataset(const InjectionConfig& cfg, std::span<const SimplePolygon> seeds, const StopIndex& stops,
                              std::uint64_t seed) {
  cfg.validate();
  AuditableDataset ds;
  ds.seed = seed;
  for (std::uint32_t h = 0; h < cfg.hotspots; ++h) {
    std::optional<Hotspot> hs;
    for (std::uint32_t attempt = 0; attempt < cfg.max_attempts && !hs; ++attempt) {
      Rng rng(derive_seed(derive_seed(seed, h + 1), attempt));
      hs = make_hotspot(cfg, seeds, stops, rng);
    }
    if (!hs) {
      throw Error("hotspot " + std::to_string(h) + " could not reach " + std::to_string(cfg.objects_per_hotspot) +
                  " +/- " + std::to_string(cfg.tolerance) + " objects in " + std::to_string(cfg.max_attempts) +
                  " attempts");
    }
    ds.hotspots.push_back(std::move(*hs));
  }
  ds.unfair = unfair_objects(ds.hotspots);
  Rng label_rng(derive_seed(seed, 0));
  ds.labels = assign_labels(stops.objects(), ds.unfair, cfg.base_rate(), cfg.magnitude, label_rng);
  return ds;
}

std::vector<AuditableDataset> generate_configuration(const InjectionConfig& cfg, std::span<const SimplePolygon> seeds,
                                                     const StopIndex& stops, std::size_t count,
                                                     std::uint64_t master_seed, unsigned workers) {
  cfg.validate();
  std::vector<AuditableDataset> out(count);
  parallel_for(count, workers,
               [&](std::size_t k) { out[k] = make_dataset(cfg, seeds, stops, derive_seed(master_seed, k)); });
  return out;
}

std::string labels_csv(const LabelVector& labels, const ObjectRegistry& objects) {
  if (labels.size() != objects.size()) throw InvalidInputError("one label per object is required");
  std::string out = "object_id,label\n";
  for (std::size_t o = 0; o < labels.size(); ++o) {
    out += objects.id(static_cast<ObjectIndex>(o));
    out += labels.values[o] ? ",1\n" : ",0\n";
  }
  return out;
}

LabelVector read_labels_csv(const std::filesystem::path& path, ObjectRegistry& objects) {
  const auto table = io::CsvTable::read(path);
  const std::size_t id_col = table.column("object_id");
  const std::size_t label_col = table.column("label");
  std::vector<int> seen(objects.size(), -1);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const ObjectIndex o = objects.intern(table.text(r, id_col));
    if (o >= seen.size()) seen.resize(o + 1, -1);
    const std::int64_t v = table.integer(r, label_col);
    if (v != 0 && v != 1) {
      throw InputError(path.string() + ": row " + std::to_string(r + 2) + ": label must be 0 or 1");
    }
    if (seen[o] != -1) throw InputError(path.string() + ": duplicate label for object " + table.text(r, id_col));
    seen[o] = static_cast<int>(v);
  }
  LabelVector labels;
  labels.values.resize(seen.size());
  for (std::size_t o = 0; o < seen.size(); ++o) {
    if (seen[o] == -1) {
      throw InputError(path.string() + ": no label for object " + objects.id(static_cast<ObjectIndex>(o)));
    }
    labels.values[o] = static_cast<std::uint8_t>(seen[o]);
  }
  return labels;
}

nlohmann::json ground_truth_geojson(std::span<const Hotspot> hotspots) {
  std::vector<nlohmann::json> features;
  for (std::size_t h = 0; h < hotspots.size(); ++h) {
    for (std::size_t r = 0; r < hotspots[h].regions.size(); ++r) {
      features.push_back(geojson::feature(geojson::polygon(hotspots[h].regions[r]),
                                          {{"hotspot_index", h},
                                           {"region_index", r},
                                           {"seed_index", hotspots[h].seed_indices.at(r)},
                                           {"buffer", hotspots[h].buffer},
                                           {"associated", hotspots[h].associated.size()}}));
    }
  }
  return geojson::feature_collection(std::move(features));
}

std::string ground_truth_objects_csv(std::span<const Hotspot> hotspots, const ObjectRegistry& objects) {
  std::string out = "object_id,hotspot_index\n";
  for (std::size_t h = 0; h < hotspots.size(); ++h) {
    for (ObjectIndex o : hotspots[h].associated) {
      out += objects.id(o);
      out += ',';
      out += std::to_string(h);
      out += '\n';
    }
  }
  return out;
}

std::vector<ObjectIndex> read_ground_truth_objects(const std::filesystem::path& path, ObjectRegistry& objects) {
  const auto table = io::CsvTable::read(path);
  const std::size_t id_col = table.column("object_id");
  table.column("hotspot_index");
  std::vector<ObjectIndex> out;
  for (std::size_t r = 0; r < table.rows(); ++r) out.push_back(objects.intern(table.text(r, id_col)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace mobfair
