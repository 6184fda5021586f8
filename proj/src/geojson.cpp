#include "mobfair/geojson.hpp"

#include <fstream>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"

namespace mobfair::geojson {

namespace {

json ring_coords(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x, p.y});
  out.push_back({ring.front().x, ring.front().y});
  return out;
}

Ring parse_ring(const json& coords) {
  if (!coords.is_array()) throw InputError("GeoJSON ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw InputError("GeoJSON position must be [x, y]");
    }
    ring.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  return ring;
}

SimplePolygon parse_polygon(const json& coords) {
  if (!coords.is_array() || coords.empty()) throw InputError("GeoJSON Polygon has no rings");
  std::vector<Ring> holes;
  for (std::size_t i = 1; i < coords.size(); ++i) holes.push_back(parse_ring(coords[i]));
  try {
    return SimplePolygon(parse_ring(coords[0]), std::move(holes));
  } catch (const InvalidInputError& e) {
    throw InputError(std::string("invalid GeoJSON polygon: ") + e.what());
  }
}

void collect(const json& doc, const json& properties, std::vector<PolygonFeature>& out) {
  if (!doc.is_object() || !doc.contains("type")) throw InputError("GeoJSON object without a type");
  const std::string type = doc.at("type").get<std::string>();
  if (type == "FeatureCollection") {
    for (const auto& f : doc.at("features")) collect(f, json::object(), out);
  } else if (type == "Feature") {
    json props = doc.contains("properties") && doc["properties"].is_object() ? doc["properties"] : json::object();
    if (doc.contains("geometry") && !doc["geometry"].is_null()) collect(doc["geometry"], props, out);
  } else if (type == "Polygon") {
    out.push_back({parse_polygon(doc.at("coordinates")), properties});
  } else if (type == "MultiPolygon") {
    for (const auto& p : doc.at("coordinates")) out.push_back({parse_polygon(p), properties});
  }
}

}  // namespace

json polygon(const SimplePolygon& poly) {
  json rings = json::array();
  rings.push_back(ring_coords(poly.exterior()));
  for (const auto& h : poly.holes()) rings.push_back(ring_coords(h));
  return {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
}

json feature(json geometry, json properties) {
  return {{"type", "Feature"}, {"properties", std::move(properties)}, {"geometry", std::move(geometry)}};
}

json feature_collection(std::vector<json> features) {
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

std::vector<PolygonFeature> read_features(const json& doc) {
  std::vector<PolygonFeature> out;
  try {
    collect(doc, json::object(), out);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed GeoJSON: ") + e.what());
  }
  return out;
}

std::vector<SimplePolygon> read_polygons(const json& doc) {
  std::vector<SimplePolygon> out;
  for (auto& f : read_features(doc)) out.push_back(std::move(f.polygon));
  return out;
}

json load(const std::filesystem::path& path) { return io::read_json(path); }

}  // namespace mobfair::geojson
