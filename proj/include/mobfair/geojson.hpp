#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobfair/geo.hpp"

namespace mobfair::geojson {

using nlohmann::json;

// Polygon geometry object (RFC 7946 ring order: exterior counter-clockwise,
// first vertex repeated at the end).
json polygon(const SimplePolygon& poly);

json feature(json geometry, json properties = json::object());

json feature_collection(std::vector<json> features);

// Polygons from a Polygon, MultiPolygon, Feature, or FeatureCollection.
// MultiPolygon members become separate polygons. Other geometry types are
// skipped. Throws InputError on malformed structure.
std::vector<SimplePolygon> read_polygons(const json& doc);

struct PolygonFeature {
  SimplePolygon polygon;
  json properties;
};

std::vector<PolygonFeature> read_features(const json& doc);

json load(const std::filesystem::path& path);

}  // namespace mobfair::geojson
