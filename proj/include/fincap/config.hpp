#pragma once

// Sectioned key = value run configuration and the builders that turn it into
// module inputs. The schema lives in configs/SCHEMA.md.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fincap/conformal.hpp"
#include "fincap/invariants.hpp"

namespace fincap {

class Config {
 public:
  // Throws ConfigError naming `origin` and the line for malformed input or
  // keys outside the schema.
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  // "section.key=value"; the key must be in the schema.
  void apply_override(const std::string& assignment);
  void set(const std::string& section, const std::string& key, const std::string& value);

  bool has_section(const std::string& section) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string require(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  double require_double(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Comma-separated numbers.
std::vector<double> parse_numbers(const std::string& text, const std::string& what);
// "x,y; x,y; ..."
std::vector<Vec2> parse_points(const std::string& text, const std::string& what);
// e.g. "disk(0, 0, 0.25)", "polyline(0.05, 0,0, 1,1)"; see the schema.
Shape parse_shape(const std::string& text);

MetricSpec metric_from(const Config& cfg, const std::string& section = "metric");
Rect domain_from(const Config& cfg);
SphereBundleGrid grid_from(const Config& cfg);
SolverConfig solver_from(const Config& cfg);
PlanarMap planar_map_from(const Config& cfg);
// [map] with the source metric from [metric] and the target from [target]
// (rescaled source when the map is the identity and [target] is absent).
ConformalMap conformal_map_from(const Config& cfg);
Resolution resolution_from(const Config& cfg, const std::string& section);
CatalogParams catalog_from(const Config& cfg);
CondenserSpec condenser_from(const Config& cfg);

}  // namespace fincap
