#include "fincap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fincap/errors.hpp"

namespace fincap {

namespace {

const std::set<std::string> kMetricKeys{"kind", "dim", "a", "b", "sigma", "inner"};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"metric", kMetricKeys},
      {"target", kMetricKeys},
      {"domain", {"x1min", "x1max", "x2min", "x2max", "nx", "ny", "ntheta"}},
      {"condenser", {"c0", "c1"}},
      {"shape", {"compact", "truncation"}},
      {"solver", {"tol", "max_iter", "step", "warm_sweeps", "armijo_c", "p"}},
      {"map", {"kind", "matrix", "offset", "scale", "angle", "shift", "alpha", "z0", "c", "w0", "sigma"}},
      {"check",
       {"run", "samples", "seed", "u", "nx", "ny", "ntheta", "conformality_threshold", "volume_threshold",
        "energy_density_threshold", "energy_threshold", "capacity_threshold", "invariant_threshold"}},
      {"invariant",
       {"which", "points", "max_control_points", "product_control_points", "offset_levels", "offset_step",
        "ray_directions", "thickness_cells"}},
      {"tensors", {"point", "theta", "direction"}},
      {"selftest",
       {"homogeneity_tol", "d_omega_tol", "volume_tol", "energy_density_tol", "gradient_tol", "density_tol",
        "annulus_tol", "annulus_n", "samples"}},
      {"output", {"dir", "formats"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

void check_key(const std::string& section, const std::string& key) {
  const auto it = schema().find(section);
  if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
  if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

// Numbers may be constant expressions such as pi/6 or 0.25*exp(1).
double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(what + ": empty number");
  Expr e;
  try {
    e = Expr::parse(t);
  } catch (const ConfigError& ex) {
    throw ConfigError(what + ": " + ex.what());
  }
  if (e.max_variable() >= 0) throw ConfigError(what + ": '" + t + "' must not reference x1..x9");
  const double v = e(std::span<const double>{});
  if (!std::isfinite(v)) throw ConfigError(what + ": '" + t + "' is not finite");
  return v;
}

int parse_int(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(what + ": '" + text + "' is not an integer");
  return static_cast<int>(v);
}

Vec2 parse_vec2(const std::string& text, const std::string& what) {
  const auto v = parse_numbers(text, what);
  if (v.size() != 2) throw ConfigError(what + ": expected two numbers, got '" + text + "'");
  return {v[0], v[1]};
}

std::vector<Expr> parse_exprs(const std::string& text, const std::string& what) {
  std::vector<Expr> out;
  for (const std::string& item : split(text, ',')) {
    try {
      out.push_back(Expr::parse(item));
    } catch (const ConfigError& ex) {
      throw ConfigError(what + ": " + ex.what());
    }
  }
  return out;
}

MetricSpec base_metric(const Config& cfg, const std::string& section, const std::string& kind, int dim) {
  if (kind == "euclidean") return MetricSpec::euclidean(dim);
  if (kind == "riemannian")
    return MetricSpec::riemannian(dim, parse_exprs(cfg.require(section, "a"), section + ".a"));
  if (kind == "randers")
    return MetricSpec::randers(dim, parse_exprs(cfg.require(section, "a"), section + ".a"),
                               parse_exprs(cfg.require(section, "b"), section + ".b"));
  throw ConfigError(section + ".kind: unknown metric '" + kind + "' (expected euclidean, riemannian, randers or conformal)");
}

void check_range(int v, int lo, int hi, const std::string& what) {
  if (v < lo || v > hi)
    throw ConfigError(what + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value, got '" + line + "'");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    try {
      check_key(section, key);
    } catch (const ConfigError& ex) {
      throw ConfigError(where + ": " + ex.what());
    }
    if (cfg.sections_[section].count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.sections_[section][key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  check_key(section, key);
  sections_[section][key] = value;
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) != 0; }

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::require(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) throw ConfigError("missing required key '" + key + "' in section [" + section + "]");
  return *v;
}

std::string Config::get_or(const std::string& section, const std::string& key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  auto v = get(section, key);
  return v ? parse_number(*v, section + "." + key) : fallback;
}

double Config::require_double(const std::string& section, const std::string& key) const {
  return parse_number(require(section, key), section + "." + key);
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  auto v = get(section, key);
  return v ? parse_int(*v, section + "." + key) : fallback;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const std::string& item : split(text, ',')) out.push_back(parse_number(item, what));
  return out;
}

std::vector<Vec2> parse_points(const std::string& text, const std::string& what) {
  std::vector<Vec2> out;
  for (const std::string& item : split(text, ';'))
    if (!item.empty()) out.push_back(parse_vec2(item, what));
  return out;
}

Shape parse_shape(const std::string& text_in) {
  const std::string text = trim(text_in);
  const auto open = text.find('(');
  const std::string name = trim(text.substr(0, open));
  std::vector<double> args;
  if (open != std::string::npos) {
    if (text.back() != ')') throw ConfigError("shape '" + text + "': missing ')'");
    args = parse_numbers(text.substr(open + 1, text.size() - open - 2), "shape '" + text + "'");
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw ConfigError("shape " + name + " takes " + std::to_string(n) + " numbers, got " + std::to_string(args.size()));
  };
  if (name == "disk") return need(3), Shape::disk({args[0], args[1]}, args[2]);
  if (name == "exterior_disk") return need(3), Shape::exterior_disk({args[0], args[1]}, args[2]);
  if (name == "blob") return need(3), Shape::blob({args[0], args[1]}, args[2]);
  if (name == "rectangle") return need(4), Shape::rectangle({args[0], args[1]}, {args[2], args[3]});
  if (name == "segment") return need(5), Shape::segment({args[0], args[1]}, {args[2], args[3]}, args[4]);
  if (name == "outside_rect") return need(4), Shape::outside_rect(Rect{args[0], args[1], args[2], args[3]});
  if (name == "outer_boundary") {
    if (args.empty()) return Shape::outer_boundary();
    need(1);
    if (args[0] != std::floor(args[0])) throw ConfigError("outer_boundary width must be an integer");
    return Shape::outer_boundary(static_cast<int>(args[0]));
  }
  if (name == "polyline") {
    if (args.size() < 3 || args.size() % 2 == 0)
      throw ConfigError("polyline takes a thickness followed by vertex coordinate pairs");
    std::vector<Vec2> v;
    for (std::size_t i = 1; i + 1 < args.size(); i += 2) v.push_back({args[i], args[i + 1]});
    return Shape::polyline(std::move(v), args[0]);
  }
  throw ConfigError("unknown shape '" + name +
                    "' (expected disk, exterior_disk, blob, rectangle, segment, polyline, outside_rect, outer_boundary)");
}

MetricSpec metric_from(const Config& cfg, const std::string& section) {
  if (!cfg.has_section(section)) throw ConfigError("missing section [" + section + "]");
  const int dim = cfg.get_int(section, "dim", 2);
  check_range(dim, 1, 9, section + ".dim");
  const std::string kind = cfg.require(section, "kind");
  if (kind == "conformal") {
    const MetricSpec inner = base_metric(cfg, section, cfg.get_or(section, "inner", "euclidean"), dim);
    return MetricSpec::conformal(inner, parse_exprs(cfg.require(section, "sigma"), section + ".sigma").at(0));
  }
  if (cfg.get(section, "sigma")) throw ConfigError(section + ".sigma is only used with kind = conformal");
  return base_metric(cfg, section, kind, dim);
}

Rect domain_from(const Config& cfg) {
  if (!cfg.has_section("domain")) throw ConfigError("missing section [domain]");
  Rect r{cfg.require_double("domain", "x1min"), cfg.require_double("domain", "x1max"), cfg.require_double("domain", "x2min"),
         cfg.require_double("domain", "x2max")};
  if (!(r.x1max > r.x1min) || !(r.x2max > r.x2min)) throw ConfigError("domain bounds must satisfy min < max");
  return r;
}

Resolution resolution_from(const Config& cfg, const std::string& section) {
  Resolution res{cfg.get_int("domain", "nx", 64), cfg.get_int("domain", "ny", 64), cfg.get_int("domain", "ntheta", 32)};
  if (section != "domain") {
    res.nx = cfg.get_int(section, "nx", res.nx);
    res.ny = cfg.get_int(section, "ny", res.ny);
    res.ntheta = cfg.get_int(section, "ntheta", res.ntheta);
  }
  check_range(res.nx, 3, 4096, section + ".nx");
  check_range(res.ny, 3, 4096, section + ".ny");
  check_range(res.ntheta, 8, 1024, section + ".ntheta");
  return res;
}

SphereBundleGrid grid_from(const Config& cfg) {
  const Resolution res = resolution_from(cfg, "domain");
  return SphereBundleGrid(domain_from(cfg), res.nx, res.ny, res.ntheta);
}

SolverConfig solver_from(const Config& cfg) {
  SolverConfig s;
  s.tol = cfg.get_double("solver", "tol", s.tol);
  s.max_iter = cfg.get_int("solver", "max_iter", s.max_iter);
  s.warm_sweeps = cfg.get_int("solver", "warm_sweeps", s.warm_sweeps);
  s.armijo_c = cfg.get_double("solver", "armijo_c", s.armijo_c);
  s.p = cfg.get_double("solver", "p", s.p);
  const std::string step = cfg.get_or("solver", "step", "bb");
  if (step == "bb") {
    s.step = StepPolicy::bb;
  } else if (step == "armijo") {
    s.step = StepPolicy::armijo;
  } else {
    throw ConfigError("solver.step: unknown policy '" + step + "' (expected bb or armijo)");
  }
  if (!(s.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (s.max_iter < 1) throw ConfigError("solver.max_iter must be at least 1");
  if (s.warm_sweeps < 0) throw ConfigError("solver.warm_sweeps must be nonnegative");
  if (!(s.armijo_c > 0.0 && s.armijo_c < 1.0)) throw ConfigError("solver.armijo_c must lie in (0, 1)");
  if (!(s.p >= 2.0)) throw ConfigError("solver.p must be at least 2");
  return s;
}

PlanarMap planar_map_from(const Config& cfg) {
  const std::string kind = cfg.get_or("map", "kind", "identity");
  if (kind == "identity") return PlanarMap::identity();
  if (kind == "affine") {
    const auto m = parse_numbers(cfg.require("map", "matrix"), "map.matrix");
    if (m.size() != 4) throw ConfigError("map.matrix takes four numbers a11, a12, a21, a22");
    Eigen::Matrix2d A;
    A << m[0], m[1], m[2], m[3];
    return PlanarMap::affine(A, parse_vec2(cfg.get_or("map", "offset", "0, 0"), "map.offset"));
  }
  if (kind == "similarity")
    return PlanarMap::similarity(cfg.get_double("map", "scale", 1.0), cfg.get_double("map", "angle", 0.0),
                                 parse_vec2(cfg.get_or("map", "shift", "0, 0"), "map.shift"));
  if (kind == "power")
    return PlanarMap::power(cfg.require_double("map", "alpha"), parse_vec2(cfg.get_or("map", "z0", "0, 0"), "map.z0"),
                            parse_vec2(cfg.get_or("map", "c", "1, 0"), "map.c"),
                            parse_vec2(cfg.get_or("map", "w0", "0, 0"), "map.w0"));
  throw ConfigError("map.kind: unknown map '" + kind + "' (expected identity, affine, similarity or power)");
}

ConformalMap conformal_map_from(const Config& cfg) {
  const PlanarMap f = planar_map_from(cfg);
  const std::string sigma_text = cfg.get_or("map", "sigma", "auto");
  const Expr sigma = sigma_text == "auto" ? f.log_conformal_factor() : parse_exprs(sigma_text, "map.sigma").at(0);
  const MetricSpec source = metric_from(cfg);
  if (sigma.max_variable() >= source.dim()) throw ConfigError("map.sigma uses a variable beyond the dimension");
  MetricSpec target = source;
  if (cfg.has_section("target")) {
    target = metric_from(cfg, "target");
  } else if (f.kind() == PlanarMap::Kind::identity) {
    target = rescale(source, sigma);
  } else {
    throw ConfigError("section [target] is required unless map.kind = identity");
  }
  if (source.dim() != 2 || target.dim() != 2) throw ConfigError("conformal maps act on planar metrics (dim = 2)");
  return {f, sigma, source, target, domain_from(cfg)};
}

CatalogParams catalog_from(const Config& cfg) {
  CatalogParams p;
  p.max_control_points = cfg.get_int("invariant", "max_control_points", p.max_control_points);
  p.product_control_points = cfg.get_int("invariant", "product_control_points", p.product_control_points);
  p.offset_levels = cfg.get_int("invariant", "offset_levels", p.offset_levels);
  p.offset_step = cfg.get_double("invariant", "offset_step", p.offset_step);
  p.ray_directions = cfg.get_int("invariant", "ray_directions", p.ray_directions);
  p.thickness_cells = cfg.get_double("invariant", "thickness_cells", p.thickness_cells);
  check_range(p.max_control_points, 0, 4, "invariant.max_control_points");
  check_range(p.product_control_points, 0, 4, "invariant.product_control_points");
  check_range(p.offset_levels, 0, 4, "invariant.offset_levels");
  if (!(p.offset_step > 0.0)) throw ConfigError("invariant.offset_step must be positive");
  if (!(p.thickness_cells > 0.0)) throw ConfigError("invariant.thickness_cells must be positive");
  if (p.ray_directions != 4 && p.ray_directions != 8) throw ConfigError("invariant.ray_directions must be 4 or 8");
  return p;
}

CondenserSpec condenser_from(const Config& cfg) {
  if (!cfg.has_section("condenser")) throw ConfigError("missing section [condenser] with keys c0 and c1");
  return {parse_shape(cfg.require("condenser", "c0")), parse_shape(cfg.require("condenser", "c1"))};
}

}  // namespace fincap
