#include "fincap/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "fincap/errors.hpp"
#include "fincap/parallel.hpp"

namespace fincap {

namespace {

std::string format(const Vec2& p) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << p[0] << ',' << p[1] << ')';
  return os.str();
}

void check_params(const CatalogParams& params) {
  if (params.max_control_points < 0) throw ConfigError("max_control_points must be nonnegative");
  if (params.product_control_points < 0) throw ConfigError("product_control_points must be nonnegative");
  if (params.offset_levels < 0) throw ConfigError("offset_levels must be nonnegative");
  if (!(params.offset_step > 0.0)) throw ConfigError("offset_step must be positive");
  if (!(params.thickness_cells > 0.0)) throw ConfigError("thickness_cells must be positive");
  if (params.ray_directions != 4 && params.ray_directions != 8) throw ConfigError("ray_directions must be 4 or 8");
}

bool lex_less(const Vec2& a, const Vec2& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); }

// Source-coordinate point. Points outside the domain, or outside the image of
// the map, throw DomainError.
Vec2 to_source(const InvariantSpace& space, const Vec2& p) {
  const Vec2 q = space.map ? space.map->inverse(p) : p;
  if (!space.source_domain.contains(q)) throw DomainError("point " + format(p) + " lies outside the domain");
  return q;
}

Shape in_space(const InvariantSpace& space, const Shape& s) { return space.map ? s.image_of(*space.map) : s; }

std::vector<Shape> in_space(const InvariantSpace& space, const std::vector<Shape>& shapes) {
  std::vector<Shape> out;
  out.reserve(shapes.size());
  for (const Shape& s : shapes) out.push_back(in_space(space, s));
  return out;
}

void check_space(const InvariantSpace& space) {
  if (!space.cache) throw ConfigError("invariant space has no grid");
  if (!(space.cell > 0.0)) throw ConfigError("invariant space needs a positive cell size");
}

// Solves candidates concurrently and keeps the first minimum by index.
// Candidates that are degenerate on the grid are skipped.
InvariantResult minimize_over(std::size_t count, const std::function<CapacityResult(std::size_t)>& solve,
                              const std::function<std::vector<Shape>(std::size_t)>& shapes) {
  std::vector<std::optional<CapacityResult>> results(count);
  parallel_for(count, [&](std::size_t c) {
    try {
      results[c] = solve(c);
    } catch (const DegenerateCondenserError&) {
    } catch (const PreconditionError&) {
    }
  });
  InvariantResult out;
  out.candidates = count;
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < count; ++c) {
    if (!results[c]) continue;
    ++out.solved;
    const CapacityResult& r = *results[c];
    if (!best) {
      best = c;
      continue;
    }
    const CapacityResult& b = *results[*best];
    if (!r.infinite && (b.infinite || r.value < b.value)) best = c;
  }
  if (!best) throw DomainError("no candidate continuum is admissible on this grid");
  out.best_index = *best;
  out.best_result = std::move(*results[*best]);
  out.infinite = out.best_result.infinite;
  out.value = out.infinite ? std::numeric_limits<double>::infinity() : out.best_result.value;
  out.best = shapes(*best);
  return out;
}

InvariantResult condenser_product(const InvariantSpace& space, const std::vector<Shape>& c0, const std::vector<Shape>& c1,
                                  const SolverConfig& cfg) {
  const std::size_t n1 = c1.size();
  auto shapes = [&](std::size_t c) { return std::vector<Shape>{c0[c / n1], c1[c % n1]}; };
  auto solve = [&](std::size_t c) {
    return minimize(CondenserSpec{c0[c / n1], c1[c % n1]}, *space.cache, cfg, space.region);
  };
  return minimize_over(c0.size() * n1, solve, shapes);
}

CatalogParams with_control_points(CatalogParams params, int k) {
  params.max_control_points = k;
  return params;
}

}  // namespace

std::vector<Shape> compact_catalog(const Vec2& a_in, const Vec2& b_in, double cell, const CatalogParams& params) {
  check_params(params);
  const Vec2 a = lex_less(b_in, a_in) ? b_in : a_in;
  const Vec2 b = lex_less(b_in, a_in) ? a_in : b_in;
  const double thickness = params.thickness_cells * cell;
  const double dx = b[0] - a[0];
  const double dy = b[1] - a[1];
  const double dist = std::hypot(dx, dy);
  if (dist < cell) return {Shape::blob({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])}, 0.5 * (dist + thickness))};

  const Vec2 normal{-dy / dist, dx / dist};
  const double step = params.offset_step * dist;
  const int levels = 2 * params.offset_levels + 1;
  std::vector<Shape> out{Shape::polyline({a, b}, thickness)};
  for (int k = 1; k <= params.max_control_points; ++k) {
    int combos = 1;
    for (int m = 0; m < k; ++m) combos *= levels;
    for (int code = 0; code < combos; ++code) {
      std::vector<Vec2> vertices{a};
      bool all_zero = true;
      int rest = code;
      for (int m = 1; m <= k; ++m) {
        const int level = rest % levels - params.offset_levels;
        rest /= levels;
        all_zero = all_zero && level == 0;
        const double t = static_cast<double>(m) / (k + 1);
        const double off = level * step;
        vertices.push_back({a[0] + t * dx + off * normal[0], a[1] + t * dy + off * normal[1]});
      }
      if (all_zero) continue;
      vertices.push_back(b);
      out.push_back(Shape::polyline(std::move(vertices), thickness));
    }
  }
  return out;
}

std::vector<Shape> relative_catalog(const Vec2& p, const Rect& domain, double cell, const CatalogParams& params) {
  check_params(params);
  const double thickness = params.thickness_cells * cell;
  std::vector<Shape> out;
  for (int d = 0; d < params.ray_directions; ++d) {
    const double angle = 2.0 * M_PI * d / params.ray_directions;
    // Axis directions are set exactly so rays stay on grid lines.
    Vec2 dir{std::cos(angle), std::sin(angle)};
    if (params.ray_directions == 4 || d % 2 == 0) dir = {std::round(dir[0]), std::round(dir[1])};
    double reach = std::numeric_limits<double>::infinity();
    if (dir[0] > 0) reach = std::min(reach, (domain.x1max - p[0]) / dir[0]);
    if (dir[0] < 0) reach = std::min(reach, (domain.x1min - p[0]) / dir[0]);
    if (dir[1] > 0) reach = std::min(reach, (domain.x2max - p[1]) / dir[1]);
    if (dir[1] < 0) reach = std::min(reach, (domain.x2min - p[1]) / dir[1]);
    reach += cell;  // past the edge so the last row of nodes is covered
    out.push_back(Shape::polyline({p, {p[0] + reach * dir[0], p[1] + reach * dir[1]}}, thickness));
  }
  return out;
}

InvariantSpace source_space(const FiberCache& cache) {
  InvariantSpace s;
  s.cache = &cache;
  s.source_domain = cache.grid().base();
  s.cell = std::max(cache.grid().dx1(), cache.grid().dx2());
  return s;
}

InvariantSpace image_space(const ConformalMap& cm, const FiberCache& target_cache, const std::vector<char>& region,
                           const SphereBundleGrid& source_grid) {
  InvariantSpace s;
  s.cache = &target_cache;
  s.source_domain = cm.domain;
  s.cell = std::max(source_grid.dx1(), source_grid.dx2());
  s.map = cm.f;
  s.region = &region;
  s.truncation = truncation_ring(source_grid).image_of(cm.f);
  return s;
}

InvariantResult invariant_mu(const InvariantSpace& space, const Vec2& x1, const Vec2& x2, const CatalogParams& params,
                             const SolverConfig& cfg) {
  check_space(space);
  const Vec2 a = to_source(space, x1);
  const Vec2 b = to_source(space, x2);
  if (a == b) throw DomainError("mu needs two distinct points");
  const std::vector<Shape> cands = in_space(space, compact_catalog(a, b, space.cell, params));
  auto solve = [&](std::size_t c) { return cap_compact(cands[c], *space.cache, cfg, space.truncation, space.region); };
  return minimize_over(cands.size(), solve, [&](std::size_t c) { return std::vector<Shape>{cands[c]}; });
}

InvariantResult invariant_lambda(const InvariantSpace& space, const Vec2& x1, const Vec2& x2,
                                 const CatalogParams& params, const SolverConfig& cfg) {
  check_space(space);
  Vec2 a = to_source(space, x1);
  Vec2 b = to_source(space, x2);
  if (a == b) throw DomainError("lambda needs two distinct points");
  if (lex_less(b, a)) std::swap(a, b);
  return condenser_product(space, in_space(space, relative_catalog(a, space.source_domain, space.cell, params)),
                           in_space(space, relative_catalog(b, space.source_domain, space.cell, params)), cfg);
}

InvariantResult invariant_nu(const InvariantSpace& space, const Vec2& x1, const Vec2& x2, const Vec2& x3,
                             const CatalogParams& params, const SolverConfig& cfg) {
  check_space(space);
  const Vec2 a = to_source(space, x1);
  const Vec2 b = to_source(space, x2);
  const Vec2 c = to_source(space, x3);
  if (a == b && b == c) throw DomainError("nu is undefined on the diagonal x1 = x2 = x3");
  const CatalogParams product = with_control_points(params, params.product_control_points);
  return condenser_product(space, in_space(space, relative_catalog(c, space.source_domain, space.cell, params)),
                           in_space(space, compact_catalog(a, b, space.cell, product)), cfg);
}

bool rho_overlap(const Vec2& x1, const Vec2& x2, const Vec2& x3, const Vec2& x4) {
  return x1 == x3 || x1 == x4 || x2 == x3 || x2 == x4;
}

InvariantResult invariant_rho(const InvariantSpace& space, const Vec2& x1, const Vec2& x2, const Vec2& x3,
                              const Vec2& x4, const CatalogParams& params, const SolverConfig& cfg) {
  check_space(space);
  const std::array<Vec2, 4> pts{x1, x2, x3, x4};
  for (int i = 0; i < 4; ++i) {
    int equal = 0;
    for (int j = 0; j < 4; ++j) equal += pts[i] == pts[j] ? 1 : 0;
    if (equal >= 3) throw DomainError("rho is undefined when three of the points coincide");
  }
  std::array<Vec2, 4> src;
  for (int i = 0; i < 4; ++i) src[i] = to_source(space, pts[i]);
  if (rho_overlap(x1, x2, x3, x4)) {
    InvariantResult r;
    r.value = std::numeric_limits<double>::infinity();
    r.infinite = true;
    return r;
  }
  const CatalogParams product = with_control_points(params, params.product_control_points);
  // Pairs in canonical order so every relabeling symmetry picks the same condensers.
  auto pair_key = [](const Vec2& p, const Vec2& q) { return lex_less(q, p) ? std::array<Vec2, 2>{q, p} : std::array<Vec2, 2>{p, q}; };
  auto p0 = pair_key(src[0], src[1]);
  auto p1 = pair_key(src[2], src[3]);
  if (lex_less(p1[0], p0[0]) || (p1[0] == p0[0] && lex_less(p1[1], p0[1]))) std::swap(p0, p1);
  return condenser_product(space, in_space(space, compact_catalog(p0[0], p0[1], space.cell, product)),
                           in_space(space, compact_catalog(p1[0], p1[1], space.cell, product)), cfg);
}

InvariantKind parse_invariant_kind(const std::string& name) {
  if (name == "mu") return InvariantKind::mu;
  if (name == "lambda") return InvariantKind::lambda;
  if (name == "nu") return InvariantKind::nu;
  if (name == "rho") return InvariantKind::rho;
  throw ConfigError("unknown invariant '" + name + "' (expected mu, lambda, nu or rho)");
}

std::string to_string(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::mu:
      return "mu";
    case InvariantKind::lambda:
      return "lambda";
    case InvariantKind::nu:
      return "nu";
    case InvariantKind::rho:
      return "rho";
  }
  return "?";
}

std::size_t arity(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::mu:
    case InvariantKind::lambda:
      return 2;
    case InvariantKind::nu:
      return 3;
    case InvariantKind::rho:
      return 4;
  }
  return 0;
}

InvariantResult evaluate_invariant(InvariantKind kind, const InvariantSpace& space, const std::vector<Vec2>& p,
                                   const CatalogParams& params, const SolverConfig& cfg) {
  if (p.size() != arity(kind))
    throw ConfigError(to_string(kind) + " needs " + std::to_string(arity(kind)) + " points, got " +
                      std::to_string(p.size()));
  switch (kind) {
    case InvariantKind::mu:
      return invariant_mu(space, p[0], p[1], params, cfg);
    case InvariantKind::lambda:
      return invariant_lambda(space, p[0], p[1], params, cfg);
    case InvariantKind::nu:
      return invariant_nu(space, p[0], p[1], p[2], params, cfg);
    case InvariantKind::rho:
      return invariant_rho(space, p[0], p[1], p[2], p[3], params, cfg);
  }
  return {};
}

CheckReport check_invariant_invariance(const ConformalMap& cm, InvariantKind kind, const std::vector<Vec2>& points,
                                       const Resolution& res, const CatalogParams& params, const SolverConfig& cfg,
                                       double threshold) {
  CheckReport r{to_string(kind) + "_invariance", 1, 0.0, threshold, false, {}};
  const SphereBundleGrid src(cm.domain, res.nx, res.ny, res.ntheta);
  const SphereBundleGrid tgt = target_grid(cm, res);
  const FiberCache src_cache(cm.source, src);
  const FiberCache tgt_cache(cm.target, tgt);
  const std::vector<char> region = image_region(cm, tgt);
  std::vector<Vec2> image;
  for (const Vec2& p : points) image.push_back(cm.f(p));
  const InvariantResult a = evaluate_invariant(kind, source_space(src_cache), points, params, cfg);
  const InvariantResult b = evaluate_invariant(kind, image_space(cm, tgt_cache, region, src), image, params, cfg);
  if (a.infinite && b.infinite) {
    r.max_rel_err = 0.0;
  } else if (a.infinite || b.infinite) {
    r.max_rel_err = std::numeric_limits<double>::infinity();
  } else {
    r.max_rel_err = std::abs(a.value - b.value) / std::max({std::abs(a.value), std::abs(b.value), 1e-300});
  }
  const bool converged = (a.infinite || a.best_result.converged) && (b.infinite || b.best_result.converged);
  std::ostringstream os;
  os.precision(12);
  os << to_string(kind) << "_M=" << a.value << " (candidate " << a.best_index << " of " << a.candidates << ") "
     << to_string(kind) << "_M'=" << b.value << " (candidate " << b.best_index << " of " << b.candidates << ")";
  if (!converged) os << " (solver did not converge)";
  r.detail = os.str();
  r.pass = r.max_rel_err <= threshold && converged;
  return r;
}

}  // namespace fincap
