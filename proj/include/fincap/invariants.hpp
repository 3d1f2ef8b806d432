#pragma once

// Upper bounds for the conformal invariants mu, lambda, nu and rho: each
// infimum over continua is replaced by a minimum over a finite catalog of
// thickened polylines drawn in source coordinates.

#include <optional>
#include <string>
#include <vector>

#include "fincap/conformal.hpp"

namespace fincap {

struct CatalogParams {
  int max_control_points = 2;   // compact candidates use k = 0..max interior vertices
  int offset_levels = 1;        // perpendicular offsets b * offset_step * |x2 - x1|, |b| <= levels
  double offset_step = 0.2;
  int product_control_points = 1;  // for compact factors of nu and rho
  int ray_directions = 4;       // relative continua leave through 4 or 8 directions
  double thickness_cells = 3.5; // tube width in source cells
};

// Compact continua joining a and b. The endpoints are put in canonical order
// first, so the catalog for (a, b) equals the catalog for (b, a). Coincident
// points give a single blob.
std::vector<Shape> compact_catalog(const Vec2& a, const Vec2& b, double cell, const CatalogParams& params);
// Thickened rays from p to the boundary of `domain`.
std::vector<Shape> relative_catalog(const Vec2& p, const Rect& domain, double cell, const CatalogParams& params);

// Where candidates are solved. For an image space, catalogs are drawn in source
// coordinates and mapped by `map`, the grid is the target grid, and solves are
// restricted to `region`.
struct InvariantSpace {
  const FiberCache* cache = nullptr;
  Rect source_domain;
  double cell = 0.0;
  std::optional<PlanarMap> map;
  const std::vector<char>* region = nullptr;
  std::optional<Shape> truncation;
};

InvariantSpace source_space(const FiberCache& cache);
InvariantSpace image_space(const ConformalMap& cm, const FiberCache& target_cache, const std::vector<char>& region,
                           const SphereBundleGrid& source_grid);

struct InvariantResult {
  double value = 0.0;
  bool infinite = false;
  std::size_t candidates = 0;
  std::size_t solved = 0;          // candidates that were admissible on the grid
  std::size_t best_index = 0;
  std::vector<Shape> best;         // winning continua (one for mu, two otherwise)
  CapacityResult best_result;
};

InvariantResult invariant_mu(const InvariantSpace& space, const Vec2& x1, const Vec2& x2,
                             const CatalogParams& params = {}, const SolverConfig& cfg = {});
InvariantResult invariant_lambda(const InvariantSpace& space, const Vec2& x1, const Vec2& x2,
                                 const CatalogParams& params = {}, const SolverConfig& cfg = {});
InvariantResult invariant_nu(const InvariantSpace& space, const Vec2& x1, const Vec2& x2, const Vec2& x3,
                             const CatalogParams& params = {}, const SolverConfig& cfg = {});
InvariantResult invariant_rho(const InvariantSpace& space, const Vec2& x1, const Vec2& x2, const Vec2& x3,
                              const Vec2& x4, const CatalogParams& params = {}, const SolverConfig& cfg = {});

// Overlap rule: {x1, x2} meets {x3, x4}.
bool rho_overlap(const Vec2& x1, const Vec2& x2, const Vec2& x3, const Vec2& x4);

enum class InvariantKind { mu, lambda, nu, rho };
InvariantKind parse_invariant_kind(const std::string& name);
std::string to_string(InvariantKind kind);
std::size_t arity(InvariantKind kind);

InvariantResult evaluate_invariant(InvariantKind kind, const InvariantSpace& space, const std::vector<Vec2>& points,
                                   const CatalogParams& params, const SolverConfig& cfg);

// Invariant on (M, points) against (M', f(points)) with the image catalog.
CheckReport check_invariant_invariance(const ConformalMap& cm, InvariantKind kind, const std::vector<Vec2>& points,
                                       const Resolution& res, const CatalogParams& params = {},
                                       const SolverConfig& cfg = {}, double threshold = 0.05);

}  // namespace fincap
