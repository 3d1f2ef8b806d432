#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "catalog.hpp"
#include "doctest.h"
#include "fincap/errors.hpp"
#include "fincap/invariants.hpp"
#include "oracles.hpp"

using namespace fincap;
using namespace fincap::testing;

namespace {

const Rect kSquare{-1.0, 1.0, -1.0, 1.0};

FiberCache euclidean_cache(int n) { return FiberCache(MetricSpec::euclidean(2), SphereBundleGrid(kSquare, n, n, 8)); }

// Four points on a line, spaced so that interleaved pairs can be separated by
// bent candidates.
std::vector<Vec2> line_points() { return {{-0.75, 0.0}, {-0.25, 0.0}, {0.25, 0.0}, {0.75, 0.0}}; }

CatalogParams wide_offsets() {
  CatalogParams p;
  p.offset_step = 0.45;
  return p;
}

}  // namespace

TEST_CASE("compact catalog") {
  const CatalogParams params;
  const auto cat = compact_catalog({-0.3, 0.1}, {0.4, -0.2}, 0.05, params);
  CHECK(cat.size() == 11);
  CHECK(cat.front().kind() == Shape::Kind::polyline);
  CHECK(cat.front().vertices().size() == 2);
  for (const Shape& s : cat) CHECK(s.size() == doctest::Approx(0.175));

  const auto swapped = compact_catalog({0.4, -0.2}, {-0.3, 0.1}, 0.05, params);
  REQUIRE(swapped.size() == cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) CHECK(swapped[i].describe() == cat[i].describe());

  CatalogParams bigger = params;
  bigger.max_control_points = 3;
  CHECK(compact_catalog({-0.3, 0.1}, {0.4, -0.2}, 0.05, bigger).size() == 1 + 2 + 8 + 26);
  bigger.max_control_points = 0;
  CHECK(compact_catalog({-0.3, 0.1}, {0.4, -0.2}, 0.05, bigger).size() == 1);

  const auto close = compact_catalog({0.0, 0.0}, {0.01, 0.0}, 0.05, params);
  REQUIRE(close.size() == 1);
  CHECK(close.front().kind() == Shape::Kind::blob);

  CatalogParams bad = params;
  bad.ray_directions = 6;
  CHECK_THROWS_AS(compact_catalog({0, 0}, {1, 0}, 0.05, bad), ConfigError);
}

TEST_CASE("relative catalog leaves through opposite sides") {
  CatalogParams params;
  const auto rays = relative_catalog({0.2, -0.1}, kSquare, 0.05, params);
  REQUIRE(rays.size() == 4);
  CHECK(rays[0].vertices()[1][0] > kSquare.x1max);
  CHECK(rays[2].vertices()[1][0] < kSquare.x1min);
  CHECK(rays[1].vertices()[1][1] > kSquare.x2max);
  CHECK(rays[3].vertices()[1][1] < kSquare.x2min);
  CHECK(rays[0].vertices()[1][1] == -0.1);

  params.ray_directions = 8;
  const auto eight = relative_catalog({0.2, -0.1}, kSquare, 0.05, params);
  REQUIRE(eight.size() == 8);
  for (int d = 0; d < 4; ++d) CHECK(eight[2 * d].describe() == rays[d].describe());
}

TEST_CASE("mu") {
  const FiberCache cache = euclidean_cache(32);
  const InvariantSpace space = source_space(cache);
  const Vec2 a{-0.3, -0.1}, b{0.35, 0.15};

  const InvariantResult ab = invariant_mu(space, a, b);
  const InvariantResult ba = invariant_mu(space, b, a);
  CHECK(ab.value == ba.value);
  CHECK(ab.best_index == ba.best_index);
  CHECK(ab.candidates == 11);
  CHECK(ab.value > 0.0);
  REQUIRE(ab.best.size() == 1);

  const auto straight = compact_catalog(a, b, space.cell, CatalogParams{}).front();
  CHECK(ab.value <= cap_compact(straight, cache).value);

  CatalogParams k0, k1;
  k0.max_control_points = 0;
  k1.max_control_points = 1;
  const double v0 = invariant_mu(space, a, b, k0).value;
  const double v1 = invariant_mu(space, a, b, k1).value;
  CHECK(v1 <= v0);
  CHECK(ab.value <= v1);

  // Below one cell the catalog is a blob that shrinks with the separation.
  const double h = space.cell;
  const double wide = invariant_mu(space, {0.03125, 0.03125}, {0.03125 + 0.9 * h, 0.03125}).value;
  const double narrow = invariant_mu(space, {0.03125, 0.03125}, {0.03125 + 0.1 * h, 0.03125}).value;
  CHECK(narrow < wide);

  CHECK_THROWS_AS(invariant_mu(space, a, a), DomainError);
  CHECK_THROWS_AS(invariant_mu(space, a, {1.5, 0.0}), DomainError);
}

TEST_CASE("lambda") {
  const FiberCache cache = euclidean_cache(32);
  const InvariantSpace space = source_space(cache);
  const Vec2 a{-0.3, 0.05}, b{0.25, -0.1};
  const InvariantResult ab = invariant_lambda(space, a, b);
  CHECK(ab.value == invariant_lambda(space, b, a).value);
  CHECK(ab.candidates == 16);
  CHECK(std::isfinite(ab.value));
  REQUIRE(ab.best.size() == 2);

  CatalogParams eight;
  eight.ray_directions = 8;
  CHECK(invariant_lambda(space, a, b, eight).value <= ab.value);
  CHECK_THROWS_AS(invariant_lambda(space, a, a), DomainError);
}

TEST_CASE("nu") {
  const FiberCache cache = euclidean_cache(32);
  const InvariantSpace space = source_space(cache);
  const Vec2 a{-0.3, -0.2}, b{-0.1, 0.2};
  const double near = invariant_nu(space, a, b, {0.2, 0.0}).value;
  const double far = invariant_nu(space, a, b, {0.6, 0.0}).value;
  CHECK(far < near);

  CatalogParams k0;
  k0.product_control_points = 0;
  CHECK(invariant_nu(space, a, b, {0.2, 0.0}).value <= invariant_nu(space, a, b, {0.2, 0.0}, k0).value);

  const InvariantResult blob = invariant_nu(space, a, a, {0.4, 0.1});
  REQUIRE(blob.best.size() == 2);
  CHECK(blob.best[1].kind() == Shape::Kind::blob);
  CHECK(std::isfinite(blob.value));
  CHECK_THROWS_AS(invariant_nu(space, a, a, a), DomainError);
}

TEST_CASE("rho") {
  const FiberCache cache = euclidean_cache(32);
  const InvariantSpace space = source_space(cache);
  const Vec2 a{-0.5, -0.4}, b{-0.45, 0.4}, c{0.45, -0.35}, d{0.5, 0.4};
  const InvariantResult r = invariant_rho(space, a, b, c, d);
  CHECK(std::isfinite(r.value));
  CHECK(r.value > 0.0);
  CHECK(r.candidates == 9);
  CHECK(invariant_rho(space, b, a, c, d).value == r.value);
  CHECK(invariant_rho(space, a, b, d, c).value == r.value);
  CHECK(invariant_rho(space, c, d, a, b).value == r.value);

  const InvariantResult inf = invariant_rho(space, a, b, a, d);
  CHECK(inf.infinite);
  CHECK(inf.value == std::numeric_limits<double>::infinity());
  CHECK(inf.candidates == 0);
  CHECK_THROWS_AS(invariant_rho(space, a, a, a, d), DomainError);
  CHECK_THROWS_AS(invariant_rho(space, a, b, b, b), DomainError);
  CHECK_THROWS_AS(invariant_rho(space, a, b, c, {2.0, 0.0}), DomainError);
}

TEST_CASE("rho is infinite exactly on the overlap rule") {
  const FiberCache cache = euclidean_cache(32);
  const InvariantSpace space = source_space(cache);
  const std::vector<Vec2> pts = line_points();
  int finite = 0, infinite = 0;
  for (int i = 0; i < 256; ++i) {
    const Vec2 &x1 = pts[i & 3], &x2 = pts[(i >> 2) & 3], &x3 = pts[(i >> 4) & 3], &x4 = pts[(i >> 6) & 3];
    std::array<int, 4> c{};
    for (int s : {i & 3, (i >> 2) & 3, (i >> 4) & 3, (i >> 6) & 3}) ++c[s];
    if (*std::max_element(c.begin(), c.end()) >= 3) {
      CHECK_THROWS_AS(invariant_rho(space, x1, x2, x3, x4, wide_offsets()), DomainError);
      continue;
    }
    const InvariantResult r = invariant_rho(space, x1, x2, x3, x4, wide_offsets());
    INFO("tuple " << i);
    CHECK(r.infinite == rho_overlap(x1, x2, x3, x4));
    (r.infinite ? infinite : finite)++;
  }
  CHECK(finite > 0);
  CHECK(infinite > 0);
}

TEST_CASE("invariants are unchanged under a constant rescaling") {
  const ConformalMap cm = rescaled_identity("0.5");
  const Resolution res{32, 32, 8};
  CHECK(check_invariant_invariance(cm, InvariantKind::mu, {{-0.3, 0.0}, {0.3, 0.1}}, res).max_rel_err < 1e-12);
  CHECK(check_invariant_invariance(cm, InvariantKind::lambda, {{-0.3, 0.0}, {0.3, 0.1}}, res).max_rel_err < 1e-12);
  CHECK(check_invariant_invariance(cm, InvariantKind::nu, {{-0.3, 0.0}, {0.0, 0.3}, {0.35, -0.2}}, res).max_rel_err <
        1e-12);
  const CheckReport rho = check_invariant_invariance(
      cm, InvariantKind::rho, {{-0.4, -0.35}, {-0.35, 0.35}, {0.35, -0.3}, {0.4, 0.35}}, res);
  CHECK(rho.max_rel_err < 1e-12);
  CHECK(rho.pass);
  CHECK(check_invariant_invariance(cm, InvariantKind::rho, {{-0.4, -0.35}, {-0.35, 0.35}, {-0.4, -0.35}, {0.4, 0.35}},
                                   res)
            .pass);
}

TEST_CASE("kind parsing and arity") {
  CHECK(parse_invariant_kind("rho") == InvariantKind::rho);
  CHECK(to_string(InvariantKind::lambda) == "lambda");
  CHECK(arity(InvariantKind::nu) == 3);
  CHECK_THROWS_AS(parse_invariant_kind("eta"), ConfigError);
  const FiberCache cache = euclidean_cache(16);
  CHECK_THROWS_AS(evaluate_invariant(InvariantKind::mu, source_space(cache), {{0, 0}}, {}, {}), ConfigError);
}
