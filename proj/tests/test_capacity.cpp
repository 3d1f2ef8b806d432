#include <cmath>
#include <numbers>
#include <random>

#include "catalog.hpp"
#include "doctest.h"
#include "fincap/capacity.hpp"
#include "fincap/errors.hpp"
#include "oracles.hpp"

using namespace fincap;
using namespace fincap::testing;

namespace {

constexpr double kPi = std::numbers::pi;
const double kAnnulus = 4 * kPi * kPi;

ScalarField random_field(const SphereBundleGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarField f(g);
  for (double& v : f.values()) v = u(rng);
  return f;
}

CondenserSpec annulus(double r0) { return {Shape::exterior_disk({0, 0}, r0 * std::exp(1.0)), Shape::disk({0, 0}, r0)}; }

SphereBundleGrid annulus_grid(int n, int nt = 8) { return SphereBundleGrid(Rect{-0.75, 0.75, -0.75, 0.75}, n, n, nt); }

}  // namespace

TEST_CASE("energy examples") {
  SphereBundleGrid g(Rect{0, 1, 0, 1}, 16, 16, 32);
  MetricSpec eu = MetricSpec::euclidean(2);
  ScalarField ux = ScalarField::sample(g, [](const Vec2& p) { return p[0]; });
  CHECK(energy(ux, eu, g) == doctest::Approx(2 * kPi).epsilon(1e-3));
  CHECK(std::abs(energy(ScalarField(g, 0.3), eu, g)) < 1e-25);

  MetricSpec conf = MetricSpec::conformal(eu, Expr::parse("0.3*sin(x1) + x2^2"));
  ScalarField uq = ScalarField::sample(g, [](const Vec2& p) { return p[0] * p[1] + std::cos(p[0]); });
  CHECK(rel_err(energy(uq, conf, g), energy(uq, eu, g)) < 1e-12);
}

TEST_CASE("energy is the integral of the lifted gradient norm") {
  SphereBundleGrid g(Rect{-0.5, 0.5, -0.5, 0.5}, 12, 10, 16);
  MetricSpec r = sample_randers();
  ScalarField u = ScalarField::sample(g, [](const Vec2& p) { return std::sin(3 * p[0]) + p[1]; });
  BundleField q = gradient_norm_lift(u, r, g);
  for (double& v : q.values()) v *= v;
  CHECK(rel_err(energy(u, r, g), integrate(q, r, g)) < 1e-12);

  FiberCache cache(r, g);
  EnergyFunctional cubic(cache, 3.0);
  BundleField q3 = gradient_norm_lift(u, cache);
  for (double& v : q3.values()) v = v * v * v;
  CHECK(rel_err(cubic.energy(u.values()), integrate(q3, cache)) < 1e-12);
}

TEST_CASE("energy gradient matches central differences") {
  SphereBundleGrid g(Rect{-0.5, 0.5, -0.5, 0.5}, 10, 9, 16);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  for (const MetricSpec& m : {sample_randers(), sample_conformal_randers()}) {
    FiberCache cache(m, g);
    for (double p : {2.0, 3.0}) {
      std::vector<char> region(g.base_size(), 1);
      for (int j = 0; j < 4; ++j) region[g.base_index(0, j)] = 0;
      for (auto reg : {std::optional<std::vector<char>>(), std::optional(region)}) {
        EnergyFunctional I(cache, p, reg);
        for (int s = 0; s < 3; ++s) {
          ScalarField u = random_field(g, rng);
          std::vector<double> dir(g.base_size());
          for (double& v : dir) v = normal(rng);
          std::vector<double> grad = I.gradient(u.values());
          double analytic = 0;
          for (std::size_t i = 0; i < dir.size(); ++i) analytic += grad[i] * dir[i];
          const double eps = 1e-6;
          std::vector<double> up = u.values(), um = u.values();
          for (std::size_t i = 0; i < dir.size(); ++i) {
            up[i] += eps * dir[i];
            um[i] -= eps * dir[i];
          }
          double fd = (I.energy(up) - I.energy(um)) / (2 * eps);
          CHECK(rel_err(analytic, fd) < 1e-5);
        }
      }
    }
  }

  ScalarField c(g, 0.7);
  {
    const auto field1 = energy_gradient(c, sample_randers(), g);
    for (double v : field1.values()) CHECK(std::abs(v) < 1e-14);
  }
  ScalarField pinned = random_field(g, rng);
  pinned.pin(2, 3, 0.1);
  CHECK(energy_gradient(pinned, sample_randers(), g)(2, 3) == 0.0);
}

TEST_CASE("energy increment is exact for p = 2") {
  SphereBundleGrid g(Rect{0, 1, 0, 1}, 8, 8, 8);
  FiberCache cache(sample_randers(), g);
  EnergyFunctional I(cache);
  std::mt19937_64 rng(4);
  ScalarField u = random_field(g, rng), v = random_field(g, rng);
  std::vector<double> d(u.values().size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = v.values()[i] - u.values()[i];
  double inc = I.increment(u.values(), I.gradient(u.values()), d);
  CHECK(rel_err(inc, I.energy(v.values()) - I.energy(u.values())) < 1e-10);
}

TEST_CASE("discrete energy is convex") {
  SphereBundleGrid g(Rect{0, 1, 0, 1}, 10, 10, 16);
  FiberCache cache(sample_randers(), g);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> tdist(0.0, 1.0);
  for (double p : {2.0, 3.0}) {
    EnergyFunctional I(cache, p);
    for (int s = 0; s < 20; ++s) {
      ScalarField u = random_field(g, rng), v = random_field(g, rng);
      double t = tdist(rng);
      std::vector<double> w(u.values().size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = t * u.values()[i] + (1 - t) * v.values()[i];
      CHECK(I.energy(w) <= t * I.energy(u.values()) + (1 - t) * I.energy(v.values()) + 1e-10);
    }
  }
}

TEST_CASE("annulus condenser") {
  MetricSpec eu = MetricSpec::euclidean(2);
  auto g32 = annulus_grid(32), g64 = annulus_grid(64);
  CapacityResult r32 = minimize(annulus(0.25), eu, g32);
  CapacityResult r64 = minimize(annulus(0.25), eu, g64);
  CHECK(r32.converged);
  CHECK(r64.converged);
  CHECK(std::abs(r64.value - kAnnulus) < std::abs(r32.value - kAnnulus));
  CHECK(std::abs(r64.value / kAnnulus - 1) < 0.06);
  CHECK(r64.grid_meta.nx == 64);

  const ScalarField& u = r64.minimizer;
  auto c1 = Shape::disk({0, 0}, 0.25).rasterize(g64);
  auto c0 = Shape::exterior_disk({0, 0}, 0.25 * std::exp(1.0)).rasterize(g64);
  for (std::size_t b = 0; b < c1.size(); ++b) {
    if (c1[b]) CHECK(u.values()[b] == 1.0);
    if (c0[b]) CHECK(u.values()[b] == 0.0);
    CHECK(u.values()[b] >= 0.0);
    CHECK(u.values()[b] <= 1.0);
  }
  for (std::size_t k = 1; k < r64.energy_history.size(); ++k)
    CHECK(r64.energy_history[k] <= r64.energy_history[k - 1]);
  CHECK(oscillation(u, Shape::disk({0, 0}, 0.25), g64) == 0.0);

  std::vector<char> free_nodes(g64.base_size());
  for (std::size_t b = 0; b < free_nodes.size(); ++b) free_nodes[b] = !u.pin_mask()[b];
  CHECK(is_monotone(u, g64, &free_nodes).monotone);

  MetricSpec conf = MetricSpec::conformal(eu, Expr::parse("0.4*cos(x1) - 0.2*x2"));
  CapacityResult rc = minimize(annulus(0.25), conf, g32);
  CHECK(rel_err(rc.value, r32.value) < 1e-8);
}

TEST_CASE("energy gradient at the analytic annulus minimizer shrinks under refinement") {
  MetricSpec eu = MetricSpec::euclidean(2);
  // Max free gradient over nodes at least three cells from both plates; next to
  // the stair-stepped plate edges the sampled analytic field is not discrete-harmonic.
  auto interior_gradient = [&](int n) {
    SphereBundleGrid g = annulus_grid(n);
    const double r0 = 0.25, r1 = 0.25 * std::exp(1.0);
    auto c0 = Shape::exterior_disk({0, 0}, r1).rasterize(g);
    auto c1 = Shape::disk({0, 0}, r0).rasterize(g);
    ScalarField u(g);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t b = g.base_index(i, j);
        if (c1[b]) u.pin(i, j, 1.0);
        else if (c0[b]) u.pin(i, j, 0.0);
        else u(i, j) = 1.0 - std::log(std::hypot(g.x1(i), g.x2(j)) / r0);
      }
    FiberCache cache(eu, g);
    EnergyFunctional I(cache, 2.0, energy_support(u));
    std::vector<double> grad = I.gradient(u.values());
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double r = std::hypot(g.x1(i), g.x2(j));
        if (r > r0 + 3 * g.dx1() && r < r1 - 3 * g.dx1()) worst = std::max(worst, std::abs(grad[g.base_index(i, j)]));
      }
    return worst;
  };
  double coarse = interior_gradient(32), fine = interior_gradient(64);
  CHECK(coarse < 2e-2);
  CHECK(fine < 0.5 * coarse);
}

TEST_CASE("condenser edge cases") {
  MetricSpec eu = MetricSpec::euclidean(2);
  SphereBundleGrid g(Rect{0, 1, 0, 1}, 20, 20, 8);
  CondenserSpec overlap{Shape::disk({0.5, 0.5}, 0.3), Shape::disk({0.6, 0.5}, 0.2)};
  CapacityResult r = minimize(overlap, eu, g);
  CHECK(r.infinite);
  CHECK(std::isinf(r.value));

  CondenserSpec empty{Shape::disk({0.5, 0.5}, 0.001), Shape::outer_boundary()};
  CHECK_THROWS_AS(minimize(empty, eu, g), DegenerateCondenserError);
  CondenserSpec touching{Shape::rectangle({0.0, 0.0}, {0.43, 1.0}), Shape::rectangle({0.47, 0.0}, {1.0, 1.0})};
  CHECK_THROWS_AS(minimize(touching, eu, g), DegenerateCondenserError);
  CondenserSpec separated{Shape::rectangle({0.0, 0.0}, {0.3, 1.0}), Shape::rectangle({0.7, 0.0}, {1.0, 1.0})};
  CapacityResult s = minimize(separated, eu, g);
  CHECK(s.converged);
  CHECK(std::isfinite(s.value));

  SolverConfig cfg;
  cfg.max_iter = 2;
  CapacityResult short_run = minimize(annulus(0.25), eu, annulus_grid(32), cfg);
  CHECK_FALSE(short_run.converged);
  CHECK(short_run.iterations == 2);
  cfg.tol = 0.0;
  CHECK_THROWS_AS(minimize(annulus(0.25), eu, annulus_grid(32), cfg), ConfigError);
}

TEST_CASE("parallel strips converge to the one-dimensional capacity") {
  // Plates x1 <= 0.2 and x1 >= 0.8 with natural side boundaries. The oracle is
  // 2 pi * height / gap with the gap measured between the outermost pinned nodes.
  auto relative_error = [](int n) {
    SphereBundleGrid g(Rect{0, 1, 0, 1}, n, 10, 8);
    CondenserSpec strips{Shape::rectangle({-1, -1}, {0.2, 2}), Shape::rectangle({0.8, -1}, {2, 2})};
    CapacityResult r = minimize(strips, MetricSpec::euclidean(2), g);
    double a = 0, b = 1;
    for (int i = 0; i < n; ++i) {
      if (g.x1(i) <= 0.2) a = g.x1(i);
      if (g.x1(n - 1 - i) >= 0.8) b = g.x1(n - 1 - i);
    }
    return r.value / (2 * kPi / (b - a)) - 1;
  };
  double e40 = relative_error(40), e80 = relative_error(80);
  CHECK(std::abs(e40) < 0.015);
  // First order: the central stencil leaves a one-cell staircase between sublattices at each plate.
  CHECK(std::abs(e40 / e80) > 1.8);
}

TEST_CASE("compact capacity") {
  MetricSpec eu = MetricSpec::euclidean(2);
  SolverConfig cfg;
  auto run = [&](double half, int n, double r0) {
    SphereBundleGrid g(Rect{-half, half, -half, half}, n, n, 8);
    return cap_compact(Shape::disk({0, 0}, r0), eu, g, cfg);
  };
  CapacityResult base = run(1.0, 48, 0.2);
  CHECK(base.converged);
  // The square of half-width L lies between the disks of radius L and L sqrt 2.
  const double hi = kAnnulus / std::log(1.0 / 0.2), lo = kAnnulus / std::log(std::sqrt(2.0) / 0.2);
  CHECK(base.value > 0.9 * lo);
  CHECK(base.value < 1.1 * hi);

  CapacityResult bigger_set = run(1.0, 48, 0.24);
  CHECK(bigger_set.value >= base.value);
  CapacityResult bigger_domain = run(1.5, 72, 0.2);
  CHECK(bigger_domain.value <= base.value);
  CapacityResult biggest_domain = run(2.5, 120, 0.2);
  CHECK(biggest_domain.value <= bigger_domain.value);
  MESSAGE("cap_compact 0.2 in L=1,1.5,2.5: " << base.value << " " << bigger_domain.value << " " << biggest_domain.value);

  SphereBundleGrid g(Rect{-1, 1, -1, 1}, 20, 20, 8);
  CHECK_THROWS_AS(cap_compact(Shape::disk({0.8, 0}, 0.15), eu, g), PreconditionError);
  CHECK_THROWS_AS(cap_compact(Shape::disk({0, 0}, 0.95), eu, g), PreconditionError);
  CHECK_NOTHROW(cap_compact(Shape::disk({0, 0}, 0.5), eu, g));
}

TEST_CASE("oscillation") {
  SphereBundleGrid g(Rect{0, 1, 0, 1}, 11, 11, 8);
  ScalarField ux = ScalarField::sample(g, [](const Vec2& p) { return p[0]; });
  CHECK(oscillation(ux, Shape::rectangle({0, 0}, {1, 1}), g) == doctest::Approx(10.0 / 11.0));
  CHECK(oscillation(ScalarField(g, 2.0), Shape::rectangle({0, 0}, {1, 1}), g) == 0.0);
  CHECK_THROWS_AS(oscillation(ux, Shape::disk({5, 5}, 0.1), g), DomainError);
}

TEST_CASE("monotonicity check") {
  SphereBundleGrid g(Rect{0, 1, 0, 1}, 16, 16, 8);
  ScalarField ux = ScalarField::sample(g, [](const Vec2& p) { return p[0]; });
  MonotonicityReport lin = is_monotone(ux, g);
  CHECK(lin.monotone);
  CHECK(lin.windows_checked == 105u * 105u);

  ScalarField bump = ScalarField::sample(g, [](const Vec2& p) {
    return std::exp(-40 * ((p[0] - 0.53) * (p[0] - 0.53) + (p[1] - 0.47) * (p[1] - 0.47)));
  });
  MonotonicityReport rep = is_monotone(bump, g);
  REQUIRE_FALSE(rep.monotone);
  REQUIRE(rep.witness);
  Window w = *rep.witness;
  // The bump peaks at node (8, 7); the witness must hold it strictly inside.
  CHECK(w.i0 < 8);
  CHECK(w.i1 > 8);
  CHECK(w.j0 < 7);
  CHECK(w.j1 > 7);

  MonotonicityReport coarse = is_monotone(ux, g, nullptr, 1e-12, 1000);
  CHECK(coarse.stride > 1);
  CHECK(coarse.windows_checked <= 1000u);
}
