#include <cmath>
#include <numbers>
#include <sstream>

#include "catalog.hpp"
#include "doctest.h"
#include "fincap/conformal.hpp"
#include "fincap/errors.hpp"
#include "oracles.hpp"

using namespace fincap;
using namespace fincap::testing;

namespace {

constexpr double kPi = std::numbers::pi;

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2 * kPi);
  return std::min(d, 2 * kPi - d);
}

CondenserSpec annulus() { return {Shape::exterior_disk({0, 0}, 0.25 * std::exp(1.0)), Shape::disk({0, 0}, 0.25)}; }

}  // namespace

TEST_CASE("rescale examples") {
  const MetricSpec eu = MetricSpec::euclidean(2);
  const std::vector<double> x{0.3, -0.2}, y{0.7, 1.1};
  CHECK(eval_F(rescale(eu, Expr::constant(0.0)), x, y) == eval_F(eu, x, y));

  for (const MetricSpec& m : metric_catalog()) {
    const MetricSpec r = rescale(m, Expr::constant(0.4));
    const TensorPoint a = tensor_point(m, x, y);
    const TensorPoint b = tensor_point(r, x, y);
    CHECK(max_abs_diff(b.g, std::exp(0.8) * a.g) < 1e-12 * a.g.norm() * std::exp(0.8));
    CHECK(max_abs_diff(b.g_inv, std::exp(-0.8) * a.g_inv) < 1e-12 * a.g_inv.norm());
    CHECK(rel_err(b.F, std::exp(0.4) * a.F) < 1e-14);
  }

  const MetricSpec ex = rescale(eu, Expr::parse("x1"));
  CHECK(rel_err(eval_F(ex, {1.0, 0.0}, {3.0, 4.0}), 5.0 * std::exp(1.0)) < 1e-15);
}

TEST_CASE("bundle map examples") {
  const MetricSpec eu = MetricSpec::euclidean(2);
  const Rect D = map_domain();
  const Vec2 x{0.3, -0.4};

  const ConformalMap id{PlanarMap::identity(), Expr::constant(0.0), eu, eu, D};
  BundlePoint h = bundle_map(id, x, 1.2);
  CHECK(h.x == x);
  CHECK(std::abs(h.theta - 1.2) < 1e-15);

  const double alpha = 2.5;
  const ConformalMap rot{PlanarMap::similarity(1.0, alpha, {0, 0}), Expr::constant(0.0), eu, eu, D};
  for (double theta : {0.0, 1.0, 4.0, 6.0}) {
    h = bundle_map(rot, x, theta);
    CHECK(std::abs(h.x[0] - (std::cos(alpha) * x[0] - std::sin(alpha) * x[1])) < 1e-15);
    CHECK(std::abs(h.x[1] - (std::sin(alpha) * x[0] + std::cos(alpha) * x[1])) < 1e-15);
    CHECK(angle_gap(h.theta, theta + alpha) < 1e-14);
    CHECK(h.theta >= 0.0);
    CHECK(h.theta < 2 * kPi);
  }

  const ConformalMap dil{PlanarMap::similarity(2.0, 0.0, {0, 0}), Expr::constant(std::log(2.0)), eu, eu, D};
  h = bundle_map(dil, x, 0.9);
  CHECK(h.x == Vec2{0.6, -0.8});
  CHECK(std::abs(h.theta - 0.9) < 1e-15);

  CHECK_THROWS_AS(PlanarMap::affine(Eigen::Matrix2d::Zero(), {0, 0}), DomainError);
  const ConformalMap sq = squaring_map();
  CHECK_THROWS_AS(bundle_map(sq, sq.f.z0(), 0.3), DomainError);
}

TEST_CASE("bundle map jacobian matches central differences") {
  const double h = 1e-6;
  for (const NamedMap& nm : map_catalog()) {
    for (const Vec2& x : {Vec2{0.1, 0.2}, Vec2{-0.5, 0.6}, Vec2{0.7, -0.3}}) {
      for (double theta : {0.4, 2.0, 5.1}) {
        const Eigen::Matrix3d J = bundle_map_jacobian(nm.map, x, theta);
        Eigen::Matrix3d fd;
        for (int c = 0; c < 3; ++c) {
          Vec2 xp = x, xm = x;
          double tp = theta, tm = theta;
          if (c < 2) {
            xp[c] += h;
            xm[c] -= h;
          } else {
            tp += h;
            tm -= h;
          }
          const BundlePoint a = bundle_map(nm.map, xp, tp);
          const BundlePoint b = bundle_map(nm.map, xm, tm);
          double dtheta = a.theta - b.theta;
          dtheta -= 2 * kPi * std::round(dtheta / (2 * kPi));
          fd.col(c) << (a.x[0] - b.x[0]) / (2 * h), (a.x[1] - b.x[1]) / (2 * h), dtheta / (2 * h);
        }
        INFO(nm.name);
        CHECK((J - fd).cwiseAbs().maxCoeff() < 1e-7);
      }
    }
  }
}

TEST_CASE("pull-back identities hold on every catalog map") {
  const Expr u = Expr::parse("x1 + 0.3*x2^2 + sin(x1*x2)");
  for (const NamedMap& nm : map_catalog()) {
    INFO(nm.name);
    const CheckReport c = check_conformality(nm.map, 1000);
    const CheckReport v = check_pullback_volume(nm.map, 1000);
    const CheckReport e = check_pullback_energy_density(nm.map, u, 1000);
    CHECK(c.pass);
    CHECK(c.max_rel_err < 1e-10);
    CHECK(v.pass);
    CHECK(v.max_rel_err < 1e-6);
    CHECK(e.pass);
    CHECK(e.max_rel_err < 1e-8);
    CHECK(v.samples == 1000);
  }
}

TEST_CASE("pull-back checks detect a wrong conformal factor") {
  ConformalMap wrong = euclidean_similarity(1.3, 0.4, {0, 0});
  wrong.sigma = Expr::constant(0.0);
  CHECK_FALSE(check_conformality(wrong, 100).pass);
  CHECK_FALSE(check_pullback_volume(wrong, 100).pass);
  CHECK_FALSE(check_pullback_energy_density(wrong, Expr::parse("x1"), 100).pass);
}

TEST_CASE("pull-back examples with constant factor") {
  const ConformalMap cm = rescaled_identity("0.35");
  const Vec2 x{0.2, 0.1};
  for (double theta : {0.0, 1.7, 4.4}) {
    CHECK(rel_err(volume_density(cm.target, x, theta), std::exp(0.7) * volume_density(cm.source, x, theta)) < 1e-14);
    CHECK(rel_err(conformal_factor(cm, x), std::exp(0.7)) < 1e-15);
  }
  const CheckReport zero = check_pullback_energy_density(cm, Expr::constant(2.0), 50);
  CHECK(zero.pass);
  CHECK(zero.max_rel_err == 0.0);
  CHECK(check_pullback_energy_density(cm, Expr::parse("x1"), 50).max_rel_err < 1e-14);
}

TEST_CASE("energy invariance") {
  const Resolution res{64, 64, 16};
  const CheckReport exact = check_energy_invariance(rescaled_identity("0.3*sin(x1) + x2"), Expr::parse("x1*x2 + x1"), res);
  CHECK(exact.max_rel_err < 1e-12);
  CHECK(exact.pass);

  const CheckReport constant = check_energy_invariance(euclidean_similarity(1.3, 0.5, {0.1, 0}), Expr::constant(1.0), res);
  CHECK(constant.pass);
  CHECK(constant.max_rel_err < 1e-12);

  const CheckReport sim = check_energy_invariance(euclidean_similarity(1.3, 0.5, {0.1, 0}), Expr::parse("x1"), {128, 128, 16});
  INFO(sim.detail);
  CHECK(sim.max_rel_err < 1e-2);
  CHECK(sim.pass);
}

TEST_CASE("capacity invariance") {
  const Resolution res{96, 96, 16};
  const CheckReport constant = check_capacity_invariance(rescaled_identity("0.4"), annulus(), res);
  CHECK(constant.max_rel_err < 1e-12);
  const CheckReport sine = check_capacity_invariance(rescaled_identity("0.3*sin(x1)"), annulus(), res);
  CHECK(sine.pass);
  CHECK(sine.max_rel_err < 0.03);

  // The target grid spans the bounding box of the rotated square, so it is
  // coarser relative to the annulus; 256 nodes per side keep both biases small.
  const CheckReport rot = check_capacity_invariance(euclidean_similarity(1.0, 0.6, {0, 0}), annulus(), {256, 256, 8});
  INFO(rot.detail);
  CHECK(rot.max_rel_err < 0.01);
  CHECK(rot.pass);

  SolverConfig short_run;
  short_run.max_iter = 3;
  const CheckReport stalled = check_capacity_invariance(rescaled_identity("0.4"), annulus(), {32, 32, 8}, short_run);
  CHECK_FALSE(stalled.pass);
  CHECK(stalled.detail.find("did not converge") != std::string::npos);
}

TEST_CASE("image grid and region") {
  const ConformalMap cm = euclidean_similarity(2.0, 0.0, {1.0, 0.0});
  const Rect box = image_bounding_box(cm.f, cm.domain);
  CHECK(std::abs(box.x1min - -0.5) < 1e-12);
  CHECK(std::abs(box.x1max - 2.5) < 1e-12);
  CHECK(std::abs(box.x2min - -1.5) < 1e-12);
  CHECK(std::abs(box.x2max - 1.5) < 1e-12);
  const SphereBundleGrid g = target_grid(cm, {20, 20, 8});
  CHECK(g.nx() == 20);
  CHECK(count_nodes(image_region(cm, g)) == g.base_size());

  const ConformalMap rot = euclidean_similarity(1.0, kPi / 4, {0, 0});
  const SphereBundleGrid gr = target_grid(rot, {64, 64, 8});
  const double frac = static_cast<double>(count_nodes(image_region(rot, gr))) / static_cast<double>(gr.base_size());
  CHECK(std::abs(frac - 0.5) < 0.03);
}

TEST_CASE("report serialization") {
  std::vector<CheckReport> reps{{"a", 3, 0.125, 0.5, true, ""}, {"b", 1, 2.0, 1.0, false, "why"}};
  std::ostringstream csv, text;
  write_reports_csv(csv, reps);
  CHECK(csv.str() == "check,samples,max_rel_err,threshold,pass\na,3,0.125,0.5,true\nb,1,2,1,false\n");
  write_reports_text(text, reps);
  CHECK(text.str().find("PASS a") == 0);
  CHECK(text.str().find("FAIL b") != std::string::npos);
  CHECK(text.str().find("why") != std::string::npos);
}
