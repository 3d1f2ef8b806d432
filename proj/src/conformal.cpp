#include "fincap/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "fincap/errors.hpp"

namespace fincap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// |a - b| / max(|a|, |b|, floor); the floor absorbs rounding-level values of quantities that vanish.
double relative_difference(double a, double b) {
  constexpr double kFloor = 1e-14;
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kFloor});
}

double sigma_at(const ConformalMap& cm, const Vec2& x) { return cm.sigma(std::span<const double>(x)); }

struct Sampler {
  explicit Sampler(const Rect& r, std::uint64_t seed)
      : rng(seed), u1(r.x1min, r.x1max), u2(r.x2min, r.x2max), angle(0.0, kTwoPi) {}
  Vec2 point() {
    const double a = u1(rng);
    return {a, u2(rng)};
  }
  double theta() { return angle(rng); }
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> u1, u2, angle;
};

Vec2 pushforward(const PlanarMap& f, const Vec2& x, const Vec2& y) {
  const Eigen::Matrix2d J = f.jacobian(x);
  return {J(0, 0) * y[0] + J(0, 1) * y[1], J(1, 0) * y[0] + J(1, 1) * y[1]};
}

void finish(CheckReport& r) { r.pass = r.max_rel_err <= r.threshold && std::isfinite(r.max_rel_err); }

}  // namespace

MetricSpec rescale(const MetricSpec& m, const Expr& sigma) { return MetricSpec::conformal(m, sigma); }

double conformal_factor(const ConformalMap& cm, const Vec2& x) { return std::exp(2.0 * sigma_at(cm, x)); }

BundlePoint bundle_map(const ConformalMap& cm, const Vec2& x, double theta) {
  const Eigen::Matrix2d J = cm.f.jacobian(x);
  if (!(std::abs(J.determinant()) > 1e-300)) throw DomainError("f_* is singular at the sampled point");
  const Vec2 y = fiber_direction(theta);
  const double p0 = J(0, 0) * y[0] + J(0, 1) * y[1];
  const double p1 = J(1, 0) * y[0] + J(1, 1) * y[1];
  double t = std::atan2(p1, p0);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t -= kTwoPi;
  return {cm.f(x), t};
}

Eigen::Matrix3d bundle_map_jacobian(const ConformalMap& cm, const Vec2& x, double theta) {
  // Outer infinitesimal: chart direction a; inner: the curve parameter t of x + t y(theta).
  Eigen::Matrix3d Jh;
  for (int a = 0; a < 3; ++a) {
    const Dual2 X0{Dual1{x[0], 0.0}, Dual1{a == 0 ? 1.0 : 0.0, 0.0}};
    const Dual2 X1{Dual1{x[1], 0.0}, Dual1{a == 1 ? 1.0 : 0.0, 0.0}};
    const Dual2 Th{Dual1{theta, 0.0}, Dual1{a == 2 ? 1.0 : 0.0, 0.0}};
    const Dual2 T{Dual1{0.0, 1.0}, Dual1{0.0, 0.0}};
    const std::array<Dual2, 2> z{X0 + T * cos(Th), X1 + T * sin(Th)};
    const std::array<Dual2, 2> w = cm.f.apply<Dual2>(z);
    const double p0 = w[0].v.d, p1 = w[1].v.d;     // f_* y
    const double dp0 = w[0].d.d, dp1 = w[1].d.d;   // its chart derivative
    Jh(0, a) = w[0].d.v;
    Jh(1, a) = w[1].d.v;
    const double r2 = p0 * p0 + p1 * p1;
    if (!(r2 > 0.0)) throw DomainError("f_* is singular at the sampled point");
    Jh(2, a) = (p0 * dp1 - p1 * dp0) / r2;
  }
  return Jh;
}

CheckReport check_conformality(const ConformalMap& cm, std::size_t samples, std::uint64_t seed, double threshold) {
  CheckReport r{"conformality", samples, 0.0, threshold, false, {}};
  Sampler s(cm.domain, seed);
  for (std::size_t n = 0; n < samples; ++n) {
    const Vec2 x = s.point();
    const Vec2 y = fiber_direction(s.theta());
    const Vec2 fx = cm.f(x);
    const Vec2 fy = pushforward(cm.f, x, y);
    const double lhs = eval_F(cm.target, std::vector<double>(fx.begin(), fx.end()), std::vector<double>(fy.begin(), fy.end()));
    const double rhs = std::exp(sigma_at(cm, x)) * eval_F(cm.source, std::vector<double>(x.begin(), x.end()),
                                                          std::vector<double>(y.begin(), y.end()));
    r.max_rel_err = std::max(r.max_rel_err, relative_difference(lhs, rhs));
  }
  finish(r);
  return r;
}

CheckReport check_pullback_volume(const ConformalMap& cm, std::size_t samples, std::uint64_t seed, double threshold) {
  CheckReport r{"pullback_volume", samples, 0.0, threshold, false, {}};
  Sampler s(cm.domain, seed);
  for (std::size_t n = 0; n < samples; ++n) {
    const Vec2 x = s.point();
    const double theta = s.theta();
    const BundlePoint hp = bundle_map(cm, x, theta);
    const double det = std::abs(bundle_map_jacobian(cm, x, theta).determinant());
    const double lhs = volume_density(cm.target, hp.x, hp.theta) * det;
    const double rhs = conformal_factor(cm, x) * volume_density(cm.source, x, theta);
    r.max_rel_err = std::max(r.max_rel_err, relative_difference(lhs, rhs));
  }
  finish(r);
  return r;
}

CheckReport check_pullback_energy_density(const ConformalMap& cm, const Expr& u_target, std::size_t samples,
                                          std::uint64_t seed, double threshold) {
  CheckReport r{"pullback_energy_density", samples, 0.0, threshold, false, {}};
  Sampler s(cm.domain, seed);
  for (std::size_t n = 0; n < samples; ++n) {
    const Vec2 x = s.point();
    const double theta = s.theta();
    const BundlePoint hp = bundle_map(cm, x, theta);

    // d u' at f(x).
    double du[2];
    for (int a = 0; a < 2; ++a) {
      const std::array<Dual1, 2> w{Dual1{hp.x[0], a == 0 ? 1.0 : 0.0}, Dual1{hp.x[1], a == 1 ? 1.0 : 0.0}};
      du[a] = u_target.eval<Dual1>(std::span<const Dual1>(w)).d;
    }
    // d (u' o f) at x, through the map.
    double dv[2];
    for (int a = 0; a < 2; ++a) {
      const std::array<Dual1, 2> z{Dual1{x[0], a == 0 ? 1.0 : 0.0}, Dual1{x[1], a == 1 ? 1.0 : 0.0}};
      const std::array<Dual1, 2> w = cm.f.apply<Dual1>(z);
      dv[a] = u_target.eval<Dual1>(std::span<const Dual1>(w)).d;
    }
    const Vec2 yt = fiber_direction(hp.theta);
    const Vec2 ys = fiber_direction(theta);
    const TensorPoint tt = tensor_point(cm.target, std::span<const double>(hp.x), std::span<const double>(yt));
    const TensorPoint ts = tensor_point(cm.source, std::span<const double>(x), std::span<const double>(ys));
    const double lhs = inverse_quadratic({tt.g_inv(0, 0), tt.g_inv(0, 1), tt.g_inv(1, 1)}, du[0], du[1]);
    const double rhs = inverse_quadratic({ts.g_inv(0, 0), ts.g_inv(0, 1), ts.g_inv(1, 1)}, dv[0], dv[1]) /
                       conformal_factor(cm, x);
    r.max_rel_err = std::max(r.max_rel_err, relative_difference(lhs, rhs));
  }
  finish(r);
  return r;
}

Rect image_bounding_box(const PlanarMap& f, const Rect& d) {
  double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1, lo2 = lo1, hi2 = -lo1;
  auto add = [&](double a, double b) {
    const Vec2 w = f({a, b});
    lo1 = std::min(lo1, w[0]);
    hi1 = std::max(hi1, w[0]);
    lo2 = std::min(lo2, w[1]);
    hi2 = std::max(hi2, w[1]);
  };
  const int samples = 1024;
  for (int k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    const double a = d.x1min + t * d.width();
    const double b = d.x2min + t * d.height();
    add(a, d.x2min);
    add(a, d.x2max);
    add(d.x1min, b);
    add(d.x1max, b);
  }
  return Rect{lo1, hi1, lo2, hi2};
}

SphereBundleGrid target_grid(const ConformalMap& cm, const Resolution& res) {
  return SphereBundleGrid(image_bounding_box(cm.f, cm.domain), res.nx, res.ny, res.ntheta);
}

std::vector<char> image_region(const ConformalMap& cm, const SphereBundleGrid& target) {
  std::vector<char> mask(target.base_size(), 0);
  for (int i = 0; i < target.nx(); ++i)
    for (int j = 0; j < target.ny(); ++j) {
      try {
        if (cm.domain.contains(cm.f.inverse(target.node(i, j)))) mask[target.base_index(i, j)] = 1;
      } catch (const DomainError&) {
      }
    }
  return mask;
}

CheckReport check_energy_invariance(const ConformalMap& cm, const Expr& u_target, const Resolution& res,
                                    double threshold) {
  CheckReport r{"energy_invariance", 1, 0.0, threshold, false, {}};
  const SphereBundleGrid src(cm.domain, res.nx, res.ny, res.ntheta);
  const SphereBundleGrid tgt = target_grid(cm, res);
  auto eval_u = [&](const Vec2& p) { return u_target(std::span<const double>(p)); };
  const ScalarField v = ScalarField::sample(src, [&](const Vec2& p) { return eval_u(cm.f(p)); });
  const ScalarField u = ScalarField::sample(tgt, eval_u);
  const FiberCache src_cache(cm.source, src);
  const FiberCache tgt_cache(cm.target, tgt);
  const double source_energy = EnergyFunctional(src_cache).energy(v.values());
  const double target_energy = EnergyFunctional(tgt_cache, 2.0, image_region(cm, tgt)).energy(u.values());
  r.max_rel_err = relative_difference(source_energy, target_energy);
  std::ostringstream os;
  os.precision(12);
  os << "I(u o f, M)=" << source_energy << " I(u, M')=" << target_energy;
  r.detail = os.str();
  finish(r);
  return r;
}

CheckReport check_capacity_invariance(const ConformalMap& cm, const CondenserSpec& cond, const Resolution& res,
                                      const SolverConfig& cfg, double threshold) {
  CheckReport r{"capacity_invariance", 1, 0.0, threshold, false, {}};
  const SphereBundleGrid src(cm.domain, res.nx, res.ny, res.ntheta);
  const SphereBundleGrid tgt = target_grid(cm, res);
  const FiberCache src_cache(cm.source, src);
  const FiberCache tgt_cache(cm.target, tgt);
  const std::vector<char> region = image_region(cm, tgt);
  const CondenserSpec image{cond.c0.image_of(cm.f), cond.c1.image_of(cm.f)};
  const CapacityResult a = minimize(cond, src_cache, cfg);
  const CapacityResult b = minimize(image, tgt_cache, cfg, &region);
  if (a.infinite && b.infinite) {
    r.max_rel_err = 0.0;
  } else if (a.infinite || b.infinite) {
    r.max_rel_err = std::numeric_limits<double>::infinity();
  } else {
    r.max_rel_err = relative_difference(a.value, b.value);
  }
  std::ostringstream os;
  os.precision(12);
  os << "Cap_M=" << a.value << " Cap_M'=" << b.value;
  if (!a.converged || !b.converged) os << " (solver did not converge: source " << a.converged << ", target " << b.converged << ")";
  r.detail = os.str();
  finish(r);
  if (!a.converged || !b.converged) r.pass = false;
  return r;
}

void write_reports_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  const auto old = os.precision(17);
  os << "check,samples,max_rel_err,threshold,pass\n";
  for (const CheckReport& r : reports)
    os << r.name << ',' << r.samples << ',' << r.max_rel_err << ',' << r.threshold << ',' << (r.pass ? "true" : "false")
       << '\n';
  os.precision(old);
}

void write_reports_text(std::ostream& os, const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports) {
    os << (r.pass ? "PASS " : "FAIL ") << r.name << "  samples=" << r.samples << "  max_rel_err=" << r.max_rel_err
       << "  threshold=" << r.threshold;
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
  }
}

}  // namespace fincap
