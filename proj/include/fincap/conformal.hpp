#pragma once

// Conformal maps between Finsler planes, the induced sphere-bundle map, and
// numerical checks of the pull-back identities and of capacity invariance.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fincap/capacity.hpp"
#include "fincap/planar_map.hpp"

namespace fincap {

MetricSpec rescale(const MetricSpec& m, const Expr& sigma);

// f : (domain, source) -> (f(domain), target) with F'(f x, f_* y) = e^sigma F(x, y).
// The conformal factor is e^{2 sigma}; it is supplied, never reconstructed.
struct ConformalMap {
  PlanarMap f;
  Expr sigma;
  MetricSpec source;
  MetricSpec target;
  Rect domain;
};

double conformal_factor(const ConformalMap& cm, const Vec2& x);

struct BundlePoint {
  Vec2 x;
  double theta;
};

// h(x, [y(theta)]) = (f(x), [f_* y(theta)]) with theta' in [0, 2 pi).
BundlePoint bundle_map(const ConformalMap& cm, const Vec2& x, double theta);
// Jacobian of h in the charts (x1, x2, theta) -> (x1', x2', theta').
Eigen::Matrix3d bundle_map_jacobian(const ConformalMap& cm, const Vec2& x, double theta);

struct CheckReport {
  std::string name;
  std::size_t samples = 0;
  double max_rel_err = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

// Samples are uniform on the interior of cm.domain and the fiber, from a fixed seed.
CheckReport check_conformality(const ConformalMap& cm, std::size_t samples, std::uint64_t seed = 1,
                               double threshold = 1e-10);
// rho'(h) |det J_h| against lambda rho, lambda = e^{2 sigma}.
CheckReport check_pullback_volume(const ConformalMap& cm, std::size_t samples, std::uint64_t seed = 1,
                                  double threshold = 1e-6);
// |grad u'^V|^2 at h(x, theta) against lambda^{-1} |grad (u' o f)^V|^2 at (x, theta), exact derivatives.
CheckReport check_pullback_energy_density(const ConformalMap& cm, const Expr& u_target, std::size_t samples,
                                          std::uint64_t seed = 1, double threshold = 1e-8);

struct Resolution {
  int nx = 128;
  int ny = 128;
  int ntheta = 64;
};

// Bounding box of f(domain) from a dense sample of the domain boundary.
Rect image_bounding_box(const PlanarMap& f, const Rect& domain);
SphereBundleGrid target_grid(const ConformalMap& cm, const Resolution& res);
// Target nodes whose preimage lies in the source domain.
std::vector<char> image_region(const ConformalMap& cm, const SphereBundleGrid& target);

// I(u', M') on the image grid restricted to f(domain) against I(u' o f, M) on the source grid.
CheckReport check_energy_invariance(const ConformalMap& cm, const Expr& u_target, const Resolution& res,
                                    double threshold = 1e-2);
// Cap_M(C0, C1) against Cap_M'(f(C0), f(C1)).
CheckReport check_capacity_invariance(const ConformalMap& cm, const CondenserSpec& cond, const Resolution& res,
                                      const SolverConfig& cfg = {}, double threshold = 0.03);

void write_reports_csv(std::ostream& os, const std::vector<CheckReport>& reports);
void write_reports_text(std::ostream& os, const std::vector<CheckReport>& reports);

}  // namespace fincap
