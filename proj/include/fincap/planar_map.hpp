#pragma once

// Closed-form planar diffeomorphisms with exact derivatives and inverses.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "fincap/dual.hpp"
#include "fincap/expr.hpp"
#include "fincap/sphere_bundle.hpp"

namespace fincap {

class PlanarMap {
 public:
  enum class Kind { identity, affine, power };

  static PlanarMap identity();
  static PlanarMap affine(const Eigen::Matrix2d& A, const Vec2& b);
  // x -> scale * R(angle) x + shift.
  static PlanarMap similarity(double scale, double angle, const Vec2& shift);
  // z -> w0 + c (z - z0)^alpha on the principal branch, in complex notation.
  static PlanarMap power(double alpha, const Vec2& z0, const Vec2& c, const Vec2& w0);

  Kind kind() const { return kind_; }
  const Eigen::Matrix2d& linear() const { return A_; }
  const Vec2& offset() const { return b_; }
  double alpha() const { return alpha_; }
  const Vec2& z0() const { return z0_; }
  const Vec2& coefficient() const { return c_; }
  const Vec2& w0() const { return w0_; }

  template <class T>
  std::array<T, 2> apply(const std::array<T, 2>& x) const {
    switch (kind_) {
      case Kind::identity:
        return x;
      case Kind::affine:
        return {A_(0, 0) * x[0] + A_(0, 1) * x[1] + b_[0], A_(1, 0) * x[0] + A_(1, 1) * x[1] + b_[1]};
      case Kind::power: {
        using std::atan2;
        using std::cos;
        using std::exp;
        using std::log;
        using std::sin;
        T dx = x[0] - z0_[0];
        T dy = x[1] - z0_[1];
        T r2 = dx * dx + dy * dy;
        T mag = exp(0.5 * alpha_ * log(r2));
        T arg = alpha_ * atan2(dy, dx);
        T re = mag * cos(arg);
        T im = mag * sin(arg);
        return {w0_[0] + c_[0] * re - c_[1] * im, w0_[1] + c_[0] * im + c_[1] * re};
      }
    }
    return x;
  }

  Vec2 operator()(const Vec2& x) const { return apply<double>(x); }
  Eigen::Matrix2d jacobian(const Vec2& x) const;
  // Throws DomainError outside the image of the principal branch.
  Vec2 inverse(const Vec2& w) const;

  // log |det Df|^(1/2) as an expression, which is sigma when f is conformal
  // between Euclidean metrics.
  Expr log_conformal_factor() const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::identity;
  Eigen::Matrix2d A_ = Eigen::Matrix2d::Identity();
  Vec2 b_{0.0, 0.0};
  double alpha_ = 1.0;
  Vec2 z0_{0.0, 0.0};
  Vec2 c_{1.0, 0.0};
  Vec2 w0_{0.0, 0.0};
};

}  // namespace fincap
