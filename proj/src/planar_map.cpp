#include "fincap/planar_map.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fincap/errors.hpp"

namespace fincap {

namespace {

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

PlanarMap PlanarMap::identity() { return PlanarMap(); }

PlanarMap PlanarMap::affine(const Eigen::Matrix2d& A, const Vec2& b) {
  if (!(std::abs(A.determinant()) > 1e-14)) throw DomainError("affine map is singular");
  PlanarMap f;
  f.kind_ = Kind::affine;
  f.A_ = A;
  f.b_ = b;
  return f;
}

PlanarMap PlanarMap::similarity(double scale, double angle, const Vec2& shift) {
  if (!(scale > 0.0)) throw ConfigError("similarity scale must be positive");
  Eigen::Matrix2d A;
  A << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return affine(scale * A, shift);
}

PlanarMap PlanarMap::power(double alpha, const Vec2& z0, const Vec2& c, const Vec2& w0) {
  if (!(alpha > 0.0) || !(alpha <= 2.0)) throw ConfigError("power exponent must lie in (0, 2]");
  if (!(std::hypot(c[0], c[1]) > 0.0)) throw ConfigError("power coefficient must be nonzero");
  PlanarMap f;
  f.kind_ = Kind::power;
  f.alpha_ = alpha;
  f.z0_ = z0;
  f.c_ = c;
  f.w0_ = w0;
  return f;
}

Eigen::Matrix2d PlanarMap::jacobian(const Vec2& x) const {
  Eigen::Matrix2d J;
  for (int col = 0; col < 2; ++col) {
    std::array<Dual1, 2> z{Dual1(x[0], col == 0 ? 1.0 : 0.0), Dual1(x[1], col == 1 ? 1.0 : 0.0)};
    auto w = apply<Dual1>(z);
    J(0, col) = w[0].d;
    J(1, col) = w[1].d;
  }
  return J;
}

Vec2 PlanarMap::inverse(const Vec2& w) const {
  switch (kind_) {
    case Kind::identity:
      return w;
    case Kind::affine: {
      Eigen::Vector2d z = A_.inverse() * Eigen::Vector2d(w[0] - b_[0], w[1] - b_[1]);
      return {z(0), z(1)};
    }
    case Kind::power: {
      // ((w - w0) / c)^(1/alpha), defined when the quotient's argument lies in (-alpha pi, alpha pi].
      const double c2 = c_[0] * c_[0] + c_[1] * c_[1];
      const double dr = w[0] - w0_[0];
      const double di = w[1] - w0_[1];
      const double qr = (dr * c_[0] + di * c_[1]) / c2;
      const double qi = (di * c_[0] - dr * c_[1]) / c2;
      const double mag = std::hypot(qr, qi);
      const double arg = std::atan2(qi, qr);
      if (mag == 0.0) throw DomainError("power map inverse is singular at its center");
      if (std::abs(arg) > alpha_ * std::numbers::pi) throw DomainError("point lies outside the power map image");
      const double rz = std::pow(mag, 1.0 / alpha_);
      const double az = arg / alpha_;
      return {z0_[0] + rz * std::cos(az), z0_[1] + rz * std::sin(az)};
    }
  }
  return w;
}

Expr PlanarMap::log_conformal_factor() const {
  switch (kind_) {
    case Kind::identity:
      return Expr::constant(0.0);
    case Kind::affine:
      return Expr::constant(0.5 * std::log(std::abs(A_.determinant())));
    case Kind::power: {
      const double k = std::log(alpha_ * std::hypot(c_[0], c_[1]));
      const std::string r2 = "((x1 - (" + number(z0_[0]) + "))^2 + (x2 - (" + number(z0_[1]) + "))^2)";
      return Expr::parse(number(k) + " + " + number(0.5 * (alpha_ - 1.0)) + "*log(" + r2 + ")");
    }
  }
  return Expr::constant(0.0);
}

std::string PlanarMap::describe() const {
  std::ostringstream os;
  os.precision(6);
  switch (kind_) {
    case Kind::identity:
      os << "identity";
      break;
    case Kind::affine:
      os << "affine A=[" << A_(0, 0) << "," << A_(0, 1) << ";" << A_(1, 0) << "," << A_(1, 1) << "] b=(" << b_[0] << ","
         << b_[1] << ")";
      break;
    case Kind::power:
      os << "power alpha=" << alpha_ << " z0=(" << z0_[0] << "," << z0_[1] << ") c=(" << c_[0] << "," << c_[1]
         << ") w0=(" << w0_[0] << "," << w0_[1] << ")";
      break;
  }
  return os.str();
}

}  // namespace fincap
