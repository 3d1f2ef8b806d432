#pragma once

// Finsler structures and the pointwise tensors obtained from F by
// differentiation in position x and direction y.
//
// All derivatives are taken by nested forward-mode differentiation of
// E(x, y) = F(x, y)^2 / 2, so they are exact to rounding.

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fincap/expr.hpp"

namespace fincap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense n x n x n array, index order (i, j, k).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  double max_abs() const;

 private:
  std::size_t index(int i, int j, int k) const { return static_cast<std::size_t>((i * n_ + j) * n_ + k); }
  int n_ = 0;
  std::vector<double> data_;
};

class MetricSpec {
 public:
  enum class Kind { euclidean, riemannian, randers, conformal };

  static MetricSpec euclidean(int dim);
  // `a` is row-major n x n; only the upper triangle is read.
  static MetricSpec riemannian(int dim, std::vector<Expr> a);
  static MetricSpec randers(int dim, std::vector<Expr> a, std::vector<Expr> b);
  // e^{sigma(x)} F. Wrapping a conformal spec folds the exponents into one sum.
  static MetricSpec conformal(const MetricSpec& inner, const Expr& sigma);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const MetricSpec* inner() const { return inner_.get(); }
  const Expr& sigma() const { return sigma_; }
  const std::vector<Expr>& a() const { return a_; }
  const std::vector<Expr>& b() const { return b_; }

  // Throws InvalidMetricError when a_ij(x) is not positive definite or when
  // the Randers a-norm of b reaches 1 at x.
  void validate_at(std::span<const double> x) const;

  template <class T>
  T finsler(std::span<const T> x, std::span<const T> y) const {
    using std::exp;
    using std::sqrt;
    switch (kind_) {
      case Kind::euclidean: {
        T s(0.0);
        for (int i = 0; i < dim_; ++i) s += y[i] * y[i];
        return sqrt(s);
      }
      case Kind::riemannian:
        return sqrt(quadratic(x, y));
      case Kind::randers: {
        T f = sqrt(quadratic(x, y));
        for (int i = 0; i < dim_; ++i) f += b_[i].eval(x) * y[i];
        return f;
      }
      case Kind::conformal:
        return exp(sigma_.eval(x)) * inner_->finsler(x, y);
    }
    return T(0.0);
  }

  // F^2 / 2, written per family so that quadratic families stay polynomial in y.
  template <class T>
  T half_square(std::span<const T> x, std::span<const T> y) const {
    using std::exp;
    switch (kind_) {
      case Kind::euclidean: {
        T s(0.0);
        for (int i = 0; i < dim_; ++i) s += y[i] * y[i];
        return 0.5 * s;
      }
      case Kind::riemannian:
        return 0.5 * quadratic(x, y);
      case Kind::randers: {
        T f = finsler(x, y);
        return 0.5 * (f * f);
      }
      case Kind::conformal:
        return exp(2.0 * sigma_.eval(x)) * inner_->half_square(x, y);
    }
    return T(0.0);
  }

 private:
  MetricSpec() = default;

  template <class T>
  T quadratic(std::span<const T> x, std::span<const T> y) const {
    T q(0.0);
    for (int i = 0; i < dim_; ++i) {
      q += a_[i * dim_ + i].eval(x) * (y[i] * y[i]);
      for (int j = i + 1; j < dim_; ++j) q += 2.0 * a_[i * dim_ + j].eval(x) * (y[i] * y[j]);
    }
    return q;
  }

  Kind kind_ = Kind::euclidean;
  int dim_ = 2;
  std::vector<Expr> a_;
  std::vector<Expr> b_;
  std::shared_ptr<const MetricSpec> inner_;
  Expr sigma_;
};

// Everything the sphere bundle needs at one line element (x, [y]).
struct TensorPoint {
  Vector x;
  Vector y;
  double F = 0.0;
  Vector l_up;    // y / F
  Vector l_down;  // g_ij l^j
  Matrix g;
  Matrix g_inv;
  Tensor3 cartan;  // C_ijk = 1/2 dg_ij/dy^k
  Tensor3 gamma;   // formal Christoffel symbols, upper index first
  Matrix nonlin;         // N^i_j
  Matrix nonlin_scaled;  // N^i_j / F, 0-homogeneous in y

  int dim() const { return static_cast<int>(x.size()); }
};

double eval_F(const MetricSpec& m, std::span<const double> x, std::span<const double> y);
Matrix fundamental_tensor(const MetricSpec& m, std::span<const double> x, std::span<const double> y);
Tensor3 cartan_tensor(const MetricSpec& m, std::span<const double> x, std::span<const double> y);
Tensor3 formal_christoffel(const MetricSpec& m, std::span<const double> x, std::span<const double> y);

struct NonlinearConnection {
  Matrix N;
  Matrix N_scaled;
};
NonlinearConnection nonlinear_connection(const MetricSpec& m, std::span<const double> x,
                                         std::span<const double> y);

TensorPoint tensor_point(const MetricSpec& m, std::span<const double> x, std::span<const double> y);

// Convenience overloads for brace-initialized points.
inline double eval_F(const MetricSpec& m, const std::vector<double>& x, const std::vector<double>& y) {
  return eval_F(m, std::span<const double>(x), std::span<const double>(y));
}
inline TensorPoint tensor_point(const MetricSpec& m, const std::vector<double>& x,
                                const std::vector<double>& y) {
  return tensor_point(m, std::span<const double>(x), std::span<const double>(y));
}

inline Matrix fundamental_tensor(const MetricSpec& m, const std::vector<double>& x,
                                 const std::vector<double>& y) {
  return fundamental_tensor(m, std::span<const double>(x), std::span<const double>(y));
}
inline Tensor3 cartan_tensor(const MetricSpec& m, const std::vector<double>& x,
                             const std::vector<double>& y) {
  return cartan_tensor(m, std::span<const double>(x), std::span<const double>(y));
}
inline Tensor3 formal_christoffel(const MetricSpec& m, const std::vector<double>& x,
                                  const std::vector<double>& y) {
  return formal_christoffel(m, std::span<const double>(x), std::span<const double>(y));
}
inline NonlinearConnection nonlinear_connection(const MetricSpec& m, const std::vector<double>& x,
                                                const std::vector<double>& y) {
  return nonlinear_connection(m, std::span<const double>(x), std::span<const double>(y));
}

}  // namespace fincap
