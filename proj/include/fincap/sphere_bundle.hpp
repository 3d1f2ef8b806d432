#pragma once

// Discretized sphere bundle SM for n = 2: base rectangle x fiber circle,
// with fiber rays represented by y(theta) = (cos theta, sin theta).
// Chart coordinates on SM are (x1, x2, theta), oriented by dx1^dx2^dtheta.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "fincap/metric.hpp"

namespace fincap {

using Vec2 = std::array<double, 2>;

struct Rect {
  double x1min = 0.0;
  double x1max = 1.0;
  double x2min = 0.0;
  double x2max = 1.0;

  double width() const { return x1max - x1min; }
  double height() const { return x2max - x2min; }
  bool contains(const Vec2& p) const { return p[0] >= x1min && p[0] <= x1max && p[1] >= x2min && p[1] <= x2max; }
};

inline Vec2 fiber_direction(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline Vec2 fiber_tangent(double theta) { return {-std::sin(theta), std::cos(theta)}; }

// Tensor-product grid. Base nodes sit at cell centers of an nx x ny
// partition of the rectangle; fiber nodes at theta_k = 2 pi k / ntheta.
class SphereBundleGrid {
 public:
  SphereBundleGrid(Rect base, int nx, int ny, int ntheta);

  const Rect& base() const { return base_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ntheta() const { return ntheta_; }
  double dx1() const { return base_.width() / nx_; }
  double dx2() const { return base_.height() / ny_; }
  double dtheta() const;

  double x1(int i) const { return base_.x1min + (i + 0.5) * dx1(); }
  double x2(int j) const { return base_.x2min + (j + 0.5) * dx2(); }
  Vec2 node(int i, int j) const { return {x1(i), x2(j)}; }
  double theta(int k) const;

  std::size_t base_size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
  std::size_t size() const { return base_size() * static_cast<std::size_t>(ntheta_); }
  std::size_t base_index(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(j); }
  std::size_t node_index(int i, int j, int k) const { return base_index(i, j) * static_cast<std::size_t>(ntheta_) + static_cast<std::size_t>(k); }

  double base_weight() const { return dx1() * dx2(); }
  double cell_weight() const { return dx1() * dx2() * dtheta(); }

 private:
  Rect base_;
  int nx_;
  int ny_;
  int ntheta_;
};

// Base function sampled on base nodes, with an optional pin per node.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int nx, int ny, double fill = 0.0);
  explicit ScalarField(const SphereBundleGrid& g, double fill = 0.0) : ScalarField(g.nx(), g.ny(), fill) {}

  static ScalarField sample(const SphereBundleGrid& g, const std::function<double(const Vec2&)>& fn);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }
  bool pinned(int i, int j) const { return pinned_[index(i, j)] != 0; }
  void pin(int i, int j, double value);
  void unpin_all();

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<char>& pin_mask() const { return pinned_; }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(j); }
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> values_;
  std::vector<char> pinned_;
};

// Scalar per SM node (i, j, k).
class BundleField {
 public:
  BundleField() = default;
  explicit BundleField(const SphereBundleGrid& g, double fill = 0.0);

  double& operator()(int i, int j, int k) { return values_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return values_[index(i, j, k)]; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ntheta() const { return ntheta_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double max_fiber_spread() const;

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(j)) * static_cast<std::size_t>(ntheta_) + static_cast<std::size_t>(k);
  }
  int nx_ = 0;
  int ny_ = 0;
  int ntheta_ = 0;
  std::vector<double> values_;
};

// First-derivative weights along one axis: central inside, second-order
// one-sided in the first and last rows.
class AxisStencil {
 public:
  struct Entry {
    int index;
    double weight;
  };

  AxisStencil(int n, double h);

  int size() const { return n_; }
  std::span<const Entry> row(int p) const;     // entries used by the derivative at p
  std::span<const Entry> column(int q) const;  // rows p that read value q, with their weights

  template <class Get>
  double apply(int p, Get&& value_at) const {
    double acc = 0.0;
    for (const Entry& e : row(p)) acc += e.weight * value_at(e.index);
    return acc;
  }

 private:
  int n_;
  std::vector<Entry> rows_;
  std::vector<int> row_start_;
  std::vector<Entry> cols_;
  std::vector<int> col_start_;
};

// Per-node geometry needed by integrals: chart volume density and g^{ij}.
class FiberCache {
 public:
  FiberCache(const MetricSpec& m, const SphereBundleGrid& grid);

  const SphereBundleGrid& grid() const { return grid_; }
  double density(std::size_t node) const { return density_[node]; }
  const std::array<double, 3>& g_inv(std::size_t node) const { return g_inv_[node]; }

 private:
  SphereBundleGrid grid_;
  std::vector<double> density_;
  std::vector<std::array<double, 3>> g_inv_;  // (g^11, g^12, g^22)
};

inline double inverse_quadratic(const std::array<double, 3>& gi, double a, double b) {
  return gi[0] * a * a + 2.0 * gi[1] * a * b + gi[2] * b * b;
}

BundleField vertical_lift(const ScalarField& u, const SphereBundleGrid& grid);

Vector hilbert_form(const TensorPoint& tp);
Matrix d_omega_matrix(const TensorPoint& tp);

// Hilbert form and its exterior derivative on the chart (x1, x2, theta).
// The 2-form is returned as the antisymmetric coefficient matrix W with
// d omega = sum_{a<b} W_ab dz^a ^ dz^b, assembled from (g_ij - l_i l_j) and
// the expansion of delta y^j / F on (dx1, dx2, dtheta).
Eigen::Vector3d hilbert_form_chart(const TensorPoint& tp);
Eigen::Matrix3d d_omega_chart(const TensorPoint& tp);

// Coefficient of dx1^dx2^dtheta in (-1)^N/(n-1)! omega ^ (d omega)^{n-1}.
// Throws OrientationError when it is not strictly positive.
double volume_density(const TensorPoint& tp);
double volume_density(const MetricSpec& m, const Vec2& x, double theta);

struct SasakiBlocks {
  Matrix horizontal;  // on delta/delta x^i
  Matrix vertical;    // on F d/dy^i
};
SasakiBlocks sasaki_metric(const TensorPoint& tp);

// Rows: images of d/dx1, d/dx2, d/dtheta of the chart, written in the
// adapted frame {delta/delta x^1, delta/delta x^2, F d/dy^1, F d/dy^2} at the
// unit representative y / F.
Eigen::Matrix<double, 3, 4> chart_frame(const TensorPoint& tp);
Eigen::Matrix3d sasaki_chart_metric(const TensorPoint& tp);

BundleField gradient_norm_lift(const ScalarField& u, const FiberCache& cache);
BundleField gradient_norm_lift(const ScalarField& u, const MetricSpec& m, const SphereBundleGrid& grid);
BundleField gradient_norm_general(const BundleField& f, const MetricSpec& m, const SphereBundleGrid& grid);

// Midpoint sum of f * density * cell weight in lexicographic (i, j, k) order.
// `base_mask`, when given, restricts the sum to base nodes with a nonzero entry.
double integrate(const BundleField& f, const FiberCache& cache, const std::vector<char>* base_mask = nullptr);
double integrate(const BundleField& f, const MetricSpec& m, const SphereBundleGrid& grid);

void write_bundle_csv(std::ostream& os, const BundleField& f, const SphereBundleGrid& grid);

}  // namespace fincap
