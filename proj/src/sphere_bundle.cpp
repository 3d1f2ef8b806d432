#include "fincap/sphere_bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fincap/errors.hpp"
#include "fincap/parallel.hpp"

namespace fincap {

SphereBundleGrid::SphereBundleGrid(Rect base, int nx, int ny, int ntheta)
    : base_(base), nx_(nx), ny_(ny), ntheta_(ntheta) {
  if (nx < 3 || ny < 3) throw ConfigError("base grid needs at least 3 nodes per axis");
  if (ntheta < 8) throw ConfigError("fiber grid needs at least 8 angles");
  if (!(base.width() > 0.0) || !(base.height() > 0.0)) throw ConfigError("base rectangle must have positive extent");
}

double SphereBundleGrid::dtheta() const { return 2.0 * std::numbers::pi / ntheta_; }

double SphereBundleGrid::theta(int k) const { return 2.0 * std::numbers::pi * k / ntheta_; }

ScalarField::ScalarField(int nx, int ny, double fill)
    : nx_(nx),
      ny_(ny),
      values_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill),
      pinned_(values_.size(), 0) {}

ScalarField ScalarField::sample(const SphereBundleGrid& g, const std::function<double(const Vec2&)>& fn) {
  ScalarField u(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) u(i, j) = fn(g.node(i, j));
  return u;
}

void ScalarField::pin(int i, int j, double value) {
  values_[index(i, j)] = value;
  pinned_[index(i, j)] = 1;
}

void ScalarField::unpin_all() { std::fill(pinned_.begin(), pinned_.end(), 0); }

BundleField::BundleField(const SphereBundleGrid& g, double fill)
    : nx_(g.nx()), ny_(g.ny()), ntheta_(g.ntheta()), values_(g.size(), fill) {}

double BundleField::max_fiber_spread() const {
  double spread = 0.0;
  for (int i = 0; i < nx_; ++i)
    for (int j = 0; j < ny_; ++j) {
      auto first = values_.begin() + static_cast<std::ptrdiff_t>(index(i, j, 0));
      auto [lo, hi] = std::minmax_element(first, first + ntheta_);
      spread = std::max(spread, *hi - *lo);
    }
  return spread;
}

AxisStencil::AxisStencil(int n, double h) : n_(n) {
  if (n < 3) throw ConfigError("stencil needs at least 3 nodes");
  const double c = 1.0 / (2.0 * h);
  for (int p = 0; p < n; ++p) {
    row_start_.push_back(static_cast<int>(rows_.size()));
    if (p == 0) {
      rows_.push_back({0, -3.0 * c});
      rows_.push_back({1, 4.0 * c});
      rows_.push_back({2, -1.0 * c});
    } else if (p == n - 1) {
      rows_.push_back({n - 3, 1.0 * c});
      rows_.push_back({n - 2, -4.0 * c});
      rows_.push_back({n - 1, 3.0 * c});
    } else {
      rows_.push_back({p - 1, -c});
      rows_.push_back({p + 1, c});
    }
  }
  row_start_.push_back(static_cast<int>(rows_.size()));

  std::vector<std::vector<Entry>> by_column(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p)
    for (const Entry& e : row(p)) by_column[static_cast<std::size_t>(e.index)].push_back({p, e.weight});
  for (const auto& col : by_column) {
    col_start_.push_back(static_cast<int>(cols_.size()));
    cols_.insert(cols_.end(), col.begin(), col.end());
  }
  col_start_.push_back(static_cast<int>(cols_.size()));
}

std::span<const AxisStencil::Entry> AxisStencil::row(int p) const {
  return {rows_.data() + row_start_[static_cast<std::size_t>(p)],
          static_cast<std::size_t>(row_start_[static_cast<std::size_t>(p) + 1] - row_start_[static_cast<std::size_t>(p)])};
}

std::span<const AxisStencil::Entry> AxisStencil::column(int q) const {
  return {cols_.data() + col_start_[static_cast<std::size_t>(q)],
          static_cast<std::size_t>(col_start_[static_cast<std::size_t>(q) + 1] - col_start_[static_cast<std::size_t>(q)])};
}

FiberCache::FiberCache(const MetricSpec& m, const SphereBundleGrid& grid)
    : grid_(grid), density_(grid.size()), g_inv_(grid.size()) {
  if (m.dim() != 2) throw ConfigError("sphere bundle grids are two-dimensional");
  const int nt = grid.ntheta();
  parallel_for(grid.base_size(), [&](std::size_t b) {
    const int i = static_cast<int>(b / static_cast<std::size_t>(grid.ny()));
    const int j = static_cast<int>(b % static_cast<std::size_t>(grid.ny()));
    const Vec2 x = grid.node(i, j);
    for (int k = 0; k < nt; ++k) {
      const Vec2 y = fiber_direction(grid.theta(k));
      TensorPoint tp = tensor_point(m, std::span<const double>(x), std::span<const double>(y));
      const std::size_t node = grid.node_index(i, j, k);
      density_[node] = volume_density(tp);
      g_inv_[node] = {tp.g_inv(0, 0), tp.g_inv(0, 1), tp.g_inv(1, 1)};
    }
  });
}

BundleField vertical_lift(const ScalarField& u, const SphereBundleGrid& grid) {
  BundleField f(grid);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      for (int k = 0; k < grid.ntheta(); ++k) f(i, j, k) = u(i, j);
  return f;
}

Vector hilbert_form(const TensorPoint& tp) { return tp.l_down; }

Matrix d_omega_matrix(const TensorPoint& tp) { return tp.g - tp.l_down * tp.l_down.transpose(); }

Eigen::Vector3d hilbert_form_chart(const TensorPoint& tp) {
  if (tp.dim() != 2) throw ConfigError("chart forms are defined for n = 2");
  return {tp.l_down(0), tp.l_down(1), 0.0};
}

Eigen::Matrix3d d_omega_chart(const TensorPoint& tp) {
  if (tp.dim() != 2) throw ConfigError("chart forms are defined for n = 2");
  const Matrix A = d_omega_matrix(tp);
  // d y^j / d theta along the fiber circle through the representative y.
  const double tangent[2] = {-tp.y(1), tp.y(0)};
  // Chart components of delta y^j / F.
  double e[2][3];
  for (int j = 0; j < 2; ++j) {
    e[j][0] = tp.nonlin_scaled(j, 0);
    e[j][1] = tp.nonlin_scaled(j, 1);
    e[j][2] = tangent[j] / tp.F;
  }
  // d omega = -A_ij dx^i ^ (delta y^j / F)
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b) {
      double acc = 0.0;
      for (int j = 0; j < 2; ++j) acc -= A(a, j) * e[j][b];
      M(a, b) = acc;
    }
  return M - M.transpose();
}

double volume_density(const TensorPoint& tp) {
  const Eigen::Vector3d w = hilbert_form_chart(tp);
  const Eigen::Matrix3d W = d_omega_chart(tp);
  const double wedge = w(0) * W(1, 2) - w(1) * W(0, 2) + w(2) * W(0, 1);
  // (-1)^N / (n-1)! with N = n(n-1)/2 = 1.
  const double rho = -wedge;
  if (!(rho > 0.0)) {
    std::ostringstream os;
    os << "volume density " << rho << " is not positive at x=(" << tp.x(0) << "," << tp.x(1) << "), y=("
       << tp.y(0) << "," << tp.y(1) << ")";
    throw OrientationError(os.str());
  }
  return rho;
}

double volume_density(const MetricSpec& m, const Vec2& x, double theta) {
  const Vec2 y = fiber_direction(theta);
  return volume_density(tensor_point(m, std::span<const double>(x), std::span<const double>(y)));
}

SasakiBlocks sasaki_metric(const TensorPoint& tp) { return {tp.g, tp.g}; }

Eigen::Matrix<double, 3, 4> chart_frame(const TensorPoint& tp) {
  if (tp.dim() != 2) throw ConfigError("chart forms are defined for n = 2");
  // g-orthogonal projection away from the radial direction l.
  auto project = [&](const Eigen::Vector2d& v) -> Eigen::Vector2d {
    return v - Eigen::Vector2d(tp.l_up(0), tp.l_up(1)) * (tp.l_down(0) * v(0) + tp.l_down(1) * v(1));
  };
  Eigen::Matrix<double, 3, 4> J = Eigen::Matrix<double, 3, 4>::Zero();
  for (int i = 0; i < 2; ++i) {
    J(i, i) = 1.0;
    Eigen::Vector2d vert = project(Eigen::Vector2d(tp.nonlin_scaled(0, i), tp.nonlin_scaled(1, i)));
    J(i, 2) = vert(0);
    J(i, 3) = vert(1);
  }
  Eigen::Vector2d vert = project(Eigen::Vector2d(-tp.y(1), tp.y(0)) / tp.F);
  J(2, 2) = vert(0);
  J(2, 3) = vert(1);
  return J;
}

Eigen::Matrix3d sasaki_chart_metric(const TensorPoint& tp) {
  Eigen::Matrix4d G = Eigen::Matrix4d::Zero();
  G.block<2, 2>(0, 0) = tp.g;
  G.block<2, 2>(2, 2) = tp.g;
  const auto J = chart_frame(tp);
  return J * G * J.transpose();
}

namespace {

struct Partials {
  std::vector<double> d1;
  std::vector<double> d2;
};

Partials base_partials(const ScalarField& u, const SphereBundleGrid& grid) {
  AxisStencil sx(grid.nx(), grid.dx1());
  AxisStencil sy(grid.ny(), grid.dx2());
  Partials p{std::vector<double>(grid.base_size()), std::vector<double>(grid.base_size())};
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const std::size_t b = grid.base_index(i, j);
      p.d1[b] = sx.apply(i, [&](int q) { return u(q, j); });
      p.d2[b] = sy.apply(j, [&](int q) { return u(i, q); });
    }
  return p;
}

void check_shape(const SphereBundleGrid& grid, int nx, int ny) {
  if (nx != grid.nx() || ny != grid.ny()) throw ConfigError("field does not match grid resolution");
}

}  // namespace

BundleField gradient_norm_lift(const ScalarField& u, const FiberCache& cache) {
  const SphereBundleGrid& grid = cache.grid();
  check_shape(grid, u.nx(), u.ny());
  const Partials p = base_partials(u, grid);
  BundleField out(grid);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const std::size_t b = grid.base_index(i, j);
      for (int k = 0; k < grid.ntheta(); ++k) {
        const double q = inverse_quadratic(cache.g_inv(grid.node_index(i, j, k)), p.d1[b], p.d2[b]);
        out(i, j, k) = std::sqrt(q);
      }
    }
  return out;
}

BundleField gradient_norm_lift(const ScalarField& u, const MetricSpec& m, const SphereBundleGrid& grid) {
  return gradient_norm_lift(u, FiberCache(m, grid));
}

BundleField gradient_norm_general(const BundleField& f, const MetricSpec& m, const SphereBundleGrid& grid) {
  check_shape(grid, f.nx(), f.ny());
  if (f.ntheta() != grid.ntheta()) throw ConfigError("field does not match fiber resolution");
  AxisStencil sx(grid.nx(), grid.dx1());
  AxisStencil sy(grid.ny(), grid.dx2());
  const int nt = grid.ntheta();
  const double inv_2dt = 1.0 / (2.0 * grid.dtheta());
  BundleField out(grid);
  parallel_for(grid.base_size(), [&](std::size_t b) {
    const int i = static_cast<int>(b / static_cast<std::size_t>(grid.ny()));
    const int j = static_cast<int>(b % static_cast<std::size_t>(grid.ny()));
    const Vec2 x = grid.node(i, j);
    for (int k = 0; k < nt; ++k) {
      const double theta = grid.theta(k);
      const Vec2 y = fiber_direction(theta);
      const Vec2 t = fiber_tangent(theta);
      const TensorPoint tp = tensor_point(m, std::span<const double>(x), std::span<const double>(y));
      const double fx1 = sx.apply(i, [&](int q) { return f(q, j, k); });
      const double fx2 = sy.apply(j, [&](int q) { return f(i, q, k); });
      const double ft = (f(i, j, (k + 1) % nt) - f(i, j, (k + nt - 1) % nt)) * inv_2dt;
      // 0-homogeneous extension in y: df/dy^j = f_theta * dtheta/dy^j = f_theta * t_j on the unit circle.
      const double fy1 = ft * t[0];
      const double fy2 = ft * t[1];
      const double h1 = fx1 - (tp.nonlin(0, 0) * fy1 + tp.nonlin(1, 0) * fy2);
      const double h2 = fx2 - (tp.nonlin(0, 1) * fy1 + tp.nonlin(1, 1) * fy2);
      const std::array<double, 3> gi{tp.g_inv(0, 0), tp.g_inv(0, 1), tp.g_inv(1, 1)};
      const double horizontal = inverse_quadratic(gi, h1, h2);
      const double vertical = tp.F * tp.F * inverse_quadratic(gi, fy1, fy2);
      out(i, j, k) = std::sqrt(horizontal + vertical);
    }
  });
  return out;
}

double integrate(const BundleField& f, const FiberCache& cache, const std::vector<char>* base_mask) {
  const SphereBundleGrid& grid = cache.grid();
  if (f.values().size() != grid.size()) throw ConfigError("field does not match grid");
  double acc = 0.0;
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      if (base_mask && !(*base_mask)[grid.base_index(i, j)]) continue;
      for (int k = 0; k < grid.ntheta(); ++k) acc += f(i, j, k) * cache.density(grid.node_index(i, j, k));
    }
  return acc * grid.cell_weight();
}

double integrate(const BundleField& f, const MetricSpec& m, const SphereBundleGrid& grid) {
  return integrate(f, FiberCache(m, grid));
}

void write_bundle_csv(std::ostream& os, const BundleField& f, const SphereBundleGrid& grid) {
  const auto old_precision = os.precision(17);
  os << "i,j,k,x1,x2,theta,value\n";
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      for (int k = 0; k < grid.ntheta(); ++k)
        os << i << ',' << j << ',' << k << ',' << grid.x1(i) << ',' << grid.x2(j) << ',' << grid.theta(k) << ','
           << f(i, j, k) << '\n';
  os.precision(old_precision);
}

}  // namespace fincap
