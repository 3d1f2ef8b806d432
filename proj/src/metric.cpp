#include "fincap/metric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fincap/errors.hpp"

namespace fincap {

namespace {

std::string format_point(std::span<const double> p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

void check_direction(std::span<const double> y) {
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }))
    throw DomainError("direction y must be nonzero");
}

void check_exprs(const std::vector<Expr>& exprs, int dim, const char* what) {
  for (const Expr& e : exprs)
    if (e.max_variable() >= dim)
      throw ConfigError(std::string(what) + " coefficient '" + e.text() + "' uses a variable beyond x" +
                        std::to_string(dim));
}

Matrix coefficient_matrix(const std::vector<Expr>& a, int n, std::span<const double> x) {
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out(i, j) = out(j, i) = a[static_cast<std::size_t>(i * n + j)](x);
  return out;
}

// Hessian in y together with the third derivatives dg_ij/dy^k (k >= j) and
// dg_ij/dx^k, from one triple-nested dual evaluation per (i <= j, k).
struct ThirdOrder {
  Matrix g;
  Tensor3 dg_dy;  // (i, j, k) = d g_ij / d y^k, only i <= j <= k populated
  Tensor3 dg_dx;  // (i, j, k) = d g_ij / d x^k, symmetric in (i, j)
};

ThirdOrder third_order(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  const int n = m.dim();
  ThirdOrder out{Matrix(n, n), Tensor3(n), Tensor3(n)};
  std::vector<Dual3> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      bool have_g = false;
      for (int c = 0; c < 2 * n; ++c) {
        if (c >= n && c - n < j) continue;
        for (int p = 0; p < n; ++p) {
          xs[p] = seed3(x[p], false, false, c == p);
          ys[p] = seed3(y[p], p == i, p == j, c == n + p);
        }
        Dual3 r = m.half_square<Dual3>(xs, ys);
        if (!have_g) {
          out.g(i, j) = out.g(j, i) = r.d.d.v;
          have_g = true;
        }
        if (c < n) {
          out.dg_dx(i, j, c) = out.dg_dx(j, i, c) = r.d.d.d;
        } else {
          out.dg_dy(i, j, c - n) = r.d.d.d;
        }
      }
    }
  }
  return out;
}

Matrix inverse_spd(const Matrix& g, std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(g.rows());
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite())
    throw InvalidMetricError("fundamental tensor is not positive definite at x=" + format_point(x) +
                             ", y=" + format_point(y));
  if (n == 2) {
    double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    Matrix inv(2, 2);
    inv(0, 0) = g(1, 1) / det;
    inv(1, 1) = g(0, 0) / det;
    inv(0, 1) = inv(1, 0) = -g(0, 1) / det;
    return inv;
  }
  Matrix inv = llt.solve(Matrix::Identity(n, n));
  return 0.5 * (inv + inv.transpose());
}

double checked_F(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  if (static_cast<int>(x.size()) != m.dim() || static_cast<int>(y.size()) != m.dim())
    throw DomainError("point and direction must have dimension " + std::to_string(m.dim()));
  check_direction(y);
  m.validate_at(x);
  double F = m.finsler<double>(x, y);
  if (!(F > 0.0) || !std::isfinite(F))
    throw InvalidMetricError("F is not positive at x=" + format_point(x) + ", y=" + format_point(y));
  return F;
}

}  // namespace

double Tensor3::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

MetricSpec MetricSpec::euclidean(int dim) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  MetricSpec m;
  m.kind_ = Kind::euclidean;
  m.dim_ = dim;
  return m;
}

MetricSpec MetricSpec::riemannian(int dim, std::vector<Expr> a) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  if (static_cast<int>(a.size()) != dim * dim) throw ConfigError("riemannian metric needs n*n coefficients");
  check_exprs(a, dim, "a_ij");
  MetricSpec m;
  m.kind_ = Kind::riemannian;
  m.dim_ = dim;
  m.a_ = std::move(a);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j) m.a_[static_cast<std::size_t>(i * dim + j)] = m.a_[static_cast<std::size_t>(j * dim + i)];
  return m;
}

MetricSpec MetricSpec::randers(int dim, std::vector<Expr> a, std::vector<Expr> b) {
  MetricSpec m = riemannian(dim, std::move(a));
  if (static_cast<int>(b.size()) != dim) throw ConfigError("randers metric needs n covector coefficients");
  check_exprs(b, dim, "b_i");
  m.kind_ = Kind::randers;
  m.b_ = std::move(b);
  return m;
}

MetricSpec MetricSpec::conformal(const MetricSpec& inner, const Expr& sigma) {
  check_exprs({sigma}, inner.dim(), "sigma");
  MetricSpec m;
  m.kind_ = Kind::conformal;
  m.dim_ = inner.dim_;
  if (inner.kind_ == Kind::conformal) {
    m.inner_ = inner.inner_;
    m.sigma_ = inner.sigma_ + sigma;
  } else {
    m.inner_ = std::make_shared<const MetricSpec>(inner);
    m.sigma_ = sigma;
  }
  return m;
}

void MetricSpec::validate_at(std::span<const double> x) const {
  switch (kind_) {
    case Kind::euclidean:
      return;
    case Kind::conformal: {
      double s = sigma_(x);
      if (!std::isfinite(s)) throw InvalidMetricError("conformal exponent sigma is not finite at x=" + format_point(x));
      inner_->validate_at(x);
      return;
    }
    case Kind::riemannian:
    case Kind::randers: {
      Matrix a = coefficient_matrix(a_, dim_, x);
      Eigen::LLT<Matrix> llt(a);
      if (!a.allFinite() || llt.info() != Eigen::Success)
        throw InvalidMetricError("a_ij(x) is not symmetric positive definite at x=" + format_point(x));
      if (kind_ == Kind::randers) {
        Vector b(dim_);
        for (int i = 0; i < dim_; ++i) b(i) = b_[static_cast<std::size_t>(i)](x);
        double norm2 = b.dot(llt.solve(b));
        if (!(norm2 < 1.0))
          throw InvalidMetricError("Randers metric requires a-norm of b < 1, got " +
                                   std::to_string(std::sqrt(norm2)) + " at x=" + format_point(x));
      }
      return;
    }
  }
}

double eval_F(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  return checked_F(m, x, y);
}

Matrix fundamental_tensor(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  checked_F(m, x, y);
  const int n = m.dim();
  Matrix g(n, n);
  std::vector<Dual2> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (int p = 0; p < n; ++p) {
        xs[p] = seed2(x[p], false, false);
        ys[p] = seed2(y[p], p == i, p == j);
      }
      Dual2 r = m.half_square<Dual2>(xs, ys);
      g(i, j) = g(j, i) = r.d.d;
    }
  }
  inverse_spd(g, x, y);
  return g;
}

Tensor3 cartan_tensor(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  return tensor_point(m, x, y).cartan;
}

Tensor3 formal_christoffel(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  return tensor_point(m, x, y).gamma;
}

NonlinearConnection nonlinear_connection(const MetricSpec& m, std::span<const double> x,
                                         std::span<const double> y) {
  TensorPoint tp = tensor_point(m, x, y);
  return {std::move(tp.nonlin), std::move(tp.nonlin_scaled)};
}

TensorPoint tensor_point(const MetricSpec& m, std::span<const double> x, std::span<const double> y) {
  const double F = checked_F(m, x, y);
  const int n = m.dim();
  ThirdOrder d = third_order(m, x, y);

  TensorPoint tp;
  tp.x = Eigen::Map<const Vector>(x.data(), n);
  tp.y = Eigen::Map<const Vector>(y.data(), n);
  tp.F = F;
  tp.g = d.g;
  tp.g_inv = inverse_spd(d.g, x, y);
  tp.l_up = tp.y / F;
  tp.l_down = tp.g * tp.l_up;

  // Cartan tensor, filled from the sorted representative.
  tp.cartan = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        int s[3] = {i, j, k};
        std::sort(s, s + 3);
        tp.cartan(i, j, k) = 0.5 * d.dg_dy(s[0], s[1], s[2]);
      }

  // gamma^i_jk = 1/2 g^{is} (d_k g_sj - d_s g_jk + d_j g_ks), symmetric in (j, k).
  tp.gamma = Tensor3(n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int s = 0; s < n; ++s) {
          double first_kind = 0.5 * (d.dg_dx(s, j, k) - d.dg_dx(j, k, s) + d.dg_dx(k, s, j));
          acc += tp.g_inv(i, s) * first_kind;
        }
        tp.gamma(i, j, k) = tp.gamma(i, k, j) = acc;
      }
    }
  }

  // Spray term G^k = gamma^k_rs l^r l^s and C^i_jk = g^{is} C_sjk; C scales as 1/F.
  Vector spray = Vector::Zero(n);
  for (int k = 0; k < n; ++k)
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) spray(k) += tp.gamma(k, r, s) * tp.l_up(r) * tp.l_up(s);

  tp.nonlin_scaled = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += tp.gamma(i, j, k) * tp.l_up(k);
        double c_up = 0.0;
        for (int s = 0; s < n; ++s) c_up += tp.g_inv(i, s) * tp.cartan(s, j, k);
        acc -= c_up * F * spray(k);
      }
      tp.nonlin_scaled(i, j) = acc;
    }
  }
  tp.nonlin = F * tp.nonlin_scaled;
  return tp;
}

}  // namespace fincap
