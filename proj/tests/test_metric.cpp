#include <cmath>
#include <random>

#include "catalog.hpp"
#include "doctest.h"
#include "fincap/errors.hpp"
#include "fincap/metric.hpp"
#include "oracles.hpp"

using namespace fincap;
using namespace fincap::testing;

TEST_CASE("eval_F on the catalog examples") {
  CHECK(eval_F(MetricSpec::euclidean(2), {0, 0}, {3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(eval_F(constant_randers(0.5, 0.0), {0.3, -2.0}, {1, 0}) == doctest::Approx(1.5).epsilon(1e-15));
  MetricSpec conf = MetricSpec::conformal(MetricSpec::euclidean(2), Expr::parse("x1"));
  CHECK(eval_F(conf, {1, 0}, {1, 0}) == doctest::Approx(2.718281828459045).epsilon(1e-15));
}

TEST_CASE("eval_F error paths") {
  CHECK_THROWS_AS(eval_F(MetricSpec::euclidean(2), {0, 0}, {0, 0}), DomainError);
  MetricSpec bad = constant_randers(1.0, 0.0);
  CHECK_THROWS_AS(eval_F(bad, {0, 0}, {1, 0}), InvalidMetricError);
  MetricSpec lazy = MetricSpec::randers(2, exprs({"1", "0", "0", "1"}), exprs({"x1", "0"}));
  CHECK_NOTHROW(eval_F(lazy, {0.5, 0}, {1, 0}));
  CHECK_THROWS_AS(eval_F(lazy, {1.5, 0}, {1, 0}), InvalidMetricError);
  MetricSpec indefinite = MetricSpec::riemannian(2, exprs({"1", "2", "0", "1"}));
  CHECK_THROWS_AS(eval_F(indefinite, {0, 0}, {1, 0}), InvalidMetricError);
}

TEST_CASE("fundamental tensor examples") {
  Matrix g = fundamental_tensor(MetricSpec::euclidean(2), {0.4, -0.1}, {2, -1});
  CHECK(max_abs_diff(g, Matrix::Identity(2, 2)) == 0.0);

  MetricSpec riem = sample_riemannian();
  std::vector<double> x{0.3, -0.7};
  Matrix a(2, 2);
  a << 1.2 + 0.3 * std::sin(0.3) * std::cos(-0.7), 0.2 * std::cos(-0.4), 0.2 * std::cos(-0.4),
      0.9 + 0.2 * 0.09 + 0.1 * std::exp(-0.49);
  for (double t = 0; t < 6.28; t += 0.7) {
    Matrix gy = fundamental_tensor(riem, x, {std::cos(t), std::sin(t)});
    CHECK(max_abs_diff(gy, a) < 1e-14);
  }

  MetricSpec randers = constant_randers(0.5, 0.0);
  Matrix exact = fundamental_tensor(randers, {0, 0}, {0, 1});
  Matrix fd = fd_fundamental_tensor(randers, {0, 0}, {0, 1});
  CHECK(max_abs_diff(exact, fd) < 1e-6);
}

TEST_CASE("cartan tensor") {
  CHECK(cartan_tensor(MetricSpec::euclidean(2), {0, 0}, {1, 2}).max_abs() == 0.0);
  CHECK(cartan_tensor(sample_riemannian(), {0.2, 0.1}, {1, 2}).max_abs() == 0.0);

  MetricSpec randers = constant_randers(0.5, 0.0);
  std::vector<double> x{0, 0}, y{1, 1};
  Tensor3 C = cartan_tensor(randers, x, y);
  Tensor3 fd = fd_metric_derivative(randers, x, y, true);
  Tensor3 half(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) half(i, j, k) = 0.5 * fd(i, j, k);
  CHECK(max_abs_diff(C, half) < 1e-6);
  CHECK(C.max_abs() > 0.01);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(C(i, j, 0) * y[0] + C(i, j, 1) * y[1]) < 1e-12);
      for (int k = 0; k < 2; ++k) {
        CHECK(C(i, j, k) == C(j, i, k));
        CHECK(C(i, j, k) == C(k, j, i));
      }
    }
}

TEST_CASE("formal Christoffel symbols") {
  CHECK(formal_christoffel(MetricSpec::euclidean(2), {0.3, 0.2}, {1, 0}).max_abs() == 0.0);
  MetricSpec flat_rescale = MetricSpec::conformal(MetricSpec::euclidean(2), Expr::parse("0.7"));
  CHECK(formal_christoffel(flat_rescale, {0.3, 0.2}, {1, 1}).max_abs() == 0.0);

  // a_ij = e^{2 x1} delta_ij: Gamma^1_11 = 1, Gamma^1_22 = -1, Gamma^2_12 = Gamma^2_21 = 1, rest 0.
  MetricSpec conf = MetricSpec::riemannian(2, exprs({"exp(2*x1)", "0", "0", "exp(2*x1)"}));
  Tensor3 G = formal_christoffel(conf, {0.4, -0.3}, {0.6, 0.8});
  Tensor3 expected(2);
  expected(0, 0, 0) = 1;
  expected(0, 1, 1) = -1;
  expected(1, 0, 1) = expected(1, 1, 0) = 1;
  CHECK(max_abs_diff(G, expected) < 1e-13);

  MetricSpec randers = sample_randers();
  std::vector<double> x{0.2, -0.4}, y{0.3, 1.0};
  Tensor3 Gr = formal_christoffel(randers, x, y);
  CHECK(max_abs_diff(Gr, fd_christoffel(randers, x, y)) < 1e-6);
  for (int i = 0; i < 2; ++i) CHECK(Gr(i, 0, 1) == Gr(i, 1, 0));
}

TEST_CASE("nonlinear connection") {
  auto eu = nonlinear_connection(MetricSpec::euclidean(2), {0.1, 0.2}, {1, 2});
  CHECK(eu.N.cwiseAbs().maxCoeff() == 0.0);
  CHECK(eu.N_scaled.cwiseAbs().maxCoeff() == 0.0);

  auto cr = nonlinear_connection(constant_randers(0.3, 0.1), {0.5, -0.2}, {1, 2});
  CHECK(cr.N.cwiseAbs().maxCoeff() == 0.0);

  MetricSpec riem = sample_riemannian();
  std::vector<double> x{0.2, 0.5}, y{-0.4, 1.3};
  TensorPoint tp = tensor_point(riem, x, y);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double expected = tp.gamma(i, j, 0) * y[0] + tp.gamma(i, j, 1) * y[1];
      CHECK(tp.nonlin(i, j) == doctest::Approx(expected).epsilon(1e-13));
    }

  MetricSpec randers = sample_randers();
  auto base = nonlinear_connection(randers, x, y);
  for (double lambda : {0.5, 2.0, 7.3}) {
    auto scaled = nonlinear_connection(randers, x, {lambda * y[0], lambda * y[1]});
    CHECK(max_abs_diff(scaled.N_scaled, base.N_scaled) < 1e-10);
  }
  double F = eval_F(randers, x, y);
  CHECK(max_abs_diff(base.N, F * base.N_scaled) == 0.0);
}

TEST_CASE("tensor_point aggregates the individual operations") {
  TensorPoint eu = tensor_point(MetricSpec::euclidean(2), {0, 0}, {1, 0});
  CHECK(eu.F == 1.0);
  CHECK(max_abs_diff(eu.g, Matrix::Identity(2, 2)) == 0.0);
  CHECK(eu.l_up(0) == 1.0);
  CHECK(eu.l_up(1) == 0.0);
  CHECK(eu.nonlin.cwiseAbs().maxCoeff() == 0.0);

  MetricSpec randers = sample_randers();
  std::vector<double> x{-0.3, 0.8}, y{0.7, -0.2};
  TensorPoint tp = tensor_point(randers, x, y);
  CHECK(tp.F == eval_F(randers, x, y));
  CHECK(max_abs_diff(tp.g, fundamental_tensor(randers, x, y)) == 0.0);
  CHECK(max_abs_diff(tp.cartan, cartan_tensor(randers, x, y)) == 0.0);
  CHECK(max_abs_diff(tp.gamma, formal_christoffel(randers, x, y)) == 0.0);
  CHECK(max_abs_diff(tp.nonlin, nonlinear_connection(randers, x, y).N) == 0.0);

  MetricSpec conf = MetricSpec::conformal(MetricSpec::euclidean(2), Expr::parse("x1"));
  TensorPoint c = tensor_point(conf, {0, 0}, {0, 1});
  CHECK(max_abs_diff(c.g, Matrix::Identity(2, 2)) == 0.0);
  CHECK(max_abs_diff(c.g_inv, Matrix::Identity(2, 2)) == 0.0);
}

TEST_CASE("conformal wrapping composes") {
  MetricSpec base = sample_randers();
  Expr s1 = Expr::parse("0.2*sin(x2)");
  Expr s2 = Expr::parse("x1^2 - 0.1");
  MetricSpec twice = MetricSpec::conformal(MetricSpec::conformal(base, s1), s2);
  MetricSpec once = MetricSpec::conformal(base, s1 + s2);
  std::mt19937_64 rng(11);
  for (int s = 0; s < 20; ++s) {
    auto x = random_point(rng);
    auto y = random_direction(rng);
    CHECK(eval_F(twice, x, y) == eval_F(once, x, y));
    CHECK(max_abs_diff(fundamental_tensor(twice, x, y), fundamental_tensor(once, x, y)) == 0.0);
  }
}

TEST_CASE("homogeneity and consistency properties across the catalog") {
  std::mt19937_64 rng(2024);
  const auto catalog = metric_catalog();
  for (int s = 0; s < 60; ++s) {
    const MetricSpec& m = catalog[static_cast<std::size_t>(s) % catalog.size()];
    auto x = random_point(rng);
    auto y = random_direction(rng);
    TensorPoint tp = tensor_point(m, x, y);
    CHECK(max_abs_diff(tp.g_inv * tp.g, Matrix::Identity(2, 2)) < 1e-10);
    CHECK((tp.g - tp.g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    double gyy = tp.y.dot(tp.g * tp.y);
    CHECK(rel_err(gyy, tp.F * tp.F) < 1e-10);
    CHECK(std::abs(tp.l_down.dot(tp.l_up) - 1.0) < 1e-10);
    for (double lambda : {0.5, 2.0, 7.3}) {
      std::vector<double> ly{lambda * y[0], lambda * y[1]};
      TensorPoint sp = tensor_point(m, x, ly);
      CHECK(rel_err(sp.F, lambda * tp.F) < 1e-12);
      CHECK(max_abs_diff(sp.g, tp.g) < 1e-10);
      CHECK(max_abs_diff(sp.g_inv, tp.g_inv) < 1e-10);
      CHECK(max_abs_diff(sp.gamma, tp.gamma) < 1e-10);
      CHECK(max_abs_diff(sp.nonlin_scaled, tp.nonlin_scaled) < 1e-10);
      Tensor3 fc(2), fs(2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            fc(i, j, k) = tp.cartan(i, j, k) * tp.F;
            fs(i, j, k) = sp.cartan(i, j, k) * sp.F;
          }
      CHECK(max_abs_diff(fc, fs) < 1e-10);
    }
  }
}

TEST_CASE("Riemannian specs are y-independent") {
  MetricSpec riem = sample_riemannian();
  std::vector<double> x{0.6, -0.2};
  TensorPoint ref = tensor_point(riem, x, {1, 0});
  for (int k = 1; k < 8; ++k) {
    double t = 2 * 3.141592653589793 * k / 8;
    TensorPoint tp = tensor_point(riem, x, {std::cos(t), std::sin(t)});
    CHECK(max_abs_diff(tp.g, ref.g) < 1e-12);
    CHECK(max_abs_diff(tp.g_inv, ref.g_inv) < 1e-12);
    CHECK(max_abs_diff(tp.gamma, ref.gamma) < 1e-12);
    CHECK(tp.cartan.max_abs() < 1e-12);
  }
}

TEST_CASE("dimension is a runtime parameter") {
  MetricSpec e3 = MetricSpec::euclidean(3);
  TensorPoint tp = tensor_point(e3, {0, 0, 0}, {1, 2, 2});
  CHECK(tp.F == doctest::Approx(3.0));
  CHECK(max_abs_diff(tp.g, Matrix::Identity(3, 3)) == 0.0);

  MetricSpec r3 = MetricSpec::randers(3, exprs({"1", "0", "0", "0", "1.5", "0.1", "0", "0", "2 + x3^2"}),
                                      exprs({"0.2*x1", "0.1", "0"}));
  std::vector<double> x{0.3, 0.1, -0.4}, y{1, -0.5, 0.25};
  TensorPoint r = tensor_point(r3, x, y);
  CHECK(max_abs_diff(r.g, fd_fundamental_tensor(r3, x, y)) < 1e-5);
  CHECK(max_abs_diff(r.gamma, fd_christoffel(r3, x, y)) < 1e-5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double cy = 0;
      for (int k = 0; k < 3; ++k) cy += r.cartan(i, j, k) * y[k];
      CHECK(std::abs(cy) < 1e-10);
    }
}

TEST_CASE("nonlinear connection is the y-derivative of the spray") {
  // G^i = 1/2 gamma^i_rs y^r y^s and N^i_j = dG^i/dy^j.
  auto spray = [](const MetricSpec& m, const std::vector<double>& x, const std::vector<double>& y) {
    Tensor3 g = formal_christoffel(m, x, y);
    std::vector<double> G(2, 0.0);
    for (int i = 0; i < 2; ++i)
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) G[i] += 0.5 * g(i, r, s) * y[r] * y[s];
    return G;
  };
  std::mt19937_64 rng(77);
  for (const MetricSpec& m : metric_catalog()) {
    for (int s = 0; s < 5; ++s) {
      auto x = random_point(rng);
      auto y = random_direction(rng);
      Matrix N = nonlinear_connection(m, x, y).N;
      const double h = 1e-5;
      for (int j = 0; j < 2; ++j) {
        auto yp = y, ym = y;
        yp[j] += h;
        ym[j] -= h;
        auto Gp = spray(m, x, yp), Gm = spray(m, x, ym);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(N(i, j) - (Gp[i] - Gm[i]) / (2 * h)) < 1e-6);
      }
    }
  }
}
