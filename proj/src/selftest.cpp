#include "fincap/selftest.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fincap {

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

std::vector<Expr> parse_all(std::initializer_list<const char*> texts) {
  std::vector<Expr> out;
  for (const char* t : texts) out.push_back(Expr::parse(t));
  return out;
}

std::vector<MetricSpec> catalog() {
  const MetricSpec eu = MetricSpec::euclidean(2);
  const MetricSpec riem = MetricSpec::riemannian(2, parse_all({"2 + sin(x1)", "0.3*x2", "0.3*x2", "1.5 + 0.5*cos(x1*x2)"}));
  const MetricSpec randers =
      MetricSpec::randers(2, parse_all({"1 + 0.2*x1^2", "0.1", "0.1", "1 + 0.1*x2^2"}), parse_all({"0.2*sin(x2)", "0.3*cos(x1)"}));
  return {eu, riem, randers, MetricSpec::conformal(randers, Expr::parse("0.4*x1 - 0.2*x2"))};
}

CheckReport report(const char* name, std::size_t samples, double err, double threshold) {
  return {name, samples, err, threshold, err <= threshold, {}};
}

CheckReport homogeneity(const SelftestOptions& o) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), ang(0.0, 2 * kPi), len(0.2, 3.0), scale(0.3, 5.0);
  const auto metrics = catalog();
  double worst = 0.0;
  std::size_t n = 0;
  for (const MetricSpec& m : metrics) {
    for (int s = 0; s < o.samples / static_cast<int>(metrics.size()) + 1; ++s, ++n) {
      const std::vector<double> x{pos(rng), pos(rng)};
      const double t = ang(rng), r = len(rng);
      const std::vector<double> y{r * std::cos(t), r * std::sin(t)};
      const double lambda = scale(rng);
      const std::vector<double> ly{lambda * y[0], lambda * y[1]};
      const TensorPoint a = tensor_point(m, x, y);
      const TensorPoint b = tensor_point(m, x, ly);
      worst = std::max(worst, rel(b.F, lambda * a.F));
      worst = std::max(worst, (b.g - a.g).cwiseAbs().maxCoeff());
      worst = std::max(worst, rel(a.y.dot(a.g * a.y), a.F * a.F));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(a.cartan(i, j, 0) * y[0] + a.cartan(i, j, 1) * y[1]));
    }
  }
  return report("homogeneity", n, worst, o.homogeneity_tol);
}

Eigen::Vector3d chart_omega(const MetricSpec& m, const Eigen::Vector3d& z) {
  const std::vector<double> x{z(0), z(1)}, y{std::cos(z(2)), std::sin(z(2))};
  return hilbert_form_chart(tensor_point(m, x, y));
}

CheckReport exterior_derivative(const SelftestOptions& o) {
  const auto metrics = catalog();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(-0.8, 0.8), ang(0.0, 2 * kPi);
  const double h = 1e-2;
  double worst = 0.0;
  std::size_t n = 0;
  for (const MetricSpec& m : {metrics[2], metrics[3]}) {
    for (int s = 0; s < 25; ++s, ++n) {
      const Eigen::Vector3d z(pos(rng), pos(rng), ang(rng));
      Eigen::Matrix3d D;
      for (int a = 0; a < 3; ++a) {
        Eigen::Vector3d zp = z, zm = z;
        zp(a) += h;
        zm(a) -= h;
        D.row(a) = ((chart_omega(m, zp) - chart_omega(m, zm)) / (2 * h)).transpose();
      }
      const std::vector<double> x{z(0), z(1)}, y{std::cos(z(2)), std::sin(z(2))};
      const Eigen::Matrix3d W = d_omega_chart(tensor_point(m, x, y));
      worst = std::max(worst, (W - (D - D.transpose())).cwiseAbs().maxCoeff());
    }
  }
  return report("hilbert_form_exterior_derivative", n, worst, o.d_omega_tol);
}

std::vector<ConformalMap> maps() {
  const MetricSpec eu = MetricSpec::euclidean(2);
  const Rect D{-0.75, 0.75, -0.75, 0.75};
  const PlanarMap sq = PlanarMap::power(2.0, {-1.0, 0.0}, {0.5, 0.0}, {0.0, 0.0});
  return {{PlanarMap::identity(), Expr::parse("0.3*sin(x1)"), eu, rescale(eu, Expr::parse("0.3*sin(x1)")), D},
          {PlanarMap::similarity(1.3, kPi / 6, {0.2, -0.1}), Expr::constant(std::log(1.3)), eu, eu, D},
          {sq, sq.log_conformal_factor(), eu, eu, D}};
}

CheckReport pullback_volume(const SelftestOptions& o) {
  double worst = 0.0;
  std::size_t n = 0;
  for (const ConformalMap& cm : maps()) {
    const CheckReport r = check_pullback_volume(cm, static_cast<std::size_t>(o.samples), 3, o.volume_tol);
    worst = std::max(worst, r.max_rel_err);
    n += r.samples;
  }
  return report("pullback_volume", n, worst, o.volume_tol);
}

CheckReport pullback_energy(const SelftestOptions& o) {
  const Expr u = Expr::parse("x1 + 0.3*x2^2 + sin(x1*x2)");
  double worst = 0.0;
  std::size_t n = 0;
  for (const ConformalMap& cm : maps()) {
    const CheckReport r = check_pullback_energy_density(cm, u, static_cast<std::size_t>(o.samples), 4, o.energy_density_tol);
    worst = std::max(worst, r.max_rel_err);
    n += r.samples;
  }
  return report("pullback_energy_density", n, worst, o.energy_density_tol);
}

CheckReport energy_gradient_check(const SelftestOptions& o) {
  const SphereBundleGrid g(Rect{-0.5, 0.5, -0.5, 0.5}, 10, 9, 16);
  const FiberCache cache(catalog()[3], g);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double eps = 1e-6;
  double worst = 0.0;
  std::size_t n = 0;
  for (double p : {2.0, 3.0}) {
    const EnergyFunctional I(cache, p);
    for (int s = 0; s < 5; ++s, ++n) {
      std::vector<double> u(g.base_size()), d(g.base_size());
      for (double& v : u) v = unit(rng);
      for (double& v : d) v = unit(rng) - 0.5;
      const std::vector<double> grad = I.gradient(u);
      double exact = 0.0;
      for (std::size_t b = 0; b < u.size(); ++b) exact += grad[b] * d[b];
      std::vector<double> up = u, um = u;
      for (std::size_t b = 0; b < u.size(); ++b) {
        up[b] += eps * d[b];
        um[b] -= eps * d[b];
      }
      worst = std::max(worst, rel((I.energy(up) - I.energy(um)) / (2 * eps), exact));
    }
  }
  return report("energy_gradient", n, worst, o.gradient_tol);
}

CheckReport euclidean_density(const SelftestOptions& o) {
  const SphereBundleGrid g(Rect{0, 1, 0, 1}, 32, 32, 32);
  const FiberCache cache(MetricSpec::euclidean(2), g);
  double worst = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) worst = std::max(worst, std::abs(cache.density(node) - 1.0));
  return report("euclidean_density", g.size(), worst, o.density_tol);
}

CheckReport annulus(const SelftestOptions& o) {
  const SphereBundleGrid g(Rect{-0.75, 0.75, -0.75, 0.75}, o.annulus_n, o.annulus_n, 16);
  const CondenserSpec cond{Shape::exterior_disk({0, 0}, 0.25 * std::exp(1.0)), Shape::disk({0, 0}, 0.25)};
  const CapacityResult r = minimize(cond, FiberCache(MetricSpec::euclidean(2), g));
  CheckReport rep = report("annulus_capacity", 1, rel(r.value, 4 * kPi * kPi), o.annulus_tol);
  if (!r.converged) {
    rep.pass = false;
    rep.detail = "solver did not converge";
  }
  return rep;
}

}  // namespace

std::vector<CheckReport> run_selftest(const SelftestOptions& options) {
  return {homogeneity(options),     exterior_derivative(options), pullback_volume(options), pullback_energy(options),
          energy_gradient_check(options), euclidean_density(options), annulus(options)};
}

}  // namespace fincap
