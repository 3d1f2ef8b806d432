#include "fincap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fincap/errors.hpp"
#include "fincap/parallel.hpp"

namespace fincap {

BaseDifferences::BaseDifferences(const SphereBundleGrid& grid, const std::vector<char>* region) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  auto is_active = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return false;
    return !region || (*region)[grid.base_index(i, j)] != 0;
  };
  for (int axis = 0; axis < 2; ++axis) {
    const double h = axis == 0 ? grid.dx1() : grid.dx2();
    const double c = 1.0 / (2.0 * h);
    start_[axis].reserve(grid.base_size() + 1);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        start_[axis].push_back(entries_[axis].size());
        if (!is_active(i, j)) continue;
        auto at = [&](int step) {
          return axis == 0 ? std::pair{i + step, j} : std::pair{i, j + step};
        };
        auto active = [&](int step) {
          auto [a, b] = at(step);
          return is_active(a, b);
        };
        auto push = [&](int step, double w) {
          auto [a, b] = at(step);
          entries_[axis].push_back({grid.base_index(a, b), w});
        };
        if (active(-1) && active(1)) {
          push(-1, -c);
          push(1, c);
        } else if (active(1) && active(2)) {
          push(0, -3.0 * c);
          push(1, 4.0 * c);
          push(2, -c);
        } else if (active(-1) && active(-2)) {
          push(-2, c);
          push(-1, -4.0 * c);
          push(0, 3.0 * c);
        } else if (active(1)) {
          push(0, -2.0 * c);
          push(1, 2.0 * c);
        } else if (active(-1)) {
          push(-1, -2.0 * c);
          push(0, 2.0 * c);
        }
      }
    start_[axis].push_back(entries_[axis].size());
  }
}

std::span<const BaseDifferences::Entry> BaseDifferences::row(int axis, std::size_t node) const {
  const auto& s = start_[axis];
  return {entries_[axis].data() + s[node], s[node + 1] - s[node]};
}

EnergyFunctional::EnergyFunctional(const FiberCache& cache, double p, std::optional<std::vector<char>> region)
    : cache_(&cache), p_(p), region_(std::move(region)), diff_(cache.grid(), region_ ? &*region_ : nullptr) {
  if (!(p >= 2.0)) throw ConfigError("energy exponent must be at least 2");
  const SphereBundleGrid& g = cache.grid();
  if (region_ && region_->size() != g.base_size()) throw ConfigError("region mask does not match grid");
  K_.assign(g.base_size(), {0.0, 0.0, 0.0});
  for (std::size_t b = 0; b < g.base_size(); ++b) {
    if (!active(b)) continue;
    for (int k = 0; k < g.ntheta(); ++k) {
      const std::size_t node = b * static_cast<std::size_t>(g.ntheta()) + static_cast<std::size_t>(k);
      const double rho = cache.density(node);
      const auto& gi = cache.g_inv(node);
      for (int c = 0; c < 3; ++c) K_[b][static_cast<std::size_t>(c)] += rho * gi[static_cast<std::size_t>(c)];
    }
  }
}

double EnergyFunctional::energy(const std::vector<double>& u) const {
  const SphereBundleGrid& g = grid();
  std::vector<double> per(g.base_size(), 0.0);
  const int nt = g.ntheta();
  parallel_for(g.base_size(), [&](std::size_t b) {
    if (!active(b)) return;
    const double d1 = diff_.apply(0, b, u);
    const double d2 = diff_.apply(1, b, u);
    if (p_ == 2.0) {
      per[b] = inverse_quadratic(K_[b], d1, d2);
      return;
    }
    double acc = 0.0;
    for (int k = 0; k < nt; ++k) {
      const std::size_t node = b * static_cast<std::size_t>(nt) + static_cast<std::size_t>(k);
      acc += cache_->density(node) * std::pow(inverse_quadratic(cache_->g_inv(node), d1, d2), 0.5 * p_);
    }
    per[b] = acc;
  });
  double total = 0.0;
  for (double v : per) total += v;
  return total * g.cell_weight();
}

std::vector<double> EnergyFunctional::gradient(const std::vector<double>& u) const {
  const SphereBundleGrid& g = grid();
  const int nt = g.ntheta();
  std::vector<std::array<double, 2>> V(g.base_size(), {0.0, 0.0});
  parallel_for(g.base_size(), [&](std::size_t b) {
    if (!active(b)) return;
    const double d1 = diff_.apply(0, b, u);
    const double d2 = diff_.apply(1, b, u);
    if (p_ == 2.0) {
      const auto& K = K_[b];
      V[b] = {2.0 * (K[0] * d1 + K[1] * d2), 2.0 * (K[1] * d1 + K[2] * d2)};
      return;
    }
    double v1 = 0.0, v2 = 0.0;
    for (int k = 0; k < nt; ++k) {
      const std::size_t node = b * static_cast<std::size_t>(nt) + static_cast<std::size_t>(k);
      const auto& gi = cache_->g_inv(node);
      const double q = inverse_quadratic(gi, d1, d2);
      const double s = cache_->density(node) * p_ * std::pow(q, 0.5 * p_ - 1.0);
      v1 += s * (gi[0] * d1 + gi[1] * d2);
      v2 += s * (gi[1] * d1 + gi[2] * d2);
    }
    V[b] = {v1, v2};
  });
  const double w = g.cell_weight();
  std::vector<double> grad(g.base_size(), 0.0);
  for (std::size_t b = 0; b < g.base_size(); ++b)
    for (int axis = 0; axis < 2; ++axis)
      for (const auto& e : diff_.row(axis, b)) grad[e.node] += e.weight * V[b][static_cast<std::size_t>(axis)];
  for (double& v : grad) v *= w;
  return grad;
}

double EnergyFunctional::increment(const std::vector<double>& u, const std::vector<double>& g,
                                   const std::vector<double>& d) const {
  if (p_ != 2.0) {
    std::vector<double> v(u);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += d[i];
    return energy(v) - energy(u);
  }
  double linear = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) linear += g[i] * d[i];
  return linear + energy(d);
}

double energy(const ScalarField& u, const FiberCache& cache) {
  return EnergyFunctional(cache).energy(u.values());
}

double energy(const ScalarField& u, const MetricSpec& m, const SphereBundleGrid& grid) {
  return energy(u, FiberCache(m, grid));
}

ScalarField energy_gradient(const ScalarField& u, const FiberCache& cache) {
  ScalarField out(cache.grid());
  out.values() = EnergyFunctional(cache).gradient(u.values());
  const auto& pins = u.pin_mask();
  for (std::size_t i = 0; i < pins.size(); ++i)
    if (pins[i]) out.values()[i] = 0.0;
  return out;
}

ScalarField energy_gradient(const ScalarField& u, const MetricSpec& m, const SphereBundleGrid& grid) {
  return energy_gradient(u, FiberCache(m, grid));
}

namespace {

double projected_norm(const std::vector<double>& u, const std::vector<double>& g, const std::vector<std::size_t>& free) {
  double worst = 0.0;
  for (std::size_t i : free) {
    double c = g[i];
    if (u[i] <= 0.0 && c > 0.0) c = 0.0;
    if (u[i] >= 1.0 && c < 0.0) c = 0.0;
    worst = std::max(worst, std::abs(c));
  }
  return worst;
}

void warm_start(ScalarField& u, const SphereBundleGrid& grid, const std::vector<char>* region, int sweeps) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  auto usable = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < nx && j < ny && (!region || (*region)[grid.base_index(i, j)]);
  };
  std::vector<double> next = u.values();
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const std::size_t b = grid.base_index(i, j);
        if (u.pin_mask()[b] || !usable(i, j)) continue;
        double acc = 0.0;
        int count = 0;
        const int di[4] = {-1, 1, 0, 0};
        const int dj[4] = {0, 0, -1, 1};
        for (int n = 0; n < 4; ++n)
          if (usable(i + di[n], j + dj[n])) {
            acc += u(i + di[n], j + dj[n]);
            ++count;
          }
        if (count > 0) next[b] = acc / count;
      }
    u.values() = next;
  }
}

GridMeta meta_of(const SphereBundleGrid& g) { return {g.base(), g.nx(), g.ny(), g.ntheta()}; }

}  // namespace

CapacityResult minimize_pinned(ScalarField u0, const EnergyFunctional& I, const SolverConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be nonnegative");
  const SphereBundleGrid& grid = I.grid();
  if (u0.nx() != grid.nx() || u0.ny() != grid.ny()) throw ConfigError("field does not match grid resolution");

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < u0.values().size(); ++i)
    if (!u0.pin_mask()[i]) {
      u0.values()[i] = std::clamp(u0.values()[i], 0.0, 1.0);
      free.push_back(i);
    }
  warm_start(u0, grid, I.region(), cfg.warm_sweeps);

  std::vector<double>& u = u0.values();
  auto pinned_gradient = [&](const std::vector<double>& v) {
    std::vector<double> g = I.gradient(v);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (u0.pin_mask()[i]) g[i] = 0.0;
    return g;
  };

  CapacityResult res;
  res.grid_meta = meta_of(grid);
  double E = I.energy(u);
  std::vector<double> g = pinned_gradient(u);
  res.energy_history.push_back(E);
  double pg = projected_norm(u, g, free);
  double alpha = 1.0;
  std::vector<double> d(u.size(), 0.0);
  int it = 0;
  bool stalled = false;
  for (; it < cfg.max_iter && pg > cfg.tol; ++it) {
    double dE = 0.0;
    double slope = 0.0;
    int halvings = 0;
    for (;;) {
      slope = 0.0;
      for (std::size_t i : free) {
        d[i] = std::clamp(u[i] - alpha * g[i], 0.0, 1.0) - u[i];
        slope += g[i] * d[i];
      }
      dE = I.increment(u, g, d);
      if (dE <= cfg.armijo_c * slope && slope < 0.0) break;
      if (++halvings > 80) {
        stalled = true;
        break;
      }
      alpha *= 0.5;
    }
    if (stalled) break;
    for (std::size_t i : free) u[i] += d[i];
    E += dE;
    res.energy_history.push_back(E);
    std::vector<double> g_new = pinned_gradient(u);
    if (cfg.step == StepPolicy::bb) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i : free) {
        ss += d[i] * d[i];
        sy += d[i] * (g_new[i] - g[i]);
      }
      alpha = sy > 0.0 ? ss / sy : 2.0 * alpha;
    } else {
      alpha *= 2.0;
    }
    alpha = std::clamp(alpha, 1e-12, 1e12);
    g = std::move(g_new);
    pg = projected_norm(u, g, free);
  }
  res.iterations = it;
  res.final_gradient_norm = pg;
  res.converged = pg <= cfg.tol;
  res.value = I.energy(u);
  res.minimizer = std::move(u0);
  return res;
}

namespace {

std::vector<char> restrict_to(std::vector<char> mask, const std::vector<char>* region) {
  if (region)
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && (*region)[i];
  return mask;
}

bool overlaps(const std::vector<char>& a, const std::vector<char>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && b[i]) return true;
  return false;
}

// Some node of a lies within Chebyshev distance 1 of a node of b.
bool adjacent(const std::vector<char>& a, const std::vector<char>& b, const SphereBundleGrid& grid) {
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      if (!a[grid.base_index(i, j)]) continue;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = j + dj;
          if (ii >= 0 && jj >= 0 && ii < grid.nx() && jj < grid.ny() && b[grid.base_index(ii, jj)]) return true;
        }
    }
  return false;
}

ScalarField pinned_field(const SphereBundleGrid& grid, const std::vector<char>& zero, const std::vector<char>& one,
                         const std::vector<char>* region) {
  ScalarField u(grid, 0.0);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const std::size_t b = grid.base_index(i, j);
      if (one[b]) u.pin(i, j, 1.0);
      else if (zero[b] || (region && !(*region)[b])) u.pin(i, j, 0.0);
    }
  return u;
}

}  // namespace

std::vector<char> energy_support(const ScalarField& pinned, const std::vector<char>* region) {
  const int nx = pinned.nx();
  const int ny = pinned.ny();
  auto index = [&](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j); };
  auto inside = [&](int i, int j) { return i >= 0 && j >= 0 && i < nx && j < ny && (!region || (*region)[index(i, j)]); };
  std::vector<char> support(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      if (!inside(i, j)) continue;
      if (!pinned.pinned(i, j)) {
        support[index(i, j)] = 1;
        continue;
      }
      const int di[4] = {-1, 1, 0, 0};
      const int dj[4] = {0, 0, -1, 1};
      for (int n = 0; n < 4; ++n)
        if (inside(i + di[n], j + dj[n]) && !pinned.pinned(i + di[n], j + dj[n])) support[index(i, j)] = 1;
    }
  return support;
}

CapacityResult minimize(const CondenserSpec& cond, const FiberCache& cache, const SolverConfig& cfg,
                        const std::vector<char>* region) {
  const SphereBundleGrid& grid = cache.grid();
  const auto m0 = restrict_to(cond.c0.rasterize(grid), region);
  const auto m1 = restrict_to(cond.c1.rasterize(grid), region);
  if (count_nodes(m0) == 0) throw DegenerateCondenserError("C0 (" + cond.c0.describe() + ") rasterizes to no nodes");
  if (count_nodes(m1) == 0) throw DegenerateCondenserError("C1 (" + cond.c1.describe() + ") rasterizes to no nodes");
  if (overlaps(m0, m1)) {
    CapacityResult res;
    res.value = std::numeric_limits<double>::infinity();
    res.infinite = true;
    res.converged = true;
    res.grid_meta = meta_of(grid);
    res.minimizer = ScalarField(grid, 0.0);
    return res;
  }
  if (adjacent(m1, m0, grid)) throw DegenerateCondenserError("condenser plates are closer than two cells");
  ScalarField u = pinned_field(grid, m0, m1, region);
  EnergyFunctional I(cache, cfg.p, energy_support(u, region));
  return minimize_pinned(std::move(u), I, cfg);
}

CapacityResult minimize(const CondenserSpec& cond, const MetricSpec& m, const SphereBundleGrid& grid,
                        const SolverConfig& cfg) {
  return minimize(cond, FiberCache(m, grid), cfg);
}

Shape truncation_ring(const SphereBundleGrid& grid) {
  const Rect& r = grid.base();
  return Shape::outside_rect(Rect{r.x1min + grid.dx1(), r.x1max - grid.dx1(), r.x2min + grid.dx2(), r.x2max - grid.dx2()});
}

CapacityResult cap_compact(const Shape& C, const FiberCache& cache, const SolverConfig& cfg,
                           const std::optional<Shape>& truncation, const std::vector<char>* region) {
  const SphereBundleGrid& grid = cache.grid();
  const auto mc = restrict_to(C.rasterize(grid), region);
  const auto mt = (truncation ? *truncation : truncation_ring(grid)).rasterize(grid);
  if (count_nodes(mc) == 0) throw DegenerateCondenserError("compact set (" + C.describe() + ") rasterizes to no nodes");
  if (adjacent(mc, mt, grid))
    throw PreconditionError("compact set (" + C.describe() + ") meets or touches the truncation boundary");
  ScalarField u = pinned_field(grid, mt, mc, region);
  EnergyFunctional I(cache, cfg.p, energy_support(u, region));
  return minimize_pinned(std::move(u), I, cfg);
}

CapacityResult cap_compact(const Shape& C, const MetricSpec& m, const SphereBundleGrid& grid, const SolverConfig& cfg) {
  return cap_compact(C, FiberCache(m, grid), cfg);
}

double oscillation(const ScalarField& u, const Shape& S, const SphereBundleGrid& grid) {
  const auto mask = S.rasterize(grid);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) {
      lo = std::min(lo, u.values()[i]);
      hi = std::max(hi, u.values()[i]);
    }
  if (lo > hi) throw DomainError("oscillation set (" + S.describe() + ") rasterizes to no nodes");
  return hi - lo;
}

MonotonicityReport is_monotone(const ScalarField& u, const SphereBundleGrid& grid, const std::vector<char>* region,
                               double tolerance, std::size_t budget) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  auto pairs = [](int n) { return static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0; };
  const double total = pairs(nx) * pairs(ny);
  int stride = 1;
  while (total / std::pow(static_cast<double>(stride), 4.0) > static_cast<double>(budget)) ++stride;

  // in_region[j][i] prefix counts per column so "rows i0..i1 of column j inside" is O(1).
  std::vector<std::vector<int>> prefix(static_cast<std::size_t>(ny), std::vector<int>(static_cast<std::size_t>(nx) + 1, 0));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      prefix[static_cast<std::size_t>(j)][static_cast<std::size_t>(i) + 1] =
          prefix[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] +
          ((!region || (*region)[grid.base_index(i, j)]) ? 1 : 0);
  auto column_inside = [&](int j, int i0, int i1) {
    const auto& p = prefix[static_cast<std::size_t>(j)];
    return p[static_cast<std::size_t>(i1) + 1] - p[static_cast<std::size_t>(i0)] == i1 - i0 + 1;
  };

  const double inf = std::numeric_limits<double>::infinity();
  MonotonicityReport report;
  report.stride = stride;
  std::vector<double> int_max(static_cast<std::size_t>(ny)), int_min(static_cast<std::size_t>(ny));
  std::vector<double> full_max(static_cast<std::size_t>(ny)), full_min(static_cast<std::size_t>(ny));
  for (int i0 = 0; i0 < nx; i0 += stride) {
    for (int j = 0; j < ny; ++j) {
      int_max[static_cast<std::size_t>(j)] = -inf;
      int_min[static_cast<std::size_t>(j)] = inf;
      full_max[static_cast<std::size_t>(j)] = full_min[static_cast<std::size_t>(j)] = u(i0, j);
    }
    for (int i1 = i0 + 1; i1 < nx; ++i1) {
      for (int j = 0; j < ny; ++j) {
        const std::size_t js = static_cast<std::size_t>(j);
        if (i1 - 1 > i0) {
          int_max[js] = std::max(int_max[js], u(i1 - 1, j));
          int_min[js] = std::min(int_min[js], u(i1 - 1, j));
        }
        full_max[js] = std::max(full_max[js], u(i1, j));
        full_min[js] = std::min(full_min[js], u(i1, j));
      }
      if (i1 - i0 < 2 || i1 % stride != 0) continue;
      for (int j0 = 0; j0 < ny; j0 += stride) {
        if (!column_inside(j0, i0, i1)) continue;
        double top_max = u(i0, j0), top_min = top_max;
        double bot_max = u(i1, j0), bot_min = bot_max;
        double in_max = -inf, in_min = inf;
        for (int j1 = j0 + 1; j1 < ny; ++j1) {
          if (!column_inside(j1, i0, i1)) break;
          top_max = std::max(top_max, u(i0, j1));
          top_min = std::min(top_min, u(i0, j1));
          bot_max = std::max(bot_max, u(i1, j1));
          bot_min = std::min(bot_min, u(i1, j1));
          if (j1 - 1 > j0) {
            in_max = std::max(in_max, int_max[static_cast<std::size_t>(j1 - 1)]);
            in_min = std::min(in_min, int_min[static_cast<std::size_t>(j1 - 1)]);
          }
          if (j1 - j0 < 2 || j1 % stride != 0) continue;
          const double b_max = std::max({top_max, bot_max, full_max[static_cast<std::size_t>(j0)],
                                         full_max[static_cast<std::size_t>(j1)]});
          const double b_min = std::min({top_min, bot_min, full_min[static_cast<std::size_t>(j0)],
                                         full_min[static_cast<std::size_t>(j1)]});
          ++report.windows_checked;
          if (in_max > b_max + tolerance || in_min < b_min - tolerance) {
            report.monotone = false;
            report.witness = Window{i0, i1, j0, j1};
            return report;
          }
        }
      }
    }
  }
  return report;
}

}  // namespace fincap
