#pragma once

// Discrete conformal n-energy on the sphere bundle grid and capacity
// estimates by projected gradient descent.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fincap/shapes.hpp"
#include "fincap/sphere_bundle.hpp"

namespace fincap {

// Base-node derivative rows. Without a region every axis uses AxisStencil;
// with one, stencils only read active nodes (central where both neighbours
// are active, second-order one-sided otherwise, first-order as a last resort).
class BaseDifferences {
 public:
  BaseDifferences(const SphereBundleGrid& grid, const std::vector<char>* region = nullptr);

  struct Entry {
    std::size_t node;
    double weight;
  };
  std::span<const Entry> row(int axis, std::size_t node) const;

  template <class Values>
  double apply(int axis, std::size_t node, const Values& u) const {
    double acc = 0.0;
    for (const Entry& e : row(axis, node)) acc += e.weight * u[e.node];
    return acc;
  }

 private:
  std::vector<Entry> entries_[2];
  std::vector<std::size_t> start_[2];
};

// I(u) = sum over nodes of |grad u^V|^p rho w. Only nodes of `region` contribute
// when a region is given.
class EnergyFunctional {
 public:
  EnergyFunctional(const FiberCache& cache, double p = 2.0, std::optional<std::vector<char>> region = std::nullopt);

  const SphereBundleGrid& grid() const { return cache_->grid(); }
  double exponent() const { return p_; }
  const std::vector<char>* region() const { return region_ ? &*region_ : nullptr; }

  double energy(const std::vector<double>& u) const;
  // Gradient with respect to every node value; callers zero pinned entries.
  std::vector<double> gradient(const std::vector<double>& u) const;
  // I(u + d) - I(u), exact and free of cancellation for p = 2.
  double increment(const std::vector<double>& u, const std::vector<double>& g, const std::vector<double>& d) const;

 private:
  bool active(std::size_t b) const { return !region_ || (*region_)[b]; }

  const FiberCache* cache_;
  double p_;
  std::optional<std::vector<char>> region_;
  BaseDifferences diff_;
  // Fiber-integrated sum of rho g^{ab} w per base node, used for p = 2.
  std::vector<std::array<double, 3>> K_;
};

double energy(const ScalarField& u, const MetricSpec& m, const SphereBundleGrid& grid);
double energy(const ScalarField& u, const FiberCache& cache);
// Pinned nodes receive zero.
ScalarField energy_gradient(const ScalarField& u, const MetricSpec& m, const SphereBundleGrid& grid);
ScalarField energy_gradient(const ScalarField& u, const FiberCache& cache);

enum class StepPolicy { bb, armijo };

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 50000;
  StepPolicy step = StepPolicy::bb;
  int warm_sweeps = 100;
  double armijo_c = 1e-4;
  double p = 2.0;
};

struct GridMeta {
  Rect base;
  int nx = 0;
  int ny = 0;
  int ntheta = 0;
};

struct CapacityResult {
  double value = 0.0;
  bool infinite = false;
  ScalarField minimizer;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool converged = false;
  GridMeta grid_meta;
  std::vector<double> energy_history;
};

struct CondenserSpec {
  Shape c0;  // u = 0
  Shape c1;  // u = 1
};

// Nodes where a pinned field can have nonzero gradient: free nodes and pinned
// nodes with a free 4-neighbour, intersected with `region`. Plate interiors are
// excluded so stencils turn one-sided at plate edges.
std::vector<char> energy_support(const ScalarField& pinned, const std::vector<char>* region = nullptr);

// Minimizes over free nodes of `u0`, keeping pins fixed and values in [0, 1].
CapacityResult minimize_pinned(ScalarField u0, const EnergyFunctional& I, const SolverConfig& cfg);

// Throws DegenerateCondenserError for empty plates or plates closer than two cells;
// overlapping plates give an infinite value without solving.
CapacityResult minimize(const CondenserSpec& cond, const FiberCache& cache, const SolverConfig& cfg = {},
                        const std::vector<char>* region = nullptr);
CapacityResult minimize(const CondenserSpec& cond, const MetricSpec& m, const SphereBundleGrid& grid,
                        const SolverConfig& cfg = {});

// u = 1 on C and u = 0 on the truncation set. The default truncation is the
// outer ring of base nodes. Throws PreconditionError when C meets or touches it.
CapacityResult cap_compact(const Shape& C, const FiberCache& cache, const SolverConfig& cfg = {},
                           const std::optional<Shape>& truncation = std::nullopt,
                           const std::vector<char>* region = nullptr);
CapacityResult cap_compact(const Shape& C, const MetricSpec& m, const SphereBundleGrid& grid,
                           const SolverConfig& cfg = {});

// Border ring of the grid as a plane set: complement of the domain shrunk by one cell.
Shape truncation_ring(const SphereBundleGrid& grid);

double oscillation(const ScalarField& u, const Shape& S, const SphereBundleGrid& grid);

struct Window {
  int i0, i1, j0, j1;  // closed node ranges
};

struct MonotonicityReport {
  bool monotone = true;
  std::optional<Window> witness;
  std::size_t windows_checked = 0;
  int stride = 1;
};

// Every closed sub-rectangle with at least 3 nodes per side (restricted to
// `region` when given) must attain its max and min on its boundary nodes.
// Corners snap to a lattice of the returned stride when the count exceeds `budget`.
MonotonicityReport is_monotone(const ScalarField& u, const SphereBundleGrid& grid,
                               const std::vector<char>* region = nullptr, double tolerance = 1e-12,
                               std::size_t budget = 200000000);

}  // namespace fincap
