#include "fincap/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "fincap/config.hpp"
#include "fincap/errors.hpp"
#include "fincap/output.hpp"
#include "fincap/parallel.hpp"
#include "fincap/selftest.hpp"

namespace fincap {

namespace {

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<int> threads;
  std::string point;
  std::optional<double> theta;
  std::string direction;
  std::string which;
  std::string points;
};

struct Context {
  Config cfg;
  std::string out_dir;
  std::set<std::string> formats;
  std::ostream& out;

  bool wants(const std::string& fmt) const { return formats.count(fmt) != 0; }
  std::string path(const std::string& name) const { return (std::filesystem::path(out_dir) / name).string(); }
};

std::set<std::string> parse_formats(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (item.empty()) continue;
    if (item != "csv" && item != "svg" && item != "txt")
      throw ConfigError("output.formats: unknown format '" + item + "' (expected csv, svg, txt)");
    out.insert(item);
  }
  return out;
}

int resolve_threads(const std::optional<int>& requested) {
  if (requested) {
    if (*requested < 1) throw ConfigError("--threads must be positive");
    return *requested;
  }
  if (const char* env = std::getenv("FC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096) throw ConfigError(std::string("FC_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string yes_no(bool v) { return v ? "true" : "false"; }

void print_matrix(std::ostream& os, const std::string& label, const Matrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    os << label << '[' << i << "] =";
    for (int j = 0; j < m.cols(); ++j) os << ' ' << format_number(m(i, j));
    os << '\n';
  }
}

void print_tensor(std::ostream& os, const std::string& label, const Tensor3& t) {
  const int n = t.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      os << label << '[' << i << "][" << j << "] =";
      for (int k = 0; k < n; ++k) os << ' ' << format_number(t(i, j, k));
      os << '\n';
    }
}

int cmd_tensors(Context& ctx, const Options& opt) {
  const MetricSpec m = metric_from(ctx.cfg);
  const int n = m.dim();
  const std::vector<double> x = parse_numbers(opt.point.empty() ? ctx.cfg.require("tensors", "point") : opt.point, "point");
  if (static_cast<int>(x.size()) != n) throw ConfigError("point needs " + std::to_string(n) + " coordinates");
  std::vector<double> y;
  const std::string dir = opt.direction.empty() ? ctx.cfg.get_or("tensors", "direction", "") : opt.direction;
  double theta = 0.0;
  if (!dir.empty()) {
    y = parse_numbers(dir, "direction");
    if (static_cast<int>(y.size()) != n) throw ConfigError("direction needs " + std::to_string(n) + " components");
  } else {
    if (n != 2) throw ConfigError("theta describes directions only for dim = 2; give a direction instead");
    theta = opt.theta ? *opt.theta : ctx.cfg.get_double("tensors", "theta", 0.0);
    y = {std::cos(theta), std::sin(theta)};
  }
  const TensorPoint tp = tensor_point(m, x, y);
  std::ostringstream os;
  os << "F = " << format_number(tp.F) << '\n';
  print_matrix(os, "g", tp.g);
  print_matrix(os, "g_inv", tp.g_inv);
  print_tensor(os, "C", tp.cartan);
  print_tensor(os, "gamma", tp.gamma);
  print_matrix(os, "N", tp.nonlin);
  print_matrix(os, "N_scaled", tp.nonlin_scaled);
  if (n == 2) os << "rho = " << format_number(volume_density(tp)) << '\n';
  ctx.out << os.str();
  if (ctx.wants("txt")) write_file_atomic(ctx.path("tensors.txt"), os.str());
  return exit_ok;
}

std::vector<std::pair<std::string, std::string>> summary_rows(const std::string& mode, const CapacityResult& r) {
  return {{"mode", mode},
          {"value", format_number(r.infinite ? std::numeric_limits<double>::infinity() : r.value)},
          {"infinite", yes_no(r.infinite)},
          {"converged", yes_no(r.converged)},
          {"iterations", std::to_string(r.iterations)},
          {"final_gradient_norm", format_number(r.final_gradient_norm)},
          {"x1min", format_number(r.grid_meta.base.x1min)},
          {"x1max", format_number(r.grid_meta.base.x1max)},
          {"x2min", format_number(r.grid_meta.base.x2min)},
          {"x2max", format_number(r.grid_meta.base.x2max)},
          {"nx", std::to_string(r.grid_meta.nx)},
          {"ny", std::to_string(r.grid_meta.ny)},
          {"ntheta", std::to_string(r.grid_meta.ntheta)}};
}

void write_field(const Context& ctx, const std::string& stem, const CapacityResult& r, const SphereBundleGrid& grid) {
  if (r.minimizer.values().empty()) return;
  if (ctx.wants("csv")) write_file_atomic(ctx.path(stem + ".csv"), field_csv(r.minimizer, grid));
  if (ctx.wants("svg")) write_file_atomic(ctx.path(stem + ".svg"), heatmap_svg(r.minimizer, grid));
}

int cmd_capacity(Context& ctx) {
  const MetricSpec m = metric_from(ctx.cfg);
  const SphereBundleGrid grid = grid_from(ctx.cfg);
  const SolverConfig solver = solver_from(ctx.cfg);
  const FiberCache cache(m, grid);
  CapacityResult r;
  std::string mode;
  if (ctx.cfg.has_section("condenser")) {
    mode = "condenser";
    r = minimize(condenser_from(ctx.cfg), cache, solver);
  } else if (ctx.cfg.get("shape", "compact")) {
    mode = "compact";
    std::optional<Shape> truncation;
    if (auto t = ctx.cfg.get("shape", "truncation")) truncation = parse_shape(*t);
    r = cap_compact(parse_shape(*ctx.cfg.get("shape", "compact")), cache, solver, truncation);
  } else {
    throw ConfigError("missing section [condenser] (keys c0, c1) or [shape] compact");
  }
  const auto rows = summary_rows(mode, r);
  for (const auto& [k, v] : rows) ctx.out << k << " = " << v << '\n';
  if (ctx.wants("csv")) write_file_atomic(ctx.path("summary.csv"), key_value_csv(rows));
  write_field(ctx, "minimizer", r, grid);
  return r.infinite || r.converged ? exit_ok : exit_not_converged;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double positive(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double("check", key, fallback);
  if (!(v > 0.0)) throw ConfigError("check." + key + " must be positive");
  return v;
}

int cmd_check(Context& ctx) {
  if (!ctx.cfg.has_section("check")) throw ConfigError("missing section [check]");
  const Config& cfg = ctx.cfg;
  const ConformalMap cm = conformal_map_from(cfg);
  const std::vector<std::string> run = split_list(cfg.get_or("check", "run", "conformality, volume, energy_density"));
  if (run.empty()) throw ConfigError("check.run lists no checks");
  const int samples = cfg.get_int("check", "samples", 1000);
  if (samples < 1) throw ConfigError("check.samples must be at least 1");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("check", "seed", 1));
  const Expr u = Expr::parse(cfg.get_or("check", "u", "x1"));
  const Resolution res = resolution_from(cfg, "check");
  const SolverConfig solver = solver_from(cfg);
  const auto n = static_cast<std::size_t>(samples);

  // Validate every name and threshold before running anything.
  const std::set<std::string> known{"conformality", "volume", "energy_density", "energy", "capacity", "invariant"};
  for (const std::string& name : run)
    if (!known.count(name))
      throw ConfigError("check.run: unknown check '" + name +
                        "' (expected conformality, volume, energy_density, energy, capacity, invariant)");
  const double t_conf = positive(cfg, "conformality_threshold", 1e-10);
  const double t_vol = positive(cfg, "volume_threshold", 1e-6);
  const double t_dens = positive(cfg, "energy_density_threshold", 1e-8);
  const double t_energy = positive(cfg, "energy_threshold", 1e-2);
  const double t_cap = positive(cfg, "capacity_threshold", 0.03);
  const double t_inv = positive(cfg, "invariant_threshold", 0.05);

  std::vector<CheckReport> reports;
  for (const std::string& name : run) {
    if (name == "conformality") reports.push_back(check_conformality(cm, n, seed, t_conf));
    if (name == "volume") reports.push_back(check_pullback_volume(cm, n, seed, t_vol));
    if (name == "energy_density") reports.push_back(check_pullback_energy_density(cm, u, n, seed, t_dens));
    if (name == "energy") reports.push_back(check_energy_invariance(cm, u, res, t_energy));
    if (name == "capacity") reports.push_back(check_capacity_invariance(cm, condenser_from(cfg), res, solver, t_cap));
    if (name == "invariant") {
      const InvariantKind kind = parse_invariant_kind(cfg.require("invariant", "which"));
      const auto pts = parse_points(cfg.require("invariant", "points"), "invariant.points");
      if (pts.size() != arity(kind))
        throw ConfigError(to_string(kind) + " needs " + std::to_string(arity(kind)) + " points");
      reports.push_back(check_invariant_invariance(cm, kind, pts, res, catalog_from(cfg), solver, t_inv));
    }
  }
  std::ostringstream text;
  write_reports_text(text, reports);
  ctx.out << text.str();
  if (ctx.wants("csv")) write_file_atomic(ctx.path("report.csv"), reports_csv(reports));
  if (ctx.wants("txt")) write_file_atomic(ctx.path("report.txt"), text.str());
  const bool ok = std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
  return ok ? exit_ok : exit_check_failed;
}

int cmd_invariant(Context& ctx, const Options& opt) {
  const std::string which = opt.which.empty() ? ctx.cfg.require("invariant", "which") : opt.which;
  const InvariantKind kind = parse_invariant_kind(which);
  const auto pts = parse_points(opt.points.empty() ? ctx.cfg.require("invariant", "points") : opt.points, "points");
  if (pts.size() != arity(kind))
    throw ConfigError(to_string(kind) + " needs " + std::to_string(arity(kind)) + " points, got " +
                      std::to_string(pts.size()));
  const MetricSpec m = metric_from(ctx.cfg);
  const SphereBundleGrid grid = grid_from(ctx.cfg);
  const FiberCache cache(m, grid);
  const InvariantResult r = evaluate_invariant(kind, source_space(cache), pts, catalog_from(ctx.cfg), solver_from(ctx.cfg));
  const bool converged = r.infinite || r.best_result.converged;
  const std::vector<std::pair<std::string, std::string>> rows{{"invariant", to_string(kind)},
                                                              {"value", format_number(r.value)},
                                                              {"infinite", yes_no(r.infinite)},
                                                              {"candidates", std::to_string(r.candidates)},
                                                              {"admissible", std::to_string(r.solved)},
                                                              {"best_index", std::to_string(r.best_index)},
                                                              {"converged", yes_no(converged)}};
  ctx.out << to_string(kind) << " = " << format_number(r.value) << '\n';
  for (std::size_t i = 2; i < rows.size(); ++i) ctx.out << rows[i].first << " = " << rows[i].second << '\n';
  for (const Shape& s : r.best) ctx.out << "continuum: " << s.describe() << '\n';
  if (ctx.wants("csv")) {
    write_file_atomic(ctx.path("invariant.csv"), key_value_csv(rows));
    write_file_atomic(ctx.path("continuum.csv"), continua_csv(r.best));
  }
  write_field(ctx, "minimizer", r.best_result, grid);
  return converged ? exit_ok : exit_not_converged;
}

int cmd_selftest(Context& ctx) {
  SelftestOptions o;
  const Config& cfg = ctx.cfg;
  // Tolerances here may be zero: the named check then fails, it is not bad input.
  auto tol = [&](const char* key, double fallback) {
    const double v = cfg.get_double("selftest", key, fallback);
    if (!(v >= 0.0)) throw ConfigError(std::string("selftest.") + key + " must be nonnegative");
    return v;
  };
  o.homogeneity_tol = tol("homogeneity_tol", o.homogeneity_tol);
  o.d_omega_tol = tol("d_omega_tol", o.d_omega_tol);
  o.volume_tol = tol("volume_tol", o.volume_tol);
  o.energy_density_tol = tol("energy_density_tol", o.energy_density_tol);
  o.gradient_tol = tol("gradient_tol", o.gradient_tol);
  o.density_tol = tol("density_tol", o.density_tol);
  o.annulus_tol = tol("annulus_tol", o.annulus_tol);
  o.annulus_n = cfg.get_int("selftest", "annulus_n", o.annulus_n);
  o.samples = cfg.get_int("selftest", "samples", o.samples);
  if (o.annulus_n < 16 || o.annulus_n > 512) throw ConfigError("selftest.annulus_n must lie in [16, 512]");
  if (o.samples < 1) throw ConfigError("selftest.samples must be at least 1");
  const std::vector<CheckReport> reports = run_selftest(o);
  std::ostringstream text;
  write_reports_text(text, reports);
  ctx.out << text.str();
  if (ctx.wants("csv")) write_file_atomic(ctx.path("selftest.csv"), reports_csv(reports));
  const bool ok = std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
  return ok ? exit_ok : exit_check_failed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finsler conformal capacity toolkit", "fincap"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "Run configuration (sectioned key = value)");
  app.add_option("--out", opt.out, "Output directory (overrides output.dir)");
  app.add_option("--override", opt.overrides, "section.key=value, repeatable")->take_all();
  app.add_option("--threads", opt.threads, "Worker threads (fallback: FC_THREADS)");
  auto* tensors = app.add_subcommand("tensors", "Print the tensors at one line element");
  tensors->add_option("--point", opt.point, "Base point, comma separated");
  tensors->add_option("--theta", opt.theta, "Fiber angle (dim = 2)");
  tensors->add_option("--direction", opt.direction, "Direction y, comma separated");
  app.add_subcommand("capacity", "Solve the condenser or compact-set capacity problem");
  app.add_subcommand("check", "Run conformal identity and invariance checks");
  auto* invariant = app.add_subcommand("invariant", "Upper bound for mu, lambda, nu or rho");
  invariant->add_option("--which", opt.which, "mu | lambda | nu | rho");
  invariant->add_option("--points", opt.points, "Points as 'x,y; x,y; ...'");
  app.add_subcommand("selftest", "Run the embedded oracle suite");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_bad_input;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Config cfg;
    if (!opt.config.empty()) {
      cfg = Config::load(opt.config);
    } else if (command != "selftest") {
      throw ConfigError("--config is required for '" + command + "'");
    }
    for (const std::string& o : opt.overrides) cfg.apply_override(o);
    set_thread_count(resolve_threads(opt.threads));
    Context ctx{cfg, opt.out.empty() ? cfg.get_or("output", "dir", "fincap_out") : opt.out,
                parse_formats(cfg.get_or("output", "formats", "csv, svg, txt")), out};
    if (command == "tensors") return cmd_tensors(ctx, opt);
    if (command == "capacity") return cmd_capacity(ctx);
    if (command == "check") return cmd_check(ctx);
    if (command == "invariant") return cmd_invariant(ctx, opt);
    return cmd_selftest(ctx);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const InvalidMetricError& e) {
    err << "error: invalid metric: " << e.what() << '\n';
  } catch (const OrientationError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return exit_bad_input;
}

}  // namespace fincap
