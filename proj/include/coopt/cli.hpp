#pragma once

// Command-line front end. Exit codes: 0 success, 1 solver did not converge
// (or broke down numerically), 2 bad input.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopt/continuous_solver.hpp"
#include "coopt/discrete_solver.hpp"
#include "coopt/io.hpp"
#include "coopt/oracle.hpp"
#include "coopt/report.hpp"
#include "coopt/soft_solver.hpp"

namespace coopt::cli {

inline constexpr std::uint64_t kDefaultSeed = 20050101;

namespace detail {

namespace fs = std::filesystem;

struct Paths {
  std::string problem;
  std::string out = "out";
};

inline fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline int finish(const SolveReport& report, const fs::path& dir, std::ostream& out) {
  write_json(dir / "result.json", to_json(report));
  out << report.kind << ": " << (report.converged ? "converged" : "NOT converged") << " after " << report.iterations
      << " iterations; wrote " << (dir / "result.json").string() << '\n';
  return report.converged ? 0 : 1;
}

struct DiscreteArgs {
  Paths paths;
  std::string variant = "pairwise";
  double lambda = 0.5;
  std::optional<double> alpha;
  double tol = 1e-12;
  std::size_t max_iters = 1000;
  std::uint64_t seed = kDefaultSeed;
  std::string init = "zero";
};

inline int run_discrete(const DiscreteArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const EnergyModel model = io::load_discrete_problem(a.paths.problem);
  CoopConfig config;
  config.variant = *parse_variant(a.variant);
  config.lambda = a.lambda;
  config.alpha = a.alpha;
  config.tol = a.tol;
  config.max_iters = a.max_iters;
  validate(config, model.size());

  std::optional<BoundProfile> initial;
  if (a.init == "random") {
    std::mt19937_64 rng(a.seed);
    initial = BoundProfile::random(model, config.variant, rng, 10.0);
  }
  const DiscreteReport run = solve_discrete(model, config, initial);

  OrderedJson echo = {{"problem", a.paths.problem},
                      {"variant", a.variant},
                      {"lambda", a.lambda},
                      {"alpha", config.alpha_for(model.size())},
                      {"tol", a.tol},
                      {"max_iters", a.max_iters},
                      {"seed", a.seed},
                      {"init", a.init}};
  SolveReport report = make_discrete_report(model, run, std::move(echo));
  const auto dir = prepare_out(a.paths.out);
  write_trace_csv(dir / "trace.csv", report);
  report.wall_time_s = seconds_since(start);
  const int code = finish(report, dir, out);
  out << "certified: " << (run.certificate.certified ? "true" : "false") << ", energy " << run.certificate.upper_bound
      << ", lower bound " << run.certificate.lower_bound << '\n';
  return code;
}

struct SoftArgs {
  Paths paths;
  std::string mode = "sumprod";
  double hbar = 1.0;
  double alpha = 1.0;
  double tol = 1e-10;
  std::size_t max_iters = 1000;
};

inline int run_soft(const SoftArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const EnergyModel model = io::load_discrete_problem(a.paths.problem);
  SoftConfig config;
  config.mode = *parse_soft_mode(a.mode);
  config.hbar = a.hbar;
  config.alpha = a.alpha;
  config.tol = a.tol;
  config.max_iters = a.max_iters;
  const SoftReport run = solve_soft(model, config);

  OrderedJson echo = {{"problem", a.paths.problem}, {"mode", a.mode},   {"hbar", a.hbar},
                      {"alpha", a.alpha},           {"tol", a.tol},     {"max_iters", a.max_iters}};
  SolveReport report = make_soft_report(model, run, std::move(echo));
  const auto dir = prepare_out(a.paths.out);
  write_trace_csv(dir / "trace.csv", report);
  CsvWriter psi(dir / "psi.csv", std::vector<std::string>{"variable", "label", "psi"});
  for (std::size_t i = 0; i < model.size(); ++i)
    for (std::size_t k = 0; k < model.domain_size(i); ++k)
      psi.row(i, model.domain(i).labels[k], run.state.tables[i][k]);
  report.wall_time_s = seconds_since(start);
  return finish(report, dir, out);
}

struct GroundArgs {
  Paths paths;
  std::string grid = "-8:8:401";
  double hbar = 1.0;
  double dt = 1e-4;
  double tol = 1e-8;
  std::string integrator = "kernel";
  std::size_t max_iters = 1'000'000;
};

inline void write_wavefunctions(const fs::path& path, const Grid1D& grid,
                                const std::vector<std::vector<double>>& psi) {
  CsvWriter csv(path, std::vector<std::string>{"particle", "x", "psi"});
  for (std::size_t i = 0; i < psi.size(); ++i)
    for (std::size_t k = 0; k < grid.points; ++k) csv.row(i, grid.x(k), psi[i][k]);
}

inline int run_ground(const GroundArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Grid1D grid = io::parse_grid_spec(a.grid);
  const io::ContinuousInput input = io::load_continuous_problem(a.paths.problem, a.hbar);
  GroundConfig config;
  config.dt = a.dt;
  config.tol = a.tol;
  config.max_iters = a.max_iters;
  config.integrator = *parse_integrator(a.integrator);
  const GroundSolution run = solve_ground(input.problem, grid, config, io::initial_field(input.initial, grid));

  OrderedJson echo = {{"problem", a.paths.problem}, {"grid", a.grid},         {"hbar", a.hbar},
                      {"dt", a.dt},                 {"tol", a.tol},           {"integrator", a.integrator},
                      {"max_iters", a.max_iters}};
  SolveReport report = make_ground_report(input.problem, grid, run, std::move(echo));
  const auto dir = prepare_out(a.paths.out);
  write_wavefunctions(dir / "wavefunction.csv", grid, run.field.psi);
  report.wall_time_s = seconds_since(start);
  const int code = finish(report, dir, out);
  for (std::size_t i = 0; i < run.result.energies.size(); ++i) {
    out << "particle " << i << ": E = " << run.result.energies[i] << ", residual " << run.result.residuals[i] << '\n';
  }
  return code;
}

inline int run_enumerate(const Paths& p, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const EnergyModel model = io::load_discrete_problem(p.problem);
  const auto result = oracle::enumerate(model);
  SolveReport report = make_enumeration_report(model, result, {{"problem", p.problem}});
  report.wall_time_s = seconds_since(start);
  const int code = finish(report, prepare_out(p.out), out);
  out << "optimum energy " << result.energy << '\n';
  return code;
}

struct EigArgs {
  std::string out = "out";
  std::string grid = "-8:8:401";
  std::string potential = "harmonic";
  double m = 1.0;
  double hbar = 1.0;
  double omega = 1.0;
  double center = 0.0;
  double k = 1.0;
};

inline int run_eig(const EigArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Grid1D grid = io::parse_grid_spec(a.grid);
  UnaryPotential v;
  if (a.potential == "harmonic") {
    v = potentials::harmonic(1.0, a.omega, a.center);
  } else if (a.potential == "quartic") {
    v = potentials::quartic(a.k);
  } else {
    v = potentials::box();
  }
  std::vector<double> table(grid.points);
  for (std::size_t k = 0; k < grid.points; ++k) table[k] = v(grid.x(k));
  const auto result = oracle::ground_eig(table, grid.spacing(), a.m, a.hbar);

  OrderedJson echo = {{"grid", a.grid},   {"potential", a.potential}, {"m", a.m}, {"hbar", a.hbar},
                      {"omega", a.omega}, {"center", a.center},       {"k", a.k}};
  SolveReport report = make_eig_report(grid, result, std::move(echo));
  const auto dir = prepare_out(a.out);
  write_wavefunctions(dir / "wavefunction.csv", grid, {result.eigenvector});
  report.wall_time_s = seconds_since(start);
  const int code = finish(report, dir, out);
  out << "lowest eigenvalue " << result.eigenvalue << '\n';
  return code;
}

// Deltas between two result.json files: assignment match and energy
// difference for discrete kinds; per-particle energy differences and
// field overlaps for grid kinds.
inline OrderedJson compare_reports(const SolveReport& a, const SolveReport& b) {
  auto family = [](const std::string& kind) {
    if (kind == "solve-discrete" || kind == "solve-soft" || kind == "oracle-enumerate") return 0;
    if (kind == "solve-ground" || kind == "oracle-eig") return 1;
    throw InputError("cannot compare reports of kind '" + kind + "'");
  };
  if (family(a.kind) != family(b.kind)) {
    throw InputError("cannot compare a " + a.kind + " report with a " + b.kind + " report");
  }
  OrderedJson cmp;
  cmp["a"] = a.kind;
  cmp["b"] = b.kind;
  if (family(a.kind) == 0) {
    const auto xa = a.outputs.at("assignment").get<std::vector<std::size_t>>();
    const auto xb = b.outputs.at("assignment").get<std::vector<std::size_t>>();
    if (xa.size() != xb.size()) throw InputError("assignments have different lengths");
    cmp["assignment_match"] = xa == xb;
    cmp["energy_delta"] = a.outputs.at("energy").get<double>() - b.outputs.at("energy").get<double>();
    return cmp;
  }

  if (a.outputs.at("grid") != b.outputs.at("grid")) throw InputError("reports use different grids");
  const auto ea = a.outputs.at("energies").get<std::vector<double>>();
  const auto eb = b.outputs.at("energies").get<std::vector<double>>();
  const auto pa = a.outputs.at("psi").get<std::vector<std::vector<double>>>();
  const auto pb = b.outputs.at("psi").get<std::vector<std::vector<double>>>();
  if (ea.size() != eb.size() || pa.size() != pb.size()) throw InputError("reports have different particle counts");
  const auto& g = a.outputs.at("grid");
  const Grid1D grid = Grid1D::make(g.at("min").get<double>(), g.at("max").get<double>(), g.at("points").get<std::size_t>());
  std::vector<double> de, ov;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    de.push_back(ea[i] - eb[i]);
    if (pa[i].size() != grid.points || pb[i].size() != grid.points) throw InputError("field length does not match grid");
    ov.push_back(overlap(pa[i], pb[i], grid.spacing()));
  }
  cmp["energy_deltas"] = de;
  cmp["overlaps"] = ov;
  return cmp;
}

inline int run_compare(const std::string& left, const std::string& right, const std::string& out_dir,
                       std::ostream& out) {
  const SolveReport a = report_from_json(io::read_json_file(left));
  const SolveReport b = report_from_json(io::read_json_file(right));
  OrderedJson cmp = compare_reports(a, b);
  cmp["files"] = {left, right};
  write_json(prepare_out(out_dir) / "comparison.json", cmp);
  out << cmp.dump(2) << '\n';
  return 0;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cooperative optimization solvers and reference oracles"};
  app.require_subcommand(1);

  detail::DiscreteArgs discrete;
  auto* sd = app.add_subcommand("solve-discrete", "min-sum cooperative optimization with a lower-bound certificate");
  sd->add_option("problem", discrete.paths.problem, "discrete problem file")->required();
  sd->add_option("--variant", discrete.variant)->check(CLI::IsMember({"general", "pairwise", "alpha", "offset"}));
  sd->add_option("--lambda", discrete.lambda, "cooperation strength in [0,1)");
  sd->add_option("--alpha", discrete.alpha, "strength for the alpha/offset variants (default lambda/(n-1))");
  sd->add_option("--tol", discrete.tol);
  sd->add_option("--max-iters", discrete.max_iters);
  sd->add_option("--seed", discrete.seed, "seed for --init random");
  sd->add_option("--init", discrete.init, "starting tables")->check(CLI::IsMember({"zero", "random"}));
  sd->add_option("--out", discrete.paths.out, "output directory");

  detail::SoftArgs soft;
  auto* ss = app.add_subcommand("solve-soft", "soft-assignment (max-product / sum-product) dynamics");
  ss->add_option("problem", soft.paths.problem, "discrete problem file")->required();
  ss->add_option("--mode", soft.mode)->check(CLI::IsMember({"maxprod", "sumprod"}));
  ss->add_option("--hbar", soft.hbar);
  ss->add_option("--alpha", soft.alpha, "max-product exponent");
  ss->add_option("--tol", soft.tol);
  ss->add_option("--max-iters", soft.max_iters);
  ss->add_option("--out", soft.paths.out, "output directory");

  detail::GroundArgs ground;
  auto* sg = app.add_subcommand("solve-ground", "relax 1-D wavefunctions to a stationary state");
  sg->add_option("problem", ground.paths.problem, "continuous problem file")->required();
  sg->add_option("--grid", ground.grid, "MIN:MAX:N");
  sg->add_option("--hbar", ground.hbar);
  sg->add_option("--dt", ground.dt);
  sg->add_option("--tol", ground.tol);
  sg->add_option("--integrator", ground.integrator)->check(CLI::IsMember({"kernel", "euler"}));
  sg->add_option("--max-iters", ground.max_iters);
  sg->add_option("--out", ground.paths.out, "output directory");

  auto* so = app.add_subcommand("oracle", "reference solutions");
  so->require_subcommand(1);
  detail::Paths enumerate;
  auto* oe = so->add_subcommand("enumerate", "exhaustive minimum of a discrete problem");
  oe->add_option("problem", enumerate.problem)->required();
  oe->add_option("--out", enumerate.out, "output directory");
  detail::EigArgs eig;
  auto* og = so->add_subcommand("eig", "lowest eigenpair of a 1-D Hamiltonian");
  og->add_option("--grid", eig.grid, "MIN:MAX:N");
  og->add_option("--potential", eig.potential)->check(CLI::IsMember({"harmonic", "quartic", "box"}));
  og->add_option("--m", eig.m, "particle mass");
  og->add_option("--hbar", eig.hbar);
  og->add_option("--omega", eig.omega, "harmonic frequency");
  og->add_option("--center", eig.center, "harmonic centre");
  og->add_option("--k", eig.k, "quartic coefficient");
  og->add_option("--out", eig.out, "output directory");

  std::string left, right, compare_out = "out";
  auto* sc = app.add_subcommand("compare", "compare two result.json files");
  sc->add_option("a", left)->required();
  sc->add_option("b", right)->required();
  sc->add_option("--out", compare_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*sd) return detail::run_discrete(discrete, out);
    if (*ss) return detail::run_soft(soft, out);
    if (*sg) return detail::run_ground(ground, out);
    if (*oe) return detail::run_enumerate(enumerate, out);
    if (*og) return detail::run_eig(eig, out);
    if (*sc) return detail::run_compare(left, right, compare_out, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace coopt::cli
