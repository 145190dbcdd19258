// Command-line front end: solve, expmap, check, witness, constants, experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "eulerrough/experiments.hpp"

using namespace eulerrough;

namespace {

struct GridArgs {
  int n = 128;
  double dt = 1e-3;
  double t_end = 1.0;
  std::string init = "builtin:taylor_green";
};

void add_grid_args(CLI::App* cmd, GridArgs& a, bool with_t_end) {
  cmd->add_option("--n", a.n, "grid points per axis (even, >= 8)")->capture_default_str();
  cmd->add_option("--dt", a.dt, "time step upper bound")->capture_default_str();
  if (with_t_end) cmd->add_option("--t-end", a.t_end, "final time")->capture_default_str();
  cmd->add_option("--init", a.init, "initial velocity: field file or builtin:name")->capture_default_str();
}

SolverConfig solver_config(const GridArgs& a) {
  SolverConfig c;
  c.grid = Grid(a.n);
  c.dt = a.dt;
  c.t_end = a.t_end;
  return c;
}

// Field files and builtins both land on the requested grid.
VectorField initial_velocity(const GridArgs& a) { return load_velocity(a.init, Grid(a.n)); }

int run_solve(const GridArgs& a, const std::string& out, const std::string& diagnostics, int stride) {
  const SolverConfig config = solver_config(a);
  std::ofstream csv;
  if (!diagnostics.empty()) {
    csv.open(diagnostics);
    if (!csv) throw Error("cannot write '" + diagnostics + "'");
    csv << "t,energy,enstrophy,h3norm,courant\n";
  }
  const SolutionSnapshot s = solve(
      initial_velocity(a), config,
      [&](EulerStepper& stepper, double dt) {
        if (!csv.is_open()) return;
        const Diagnostics d = stepper.diagnostics(dt);
        csv << format_double(d.t) << ',' << format_double(d.energy) << ',' << format_double(d.enstrophy)
            << ',' << format_double(d.hk_norm) << ',' << format_double(d.courant) << '\n';
      },
      stride);
  if (!out.empty()) io::write_field(out, s.u);
  std::printf("t=%.17g energy=%.17g enstrophy=%.17g\n", s.t, s.energy, s.enstrophy);
  return 0;
}

int run_expmap(const GridArgs& a, const std::string& method, const std::string& out) {
  const SolverConfig config = solver_config(a);
  const VectorField u0 = initial_velocity(a);
  const FlowMap phi = method == "ode" ? exp_map_via_ode(u0, config) : exp_map(u0, config);
  if (!out.empty()) io::write_field(out, phi.displacement());
  std::printf("max_displacement=%.17g max_jacobian_norm=%.17g\n", phi.displacement().max_norm(),
              phi.max_jacobian_norm());
  return 0;
}

int run_witness(const std::string& base, int candidates, double eps, int n, double dt,
                const std::string& out) {
  SolverConfig solver;
  solver.grid = Grid(n);
  solver.dt = dt;
  WitnessOptions opts;
  opts.candidates = candidates;
  opts.epsilon_fd = eps;
  opts.solver = solver;
  const VectorField u_base = load_velocity(base, solver.grid);
  const Witness w = find_witness(u_base, opts);
  const std::filesystem::path json_path = out;
  if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
  const std::filesystem::path stem = json_path.parent_path() / json_path.stem();
  const std::string w_path = stem.string() + "_w_star.field";
  const std::string u_path = stem.string() + "_u_base.field";
  io::write_field(w_path, w.w_star);
  io::write_field(u_path, w.u_base);
  nlohmann::ordered_json j;
  j["m"] = w.m;
  j["m_half_eps"] = w.m_half_eps;
  j["x_star"] = {w.x_star.x1, w.x_star.x2};
  j["epsilon_fd"] = w.epsilon_fd;
  j["candidate"] = w.candidate;
  j["w_star_hk_norm"] = sobolev_norm(w.w_star, solver.k);
  j["u_base_hk_norm"] = sobolev_norm(w.u_base, solver.k);
  j["n"] = n;
  j["w_star_path"] = w_path;
  j["u_base_path"] = u_path;
  write_text(json_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_constants(const std::string& base, double radius, int samples, int n, double dt,
                  std::uint64_t seed) {
  SolverConfig solver;
  solver.grid = Grid(n);
  solver.dt = dt;
  const VectorField u_base = load_velocity(base, solver.grid);
  const EstimatedConstants c2 = estimate_lipschitz_C2(u_base, radius, samples, solver, seed);
  const EstimatedConstants c1 = estimate_composition_C1(u_base, radius, samples, solver, seed);
  nlohmann::ordered_json j;
  j["C1"] = c1.C1;
  j["C2"] = c2.C2;
  j["samples"] = samples;
  j["radius"] = radius;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral 2D Euler solver, flow maps and shrinking-bump experiments"};
  app.require_subcommand(1);

  GridArgs grid;
  std::string out, diagnostics, method = "direct";
  int stride = 1;
  auto* solve_cmd = app.add_subcommand("solve", "integrate Euler from a velocity field");
  add_grid_args(solve_cmd, grid, true);
  solve_cmd->add_option("--out", out, "final velocity field file");
  solve_cmd->add_option("--diagnostics", diagnostics, "CSV of t,energy,enstrophy,h3norm,courant");
  solve_cmd->add_option("--stride", stride, "steps between diagnostics rows")->capture_default_str();

  auto* exp_cmd = app.add_subcommand("expmap", "time-1 flow map of the Euler solution");
  add_grid_args(exp_cmd, grid, false);
  exp_cmd->add_option("--method", method, "direct or ode")
      ->check(CLI::IsMember({"direct", "ode"}))
      ->capture_default_str();
  exp_cmd->add_option("--out", out, "displacement field file");

  auto* check_cmd = app.add_subcommand("check", "invariant checks");
  check_cmd->require_subcommand(1);
  auto* frozen_cmd = check_cmd->add_subcommand("frozen", "frozen-in vorticity residual");
  add_grid_args(frozen_cmd, grid, false);
  std::uint64_t seed = 1;
  auto* inv_cmd = check_cmd->add_subcommand("invariants", "solver and flow-map invariant suite");
  inv_cmd->add_option("--n", grid.n, "grid points per axis")->capture_default_str();
  inv_cmd->add_option("--dt", grid.dt, "time step")->capture_default_str();
  inv_cmd->add_option("--seed", seed, "random data seed")->capture_default_str();

  std::string base = "builtin:zero";
  int candidates = 8, samples = 8;
  double eps = 1e-3, radius = 0.1;
  int aux_n = 64;
  double aux_dt = 1e-2;
  std::string witness_out = "witness.json";
  auto* witness_cmd = app.add_subcommand("witness", "search a witness direction and point");
  witness_cmd->add_option("--base", base, "base velocity: field file or builtin:name")->capture_default_str();
  witness_cmd->add_option("--candidates", candidates)->capture_default_str();
  witness_cmd->add_option("--eps", eps, "finite-difference step")->capture_default_str();
  witness_cmd->add_option("--n", aux_n)->capture_default_str();
  witness_cmd->add_option("--dt", aux_dt)->capture_default_str();
  witness_cmd->add_option("--out", witness_out)->capture_default_str();

  auto* constants_cmd = app.add_subcommand("constants", "estimate C1 and C2 by sampling");
  constants_cmd->add_option("--base", base)->capture_default_str();
  constants_cmd->add_option("--radius", radius)->capture_default_str();
  constants_cmd->add_option("--samples", samples)->capture_default_str();
  constants_cmd->add_option("--n", aux_n)->capture_default_str();
  constants_cmd->add_option("--dt", aux_dt)->capture_default_str();
  constants_cmd->add_option("--seed", seed)->capture_default_str();

  std::string config_path;
  auto* exp_group = app.add_subcommand("experiment", "run an experiment from a config file");
  exp_group->require_subcommand(1);
  auto* nonuniform_cmd = exp_group->add_subcommand("nonuniform", "ratio growth along shrinking bumps");
  nonuniform_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  auto* derivative_cmd = exp_group->add_subcommand("derivative", "difference quotients along shrinking bumps");
  derivative_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors share the runtime-error exit code
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve_cmd) return run_solve(grid, out, diagnostics, stride);
    if (*exp_cmd) return run_expmap(grid, method, out);
    if (*frozen_cmd) {
      const double r = frozen_vorticity_residual(initial_velocity(grid), solver_config(grid));
      std::printf("n,dt,residual\n%d,%.17g,%.17g\n", grid.n, grid.dt, r);
      return 0;
    }
    if (*inv_cmd) {
      const InvariantReport rep = run_invariant_suite(grid.n, grid.dt, seed);
      std::cout << rep.to_json().dump(2) << "\n";
      return rep.pass() ? 0 : 2;
    }
    if (*witness_cmd) return run_witness(base, candidates, eps, aux_n, aux_dt, witness_out);
    if (*constants_cmd) return run_constants(base, radius, samples, aux_n, aux_dt, seed);
    if (*nonuniform_cmd) {
      const NonuniformResult res = run_nonuniform(load_config(config_path));
      std::cout << records_csv(res.records);
      std::printf("slope=%.6g increasing=%d control_max_ratio=%.6g pass=%d\n", res.slope,
                  res.increasing, res.control_max_ratio, res.pass);
      return res.pass ? 0 : 2;
    }
    if (*derivative_cmd) {
      const ProbeResult res = run_derivative_probe(load_config(config_path));
      for (const auto& p : res.points) {
        std::printf("eps=%.6g N=%d quotient=%.10g control=%.10g %s\n", p.epsilon, p.N, p.quotient,
                    p.control_quotient, p.error.c_str());
      }
      std::printf("slope=%.6g control_change=%.6g pass=%d\n", res.slope, res.control_change, res.pass);
      return res.pass ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
