// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "eulerrough/experiments.hpp"

using namespace eulerrough;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverConfig config_for(int n, double dt, double t_end = 1.0) {
  SolverConfig c;
  c.grid = Grid(n);
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const SobolevIndex kH3{3.0};

Outcome steady_states() {
  const Grid g(128);
  std::string detail;
  bool pass = true;
  const std::pair<const char*, ScalarField> cases[] = {
      {"2 sin x1 sin x2", builtin::taylor_green_vorticity(g)},
      {"cos x2", builtin::shear_vorticity(g)},
  };
  for (const auto& [name, omega] : cases) {
    const auto t0 = Clock::now();
    const VectorField u0 = biot_savart(omega);
    const double d = sobolev_norm(solve(u0, config_for(128, 1e-3)).u - u0, kH3);
    const double secs = seconds_since(t0);
    pass = pass && d <= 1e-6 && secs <= 30.0;
    detail += fmt("[%s: %.2e in %.1fs] ", name, d, secs);
  }
  return {pass, detail};
}

Outcome conservation() {
  const Grid g(128);
  const VectorField u0 = builtin::random_velocity(g, 8, 1.0, 11);
  const auto rows = solve_with_diagnostics(u0, config_for(128, 1e-3), 1);
  double energy = 0.0, enstrophy = 0.0;
  for (const auto& r : rows) {
    energy = std::max(energy, std::abs(r.energy / rows.front().energy - 1.0));
    enstrophy = std::max(enstrophy, std::abs(r.enstrophy / rows.front().enstrophy - 1.0));
  }
  return {energy <= 1e-6 && enstrophy <= 1e-6,
          fmt("energy drift %.2e, enstrophy drift %.2e over %zu rows", energy, enstrophy, rows.size())};
}

Outcome scaling() {
  const Grid g(128);
  const VectorField u0 = builtin::random_velocity(g, 8, 1.0, 7);
  bool pass = true;
  std::string detail;
  for (double T : {0.25, 0.5, 2.0}) {
    const VectorField direct = solve(u0, config_for(128, 1e-3, T)).u;
    const VectorField scaled = apply_scaling_map(u0, T, config_for(128, 1e-3)).u;
    const double d = sobolev_norm(direct - scaled, kH3);
    pass = pass && d <= 1e-6;
    detail += fmt("[T=%g: %.2e] ", T, d);
  }
  return {pass, detail};
}

Outcome frozen_in() {
  const VectorField coarse = builtin::random_velocity(Grid(64), 8, 1.0, 1);
  const VectorField fine = builtin::random_velocity(Grid(128), 8, 1.0, 1);
  const double a = frozen_vorticity_residual(coarse, config_for(64, 2e-3));
  const double b = frozen_vorticity_residual(fine, config_for(128, 1e-3));
  return {b <= 1e-4 && a / b >= 4.0,
          fmt("N=64 dt=2e-3: %.2e, N=128 dt=1e-3: %.2e, reduction %.1fx", a, b, a / b)};
}

Outcome oracle() {
  auto gap = [](int n, double dt, double ode_dt) {
    const VectorField u0 = builtin::random_velocity(Grid(n), 8, 1.0, 3);
    const FlowMap a = exp_map(u0, config_for(n, dt));
    const FlowMap b = exp_map_via_ode(u0, config_for(n, ode_dt));
    return (a.displacement() - b.displacement()).max_norm();
  };
  const double coarse = gap(64, 1e-3, 2e-2);
  const double fine = gap(128, 5e-4, 1e-2);
  return {coarse <= 1e-4 && fine < coarse,
          fmt("N=64: %.2e, refined (N=128, halved steps): %.2e", coarse, fine)};
}

Outcome d0_exp() {
  const Grid g(64);
  double worst3 = 0.0, worst4 = 0.0;
  bool improving = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const VectorField w = builtin::random_velocity(g, 6, 1.0, 100 + seed);
    auto rel = [&](double eps) {
      const VectorField d = exp_map(eps * w, config_for(64, 1e-2)).displacement();
      return ((1.0 / eps) * d - w).max_norm() / w.max_norm();
    };
    const double e3 = rel(1e-3);
    const double e4 = rel(1e-4);
    worst3 = std::max(worst3, e3);
    worst4 = std::max(worst4, e4);
    improving = improving && e4 < e3;
  }
  return {worst3 <= 5e-2 && improving,
          fmt("worst relative error %.2e at eps=1e-3, %.2e at eps=1e-4", worst3, worst4)};
}

std::filesystem::path out_root() { return std::filesystem::current_path() / "acceptance_out"; }

Outcome separation() {
  ExperimentConfig c;
  c.n_list = {2};
  c.grid_fixed = 256;
  c.null_control = false;
  c.out_dir = (out_root() / "separation").string();
  const auto t0 = Clock::now();
  const NonuniformResult res = run_nonuniform(c);
  const double secs = seconds_since(t0);
  const ExperimentRecord& r = res.records.front();
  if (!r.error.empty()) return {false, r.error};
  const SeparationCheck s = check_separation(r);
  return {s.pass && r.supports_disjoint && secs <= 600.0,
          fmt("N=%d: separation %.4f vs 0.8*m/(2n) = %.4f, supports disjoint %s, %.0fs", r.N,
              s.separation, 0.8 * s.bound, r.supports_disjoint ? "yes" : "no", secs)};
}

Outcome nonuniform() {
  ExperimentConfig c;
  c.out_dir = (out_root() / "nonuniform").string();
  const auto t0 = Clock::now();
  const NonuniformResult res = run_nonuniform(c);
  const double secs = seconds_since(t0);
  std::string ratios;
  for (const auto& r : res.records) ratios += fmt("%g ", r.ratio);
  return {res.all_ran && res.increasing && res.slope_pass && res.control_pass && secs <= 3600.0,
          fmt("ratios [ %s] slope %.3f, increasing %s, null-control max ratio %.3f, %.0fs",
              ratios.c_str(), res.slope, res.increasing ? "yes" : "no", res.control_max_ratio, secs)};
}

Outcome derivative() {
  ExperimentConfig c;
  c.out_dir = (out_root() / "derivative").string();
  const ProbeResult res = run_derivative_probe(c);
  std::string qs;
  for (const auto& p : res.points) qs += fmt("%g ", p.quotient);
  return {res.pass, fmt("quotients [ %s] slope %.3f, smooth-direction change %.2e", qs.c_str(),
                        res.slope, res.control_change)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"steady states are fixed points", steady_states},
      {"energy and enstrophy conservation", conservation},
      {"scaling law", scaling},
      {"frozen-in vorticity", frozen_in},
      {"direct vs Lagrangian-ODE exponential map", oracle},
      {"derivative of exp at zero is the identity", d0_exp},
      {"particle separation and disjoint supports at n=2", separation},
      {"non-uniformity trend with null control", nonuniform},
      {"derivative quotient growth", derivative},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
