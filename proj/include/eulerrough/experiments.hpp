#pragma once

// Experiment harness: the paired shrinking-bump runs (ratio of output to
// input distance as n grows), the derivative-quotient probe, and a bundle of
// solver/flow-map invariants with a resolution-dependent tolerance table.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eulerrough/builtin.hpp"
#include "eulerrough/construction.hpp"
#include "eulerrough/field_io.hpp"

namespace eulerrough {

inline constexpr const char* kTrendCaveat =
    "At fixed resolution the discrete solution map is smooth. The growth reported here is a "
    "refined-resolution trend (N grows with n) consistent with non-uniform continuity of the "
    "continuum solution map; it is not a proof of it.";

// ---------------------------------------------------------------------------
// Configuration.

struct ExperimentConfig {
  std::optional<double> R;  // unset: R = 2 ||w*||_{H^k}
  double k = 3.0;
  std::vector<int> n_list{1, 2, 4, 8};
  std::string base = "zero";  // builtin name or field file
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  // grid policy N = max(grid_min, grid_per_n * n), or grid_fixed if set
  int grid_min = 128;
  int grid_per_n = 64;
  int grid_fixed = 0;
  // dt policy dt = min(dt_max, cfl_target * h / max|u0|)
  double cfl_target = 0.4;
  double dt_max = 1e-2;

  int witness_candidates = 8;
  double witness_eps = 1e-3;
  int witness_grid = 64;
  double witness_dt = 1e-2;
  std::optional<double> witness_scale;  // unset: smallest scale resolving every n
  double bump_spacings = 10.0;          // target r_n / h for the automatic scale
  int bump_seed = 0;
  bool band_limited_bumps = true;

  double constants_radius = 0.1;
  int constants_samples = 8;

  bool null_control = true;
  bool write_fields = true;
  std::vector<double> eps_list{0.5, 0.25, 0.125};

  int grid_for(int n) const {
    if (grid_fixed > 0) return grid_fixed;
    int g = std::max(grid_min, grid_per_n * n);
    return g + (g % 2);
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

/// Reads "0.25", "1e-3" or "1/4".
inline double parse_number(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  if (slash != std::string::npos) {
    return parse_number(t.substr(0, slash), key) / parse_number(t.substr(slash + 1), key);
  }
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw FormatError("config key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

inline int parse_int(const std::string& text, const std::string& key) {
  const double v = parse_number(text, key);
  if (v != std::floor(v)) throw FormatError("config key '" + key + "': expected an integer");
  return static_cast<int>(v);
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw FormatError("config key '" + key + "': expected true or false");
}

}  // namespace detail

/// key = value lines; '#' starts a comment. "auto" resets R and witness_scale.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "R") {
      c.R = value == "auto" ? std::nullopt : std::optional(detail::parse_number(value, key));
    } else if (key == "k") {
      c.k = detail::parse_number(value, key);
    } else if (key == "n_list") {
      c.n_list.clear();
      for (const auto& item : detail::split_list(value)) c.n_list.push_back(detail::parse_int(item, key));
    } else if (key == "eps_list") {
      c.eps_list.clear();
      for (const auto& item : detail::split_list(value)) c.eps_list.push_back(detail::parse_number(item, key));
    } else if (key == "base") {
      c.base = value;
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
    } else if (key == "out_dir") {
      c.out_dir = value;
    } else if (key == "grid_min") {
      c.grid_min = detail::parse_int(value, key);
    } else if (key == "grid_per_n") {
      c.grid_per_n = detail::parse_int(value, key);
    } else if (key == "grid_fixed") {
      c.grid_fixed = detail::parse_int(value, key);
    } else if (key == "cfl_target") {
      c.cfl_target = detail::parse_number(value, key);
    } else if (key == "dt_max") {
      c.dt_max = detail::parse_number(value, key);
    } else if (key == "witness_candidates") {
      c.witness_candidates = detail::parse_int(value, key);
    } else if (key == "witness_eps") {
      c.witness_eps = detail::parse_number(value, key);
    } else if (key == "witness_grid") {
      c.witness_grid = detail::parse_int(value, key);
    } else if (key == "witness_dt") {
      c.witness_dt = detail::parse_number(value, key);
    } else if (key == "witness_scale") {
      c.witness_scale =
          value == "auto" ? std::nullopt : std::optional(detail::parse_number(value, key));
    } else if (key == "bump_spacings") {
      c.bump_spacings = detail::parse_number(value, key);
    } else if (key == "bump_seed") {
      c.bump_seed = detail::parse_int(value, key);
    } else if (key == "band_limited_bumps") {
      c.band_limited_bumps = detail::parse_bool(value, key);
    } else if (key == "constants_radius") {
      c.constants_radius = detail::parse_number(value, key);
    } else if (key == "constants_samples") {
      c.constants_samples = detail::parse_int(value, key);
    } else if (key == "null_control") {
      c.null_control = detail::parse_bool(value, key);
    } else if (key == "write_fields") {
      c.write_fields = detail::parse_bool(value, key);
    } else {
      throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (c.n_list.empty()) throw FormatError("n_list is empty");
  for (int n : c.n_list) {
    if (n < 1) throw FormatError("n_list entries must be positive");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_config(in);
}

/// "builtin:name", a bare builtin name, or a field file path.
inline VectorField load_velocity(const std::string& source, Grid g) {
  std::string name = source;
  if (name.rfind("builtin:", 0) == 0) name = name.substr(8);
  if (std::filesystem::exists(source)) return resample(io::read_vector(source), g);
  return builtin::named_velocity(name, g);
}

// ---------------------------------------------------------------------------
// Shared setup: witness, constants and scales.

struct ConstructionSetup {
  Witness witness;  // scaled
  EstimatedConstants constants;
  double m_unit = 0.0;
  double witness_scale = 1.0;
  double R = 0.0;
  double w_norm = 0.0;  // ||w*||_{H^k} after scaling
};

inline SolverConfig witness_solver(const ExperimentConfig& c) {
  SolverConfig s;
  s.grid = Grid(c.witness_grid);
  s.dt = c.witness_dt;
  s.k = SobolevIndex{c.k};
  return s;
}

/// Smallest witness m with r_n >= bump_spacings * h(N(n)) for every n.
inline double required_m(const ExperimentConfig& c, const std::vector<int>& ns, double C2) {
  double m = 0.0;
  for (int n : ns) {
    m = std::max(m, 8.0 * n * C2 * c.bump_spacings * kTwoPi / c.grid_for(n));
  }
  return m;
}

inline ConstructionSetup prepare_construction(const ExperimentConfig& c,
                                              const std::vector<int>& ns) {
  const SolverConfig solver = witness_solver(c);
  const VectorField base = load_velocity(c.base, solver.grid);
  WitnessOptions wopts;
  wopts.candidates = c.witness_candidates;
  wopts.epsilon_fd = c.witness_eps;
  wopts.solver = solver;
  const Witness unit = find_witness(base, wopts);

  ConstructionSetup s;
  s.m_unit = unit.m;
  const EstimatedConstants c2 =
      estimate_lipschitz_C2(base, c.constants_radius, c.constants_samples, solver, c.seed);
  const EstimatedConstants c1 = estimate_composition_C1(
      base, c.constants_radius, std::max(2, c.constants_samples / 2), solver, c.seed);
  s.constants = c2;
  s.constants.C1 = c1.C1;
  s.constants.C1_empirical = c1.C1_empirical;
  s.witness_scale = c.witness_scale ? *c.witness_scale : required_m(c, ns, c2.C2) / unit.m;
  s.witness = unit.scaled(s.witness_scale);
  s.w_norm = sobolev_norm(s.witness.w_star, SobolevIndex{c.k});
  s.R = c.R ? *c.R : 2.0 * s.w_norm;
  return s;
}

// ---------------------------------------------------------------------------
// Paired runs.

struct ExperimentRecord {
  int n = 0;
  int N = 0;
  double input_distance = 0.0;
  double output_distance = 0.0;
  double vorticity_distance = 0.0;
  double ratio = 0.0;
  double particle_separation = 0.0;
  double separation_bound = 0.0;
  bool supports_disjoint = false;
  double dt = 0.0;
  double r_n = 0.0;
  std::string error;  // empty when the run completed
};

struct PairFields {
  ScalarField omega;
  ScalarField omega_tilde;
};

struct SeparationCheck {
  double separation = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline SeparationCheck check_separation(const ExperimentRecord& r) {
  return {r.particle_separation, r.separation_bound,
          r.particle_separation >= 0.8 * r.separation_bound};
}

/// Nodes inside the ball where the bump vorticity reaches 1e-3 of its max.
inline std::vector<Point> support_points(const VectorField& v, Point center, double radius) {
  std::vector<Point> pts;
  if (v.max_norm() == 0.0) return pts;
  const ScalarField w = vorticity_of(v);
  const double level = 1e-3 * w.max_norm();
  const Grid g = v.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.node(i);
    if (torus_distance(p, center) < radius && std::abs(w.values()[i]) >= level) pts.push_back(p);
  }
  return pts;
}

inline double min_cloud_distance(std::span<const Point> a, std::span<const Point> b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : a) {
    for (const Point& q : b) best = std::min(best, torus_distance(p, q));
  }
  return best;
}

inline double policy_dt(const ExperimentConfig& c, Grid g, double max_speed) {
  if (max_speed <= 0.0) return c.dt_max;
  return std::min(c.dt_max, c.cfl_target * g.spacing() / max_speed);
}

/// Solve both members of one pair to t = 1 and measure.
inline ExperimentRecord run_pair(int n, double R, const ConstructionSetup& s,
                                 const ExperimentConfig& c, PairFields* fields = nullptr) {
  ExperimentRecord r;
  r.n = n;
  r.N = c.grid_for(n);
  r.separation_bound = s.witness.m / (2.0 * n);
  const Grid g(r.N);
  const SequencePair pair =
      build_sequence_pair(n, R, s.witness, s.constants, g, c.bump_seed, c.band_limited_bumps);
  r.r_n = pair.r_n;
  SolverConfig solver;
  solver.grid = g;
  solver.k = SobolevIndex{c.k};
  solver.t_end = 1.0;
  solver.dt = policy_dt(c, g, std::max(pair.u0.max_norm(), pair.u0_tilde.max_norm()));
  r.dt = solver.dt;

  std::vector<Point> pts{s.witness.x_star};
  const std::vector<Point> cloud = support_points(pair.v_n, s.witness.x_star, pair.r_n);
  pts.insert(pts.end(), cloud.begin(), cloud.end());
  const ParticleRun a = solve_with_particles(pair.u0, solver, pts);
  const ParticleRun b = solve_with_particles(pair.u0_tilde, solver, pts);

  const SobolevIndex k{c.k};
  r.input_distance = sobolev_norm(pair.u0_tilde - pair.u0, k);
  r.output_distance = sobolev_norm(b.final_state.u - a.final_state.u, k);
  r.vorticity_distance =
      sobolev_norm(b.final_state.omega - a.final_state.omega, SobolevIndex{c.k - 1.0});
  r.ratio = r.input_distance > 0.0 ? r.output_distance / r.input_distance : 0.0;
  r.particle_separation = torus_distance(a.positions[0], b.positions[0]);
  if (!cloud.empty()) {
    const std::span<const Point> ca(a.positions.data() + 1, cloud.size());
    const std::span<const Point> cb(b.positions.data() + 1, cloud.size());
    r.supports_disjoint = min_cloud_distance(ca, cb) > g.spacing();
  }
  if (fields) *fields = {a.final_state.omega, b.final_state.omega};
  return r;
}

inline ExperimentRecord failed_record(int n, int N, double bound, const std::string& what) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ExperimentRecord r;
  r.n = n;
  r.N = N;
  r.input_distance = r.output_distance = r.vorticity_distance = r.ratio = nan;
  r.particle_separation = nan;
  r.separation_bound = bound;
  r.error = what;
  return r;
}

/// One record per n; failures are recorded and the remaining n proceed.
inline std::vector<ExperimentRecord> run_records(const ExperimentConfig& c, const ConstructionSetup& s,
                                                 double R, const std::string& field_prefix = "") {
  std::vector<ExperimentRecord> out;
  for (int n : c.n_list) {
    try {
      PairFields f{ScalarField(Grid(8)), ScalarField(Grid(8))};
      out.push_back(run_pair(n, R, s, c, field_prefix.empty() ? nullptr : &f));
      if (!field_prefix.empty()) {
        io::write_field(field_prefix + "omega_n" + std::to_string(n) + ".field", f.omega);
        io::write_field(field_prefix + "omega_tilde_n" + std::to_string(n) + ".field", f.omega_tilde);
      }
    } catch (const Error& e) {
      out.push_back(failed_record(n, c.grid_for(n), s.witness.m / (2.0 * n), e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output.

inline constexpr const char* kRecordsHeader =
    "n,N,input_distance,output_distance,vorticity_distance,ratio,particle_separation,"
    "separation_bound,supports_disjoint";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string records_csv(const std::vector<ExperimentRecord>& records) {
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.n) + "," + std::to_string(r.N) + "," + format_double(r.input_distance) +
           "," + format_double(r.output_distance) + "," + format_double(r.vorticity_distance) + "," +
           format_double(r.ratio) + "," + format_double(r.particle_separation) + "," +
           format_double(r.separation_bound) + "," + (r.supports_disjoint ? "true" : "false") + "\n";
  }
  return out;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

inline nlohmann::ordered_json setup_json(const ConstructionSetup& s, const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["m"] = s.witness.m;
  j["m_unit"] = s.m_unit;
  j["x_star"] = {s.witness.x_star.x1, s.witness.x_star.x2};
  j["witness_candidate"] = s.witness.candidate;
  j["witness_scale"] = s.witness_scale;
  j["w_star_norm"] = s.w_norm;
  j["R"] = s.R;
  j["C1"] = s.constants.C1;
  j["C2"] = s.constants.C2;
  j["C2_empirical"] = s.constants.C2_empirical;
  j["constants_radius"] = s.constants.radius;
  j["constants_samples"] = s.constants.sample_count;
  j["k"] = c.k;
  j["seed"] = c.seed;
  j["base"] = c.base;
  return j;
}

// ---------------------------------------------------------------------------
// Non-uniformity experiment.

struct NonuniformResult {
  ConstructionSetup setup;
  std::vector<ExperimentRecord> records;
  std::vector<ExperimentRecord> control;  // R = 0, empty unless requested
  double slope = 0.0;
  bool increasing = false;
  bool slope_pass = false;
  bool control_pass = true;
  double control_max_ratio = 0.0;
  bool input_exact = true;
  bool vorticity_bounded = true;
  bool all_ran = true;
  bool pass = false;
};

inline void evaluate_trend(NonuniformResult& res) {
  std::vector<double> ns, ratios;
  res.increasing = true;
  for (const auto& r : res.records) {
    if (!r.error.empty()) {
      res.all_ran = false;
      continue;
    }
    if (!ratios.empty() && !(r.ratio > ratios.back())) res.increasing = false;
    ns.push_back(r.n);
    ratios.push_back(r.ratio);
    const double expected = res.setup.w_norm / r.n;
    if (std::abs(r.input_distance - expected) > 1e-10 * expected) res.input_exact = false;
    if (r.vorticity_distance > 2.0 * r.output_distance) res.vorticity_bounded = false;
  }
  res.slope = loglog_slope(ns, ratios);
  res.slope_pass = res.slope >= 0.5;
  for (const auto& r : res.control) {
    if (!r.error.empty()) {
      res.all_ran = false;
      res.control_pass = false;
      continue;
    }
    res.control_max_ratio = std::max(res.control_max_ratio, r.ratio);
    if (!(r.ratio <= 10.0)) res.control_pass = false;
  }
  res.pass = res.all_ran && res.increasing && res.slope_pass && res.control_pass && res.input_exact &&
             res.vorticity_bounded;
}

inline nlohmann::ordered_json nonuniform_summary(const NonuniformResult& res, const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = "nonuniform";
  j["note"] = kTrendCaveat;
  j["setup"] = setup_json(res.setup, c);
  j["slope"] = res.slope;
  j["ratio_increasing"] = res.increasing;
  j["slope_pass"] = res.slope_pass;
  j["input_distance_exact"] = res.input_exact;
  j["vorticity_bounded"] = res.vorticity_bounded;
  j["null_control_run"] = !res.control.empty();
  j["null_control_max_ratio"] = res.control_max_ratio;
  j["null_control_pass"] = res.control_pass;
  auto& per_n = j["per_n"];
  per_n = nlohmann::ordered_json::array();
  for (const auto& r : res.records) {
    nlohmann::ordered_json e;
    e["n"] = r.n;
    e["N"] = r.N;
    e["dt"] = r.dt;
    e["r_n"] = r.r_n;
    e["separation_pass"] = r.error.empty() && check_separation(r).pass;
    e["supports_disjoint"] = r.supports_disjoint;
    // empirical plateau of the output distance per unit R; no target value
    e["output_over_R"] = res.setup.R > 0 ? r.output_distance / res.setup.R : 0.0;
    if (!r.error.empty()) e["error"] = r.error;
    per_n.push_back(e);
  }
  j["pass"] = res.pass;
  return j;
}

inline NonuniformResult run_nonuniform(const ExperimentConfig& c) {
  NonuniformResult res;
  res.setup = prepare_construction(c, c.n_list);
  std::filesystem::path dir;
  std::string prefix;
  if (!c.out_dir.empty()) {
    dir = c.out_dir;
    std::filesystem::create_directories(dir);
    if (c.write_fields) prefix = (dir / "").string();
  }
  res.records = run_records(c, res.setup, res.setup.R, prefix);
  if (c.null_control) res.control = run_records(c, res.setup, 0.0);
  evaluate_trend(res);
  if (!c.out_dir.empty()) {
    write_text(dir / "records.csv", records_csv(res.records));
    if (!res.control.empty()) write_text(dir / "control.csv", records_csv(res.control));
    write_text(dir / "summary.json", nonuniform_summary(res, c).dump(2) + "\n");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Derivative probe.

struct ProbePoint {
  double epsilon = 0.0;
  int N = 0;
  double quotient = 0.0;          // construction-aligned
  double control_quotient = 0.0;  // fixed smooth direction
  std::string error;
};

struct ProbeResult {
  ConstructionSetup setup;
  std::vector<ProbePoint> points;
  double slope = 0.0;
  double control_change = 0.0;  // relative change between the last two eps
  bool slope_pass = false;
  bool control_pass = false;
  bool pass = false;
};

/// ||Phi(u0 + eps w) - Phi(u0)||_{H^k} / eps.
inline double difference_quotient(const VectorField& u0, const VectorField& w, double eps,
                                  const ExperimentConfig& c) {
  if (w.max_norm() == 0.0) return 0.0;
  SolverConfig solver;
  solver.grid = u0.grid();
  solver.k = SobolevIndex{c.k};
  const VectorField shifted = u0 + eps * w;
  solver.dt = policy_dt(c, u0.grid(), std::max(u0.max_norm(), shifted.max_norm()));
  const VectorField a = solve(u0, solver).u;
  const VectorField b = solve(shifted, solver).u;
  return sobolev_norm(b - a, solver.k) / eps;
}

/// The construction-aligned quotient is the pair run at n = 1/eps divided by
/// eps: the base point u_base + v_eps carries a bump of radius m eps/(8 C2),
/// and the step is eps w*. The control perturbs the steady base along a
/// fixed unit-norm smooth field.
inline ProbeResult run_derivative_probe(const ExperimentConfig& c) {
  std::vector<int> ns;
  for (double eps : c.eps_list) {
    if (!(eps > 0.0)) throw Error("eps_list entries must be positive");
    const double inv = 1.0 / eps;
    if (std::abs(inv - std::round(inv)) > 1e-9) throw Error("eps_list entries must be 1/integer");
    ns.push_back(static_cast<int>(std::lround(inv)));
  }
  for (std::size_t i = 1; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] < c.eps_list[i - 1])) throw Error("eps_list must be decreasing");
  }
  ProbeResult res;
  res.setup = prepare_construction(c, ns);
  const Grid control_grid(c.grid_min);
  const VectorField base = load_velocity(c.base, control_grid);
  VectorField smooth = builtin::random_velocity(control_grid, 4, 1.0, c.seed);
  smooth *= 1.0 / sobolev_norm(smooth, SobolevIndex{c.k});

  std::vector<double> inv_eps, quotients;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ProbePoint p;
    p.epsilon = c.eps_list[i];
    p.N = c.grid_for(ns[i]);
    try {
      const ExperimentRecord r = run_pair(ns[i], res.setup.R, res.setup, c);
      p.quotient = r.output_distance / p.epsilon;
      p.control_quotient = difference_quotient(base, smooth, p.epsilon, c);
      inv_eps.push_back(1.0 / p.epsilon);
      quotients.push_back(p.quotient);
    } catch (const Error& e) {
      p.error = e.what();
    }
    res.points.push_back(p);
  }
  res.slope = loglog_slope(inv_eps, quotients);
  res.slope_pass = res.slope >= 0.5;
  const bool complete = quotients.size() == ns.size() && ns.size() >= 2;
  if (complete) {
    const double a = res.points[ns.size() - 2].control_quotient;
    const double b = res.points[ns.size() - 1].control_quotient;
    res.control_change = std::abs(b - a) / std::abs(a);
    res.control_pass = res.control_change <= 0.1;
  }
  res.pass = complete && res.slope_pass && res.control_pass;

  if (!c.out_dir.empty()) {
    const std::filesystem::path dir = c.out_dir;
    std::filesystem::create_directories(dir);
    std::string csv = "epsilon,N,quotient,control_quotient\n";
    for (const auto& p : res.points) {
      csv += format_double(p.epsilon) + "," + std::to_string(p.N) + "," + format_double(p.quotient) +
             "," + format_double(p.control_quotient) + "\n";
    }
    write_text(dir / "derivative.csv", csv);
    nlohmann::ordered_json j;
    j["experiment"] = "derivative";
    j["note"] = kTrendCaveat;
    j["setup"] = setup_json(res.setup, c);
    j["slope"] = res.slope;
    j["slope_pass"] = res.slope_pass;
    j["control_change"] = res.control_change;
    j["control_pass"] = res.control_pass;
    for (const auto& p : res.points) {
      if (!p.error.empty()) j["errors"].push_back({{"epsilon", p.epsilon}, {"error", p.error}});
    }
    j["pass"] = res.pass;
    write_text(dir / "summary.json", j.dump(2) + "\n");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Invariant suite.

struct InvariantCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct InvariantReport {
  int N = 0;
  double dt = 0.0;
  std::vector<InvariantCheck> checks;
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["N"] = N;
    j["dt"] = dt;
    for (const auto& c : checks) {
      nlohmann::ordered_json e;
      e["name"] = c.name;
      e["value"] = std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json();
      e["tolerance"] = c.tolerance;
      e["pass"] = c.pass;
      if (!c.note.empty()) e["note"] = c.note;
      j["checks"].push_back(e);
    }
    j["pass"] = pass();
    return j;
  }
};

/// Tolerances by resolution band, fixed from refinement runs.
struct ToleranceBand {
  int min_n;
  double steady, conservation, scaling, frozen, oracle, d0_exp;
};

inline const ToleranceBand& tolerance_band(int n) {
  static const ToleranceBand bands[] = {
      {128, 1e-6, 1e-6, 1e-6, 1e-4, 1e-4, 5e-2},
      {64, 1e-6, 1e-6, 1e-6, 2e-4, 1e-4, 5e-2},
      {32, 1e-6, 1e-6, 1e-6, 1e-4, 1e-4, 5e-2},
      {8, 1e-6, 1e-6, 1e-6, 1e-6, 1e-4, 5e-2},
  };
  for (const auto& b : bands) {
    if (n >= b.min_n) return b;
  }
  return bands[3];
}

/// Random data for the suite: modes well inside the dealiased band.
inline int suite_max_mode(int n) { return std::clamp(n / 16, 1, 8); }

inline InvariantReport run_invariant_suite(int n, double dt, std::uint64_t seed = 1) {
  InvariantReport rep;
  rep.N = n;
  rep.dt = dt;
  const Grid g(n);
  const ToleranceBand& tol = tolerance_band(n);
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = dt;
  const SobolevIndex k3{3.0};
  const VectorField random = builtin::random_velocity(g, suite_max_mode(n), 1.0, seed);

  auto run = [&rep](const std::string& name, double tolerance, auto&& body) {
    InvariantCheck c{name, std::numeric_limits<double>::quiet_NaN(), tolerance, false, ""};
    try {
      c.value = body();
      c.pass = c.value <= tolerance;
    } catch (const CflViolation& e) {
      c.note = std::string("CFL violation, Courant number ") + format_double(e.courant());
    } catch (const Error& e) {
      c.note = e.what();
    }
    rep.checks.push_back(c);
  };

  for (const char* name : {"taylor_green", "shear"}) {
    run(std::string("steady_") + name, tol.steady, [&] {
      const VectorField u0 = builtin::named_velocity(name, g);
      return sobolev_norm(solve(u0, cfg).u - u0, k3) / sobolev_norm(u0, k3);
    });
  }
  run("energy_enstrophy_drift", tol.conservation, [&] {
    const auto rows = solve_with_diagnostics(random, cfg, 10);
    double drift = 0.0;
    for (const auto& r : rows) {
      drift = std::max({drift, std::abs(r.energy / rows.front().energy - 1.0),
                        std::abs(r.enstrophy / rows.front().enstrophy - 1.0)});
    }
    return drift;
  });
  run("scaling_T_0.5", tol.scaling, [&] {
    SolverConfig half = cfg;
    half.t_end = 0.5;
    const VectorField direct = solve(random, half).u;
    return sobolev_norm(direct - apply_scaling_map(random, 0.5, cfg).u, k3) / sobolev_norm(direct, k3);
  });
  run("frozen_vorticity", tol.frozen, [&] { return frozen_vorticity_residual(random, cfg); });
  run("exp_vs_lagrangian_ode", tol.oracle, [&] {
    SolverConfig coarse = cfg;
    coarse.dt = std::max(dt, 2e-2);
    const FlowMap a = exp_map(random, cfg);
    const FlowMap b = exp_map_via_ode(random, coarse);
    return (a.displacement() - b.displacement()).max_norm();
  });
  run("d0_exp_identity", tol.d0_exp, [&] {
    VectorField w = builtin::random_velocity(g, suite_max_mode(n), 1.0, seed + 100);
    const double eps = 1e-3;
    const VectorField d = exp_map(eps * w, cfg).displacement();
    return ((1.0 / eps) * d - w).max_norm() / w.max_norm();
  });
  const double bump_radius = 10.0 * g.spacing();
  if (bump_radius < 3.0) {
    run("bump_divergence", 1e-10, [&] {
      BumpSpec spec;
      spec.center = {1.0, 1.0};
      spec.radius = bump_radius;
      spec.target_hk_norm = 1.0;
      spec.mode_seed = 1;
      const VectorField v = make_bump(spec, g);
      return divergence_of(v).max_norm() / v.max_norm();
    });
  } else {
    rep.checks.push_back({"bump_divergence", 0.0, 1e-10, true, "skipped: grid too coarse for a bump"});
  }
  return rep;
}

}  // namespace eulerrough
