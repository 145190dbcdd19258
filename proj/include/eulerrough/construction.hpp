#pragma once

// Objects of the non-uniform continuity construction: a witness direction
// w* with |d exp(w*)(x*)| = m != 0, the constants C1 (composition) and C2
// (Lipschitz bound of flow maps near the base), compactly supported
// divergence-free bumps, and the paired initial data
//   u0 = u_base + v_n,   u0~ = u_base + v_n + w*/n,   supp v_n in B(x*, r_n).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "eulerrough/builtin.hpp"
#include "eulerrough/errors.hpp"
#include "eulerrough/euler.hpp"
#include "eulerrough/lagrangian.hpp"
#include "eulerrough/spectral.hpp"

namespace eulerrough {

// ---------------------------------------------------------------------------
// Bumps.

struct BumpSpec {
  Point center;
  double radius = 0.5;
  double target_hk_norm = 0.05;
  SobolevIndex k{3.0};
  int mode_seed = 0;  // 0: radial profile; s > 0: profile times an oscillation
};

/// Bumps narrower than this many grid spacings are rejected.
inline constexpr double kBumpMinSpacings = 8.0;

/// Smallest even N resolving a bump of the given radius.
inline int minimal_grid_for_radius(double radius) {
  const int n = static_cast<int>(std::ceil(kBumpMinSpacings * kTwoPi / radius - 1e-9));
  return std::max(8, n + (n % 2));
}

inline void require_resolvable(double radius, Grid g) {
  if (!(radius >= kBumpMinSpacings * g.spacing())) {
    throw Unresolvable(radius, g.spacing(), minimal_grid_for_radius(radius));
  }
}

/// Stream function A exp(-rho^2/(rho^2 - s^2)) g(x) inside the ball, zero
/// outside, before normalization (A = 1).
inline ScalarField bump_stream_function(const BumpSpec& spec, Grid g) {
  const double rho = spec.radius;
  // direction of the oscillation for mode_seed > 0 (golden-angle spacing)
  const double angle = spec.mode_seed * std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double e1 = std::cos(angle);
  const double e2 = std::sin(angle);
  return ScalarField::sample(g, [&](double x1, double x2) {
    const double y1 = periodic_delta(x1, spec.center.x1);
    const double y2 = periodic_delta(x2, spec.center.x2);
    const double s2 = y1 * y1 + y2 * y2;
    if (s2 >= rho * rho) return 0.0;
    double value = std::exp(-rho * rho / (rho * rho - s2));
    if (spec.mode_seed > 0) {
      value *= 1.0 + 0.5 * std::sin(spec.mode_seed * std::numbers::pi * (y1 * e1 + y2 * e2) / rho);
    }
    return value;
  });
}

/// v = grad-perp psi scaled to the requested H^k norm.
inline VectorField make_bump(const BumpSpec& spec, Grid g) {
  if (spec.target_hk_norm < 0.0) throw Error("bump norm must be non-negative");
  if (spec.target_hk_norm == 0.0) return VectorField(g);
  if (!(spec.radius < kTwoPi / 2)) throw Error("bump radius must be below pi");
  require_resolvable(spec.radius, g);
  const Spectrum psi = bump_stream_function(spec, g).spectrum();
  VectorField v{ScalarField::from_spectrum(spectral::derivative(psi, 2)),
                ScalarField::from_spectrum(spectral::derivative(psi, 1))};
  v.x1 *= -1.0;
  v *= spec.target_hk_norm / sobolev_norm(v, spec.k);
  return v;
}

// ---------------------------------------------------------------------------
// Witness.

struct Witness {
  VectorField u_base{Grid(8)};
  VectorField w_star{Grid(8)};  // unit H^k norm as found; see scaled()
  Point x_star;
  double m = 0.0;
  double m_half_eps = 0.0;  // m recomputed with epsilon_fd / 2
  double epsilon_fd = 1e-3;
  int candidate = -1;       // index of the winning candidate

  /// Same witness with w* multiplied by s (m scales linearly).
  Witness scaled(double s) const {
    Witness out = *this;
    out.w_star *= s;
    out.m *= s;
    out.m_half_eps *= s;
    out.epsilon_fd /= s;
    return out;
  }
};

struct WitnessOptions {
  int candidates = 8;
  double epsilon_fd = 1e-3;
  SolverConfig solver{};  // grid must match u_base; t_end is forced to 1
  double richardson_tolerance = 0.2;
  double degenerate_below = 1e-6;
};

/// Divergence-free low modes ordered by |xi|: for each xi in the upper half
/// lattice, psi = cos(xi.x) then sin(xi.x), w = grad-perp psi with unit H^k norm.
inline std::vector<VectorField> witness_candidates(Grid g, int count, SobolevIndex k) {
  std::vector<std::pair<int, int>> lattice;
  for (int a = -4; a <= 4; ++a) {
    for (int b = 0; b <= 4; ++b) {
      if (b == 0 && a <= 0) continue;
      lattice.emplace_back(a, b);
    }
  }
  std::stable_sort(lattice.begin(), lattice.end(), [](auto p, auto q) {
    return p.first * p.first + p.second * p.second < q.first * q.first + q.second * q.second;
  });
  std::vector<VectorField> out;
  for (const auto& [a, b] : lattice) {
    for (int phase = 0; phase < 2 && static_cast<int>(out.size()) < count; ++phase) {
      // psi = cos(a x1 + b x2 + phase*pi/2)
      const double shift = phase * std::numbers::pi / 2;
      VectorField w = VectorField::sample(
          g, [&](double x1, double x2) { return b * std::sin(a * x1 + b * x2 + shift); },
          [&](double x1, double x2) { return -a * std::sin(a * x1 + b * x2 + shift); });
      w *= 1.0 / sobolev_norm(w, k);
      out.push_back(std::move(w));
    }
    if (static_cast<int>(out.size()) >= count) break;
  }
  return out;
}

/// Finite-difference derivative (exp(u + eps w) - exp(u)) / eps as a nodal field.
inline VectorField exp_derivative(const VectorField& u, const FlowMap& base_map,
                                  const VectorField& w, double eps, const SolverConfig& config) {
  VectorField d = exp_map(u + eps * w, config).displacement() - base_map.displacement();
  d *= 1.0 / eps;
  return d;
}

inline Witness find_witness(const VectorField& u_base, const WitnessOptions& opts = {}) {
  SolverConfig config = opts.solver;
  config.grid = u_base.grid();
  config.t_end = 1.0;
  const Grid g = config.grid;
  const FlowMap base_map = exp_map(u_base, config);
  const auto candidates = witness_candidates(g, opts.candidates, config.k);
  Witness best{u_base, VectorField(g), {}, 0.0, 0.0, opts.epsilon_fd, -1};
  std::size_t best_node = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const VectorField d = exp_derivative(u_base, base_map, candidates[c], opts.epsilon_fd, config);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double mag = std::hypot(d.x1.values()[i], d.x2.values()[i]);
      // strict comparison keeps the first of tied maxima
      if (mag > best.m * (1.0 + 1e-9)) {
        best.m = mag;
        best.candidate = static_cast<int>(c);
        best_node = i;
      }
    }
  }
  if (!(best.m >= opts.degenerate_below)) throw DegenerateWitness(best.m);
  best.w_star = candidates[static_cast<std::size_t>(best.candidate)];
  best.x_star = g.node(best_node);
  const VectorField half =
      exp_derivative(u_base, base_map, best.w_star, 0.5 * opts.epsilon_fd, config);
  best.m_half_eps = std::hypot(half.x1.values()[best_node], half.x2.values()[best_node]);
  if (std::abs(best.m_half_eps - best.m) > opts.richardson_tolerance * best.m) {
    throw Error("witness derivative not converged in epsilon: m=" + std::to_string(best.m) +
                ", m(eps/2)=" + std::to_string(best.m_half_eps));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Constants.

struct EstimatedConstants {
  double C1 = 1.5;
  double C2 = 1.5;
  double C1_empirical = 1.0;
  double C2_empirical = 1.0;
  int sample_count = 0;
  double radius = 0.0;
};

inline constexpr double kSafetyFactor = 1.5;

/// Random divergence-free perturbations with H^k norm in (0, radius]. The
/// first sample is the zero perturbation (the base itself).
inline std::vector<VectorField> ball_samples(Grid g, double radius, int count, SobolevIndex k,
                                             std::uint64_t seed) {
  std::vector<VectorField> out;
  out.emplace_back(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 1; i < count; ++i) {
    const std::uint64_t field_seed = rng();
    const double scale = radius * (1.0 - unit(rng));
    if (radius == 0.0) {
      out.emplace_back(g);
      continue;
    }
    VectorField h = builtin::random_velocity(g, 4, 1.0, field_seed);
    h *= scale / sobolev_norm(h, k);
    out.push_back(std::move(h));
  }
  return out;
}

/// C2 = 1.5 * sup over sampled maps exp(u_base + h), ||h|| <= R2, of sup |D phi|.
inline EstimatedConstants estimate_lipschitz_C2(const VectorField& u_base, double R2,
                                                int sample_count, const SolverConfig& solver,
                                                std::uint64_t seed = 1) {
  if (sample_count < 5) throw Error("need at least 5 samples");
  SolverConfig config = solver;
  config.grid = u_base.grid();
  config.t_end = 1.0;
  EstimatedConstants out;
  out.sample_count = sample_count;
  out.radius = R2;
  double worst = 1.0;
  for (const VectorField& h : ball_samples(config.grid, R2, sample_count, config.k, seed)) {
    worst = std::max(worst, exp_map(u_base + h, config).max_jacobian_norm());
  }
  out.C2_empirical = worst;
  out.C2 = kSafetyFactor * worst;
  return out;
}

/// Two-sided constant max(||f o psi||/||f||, ||f||/||f o psi||) in H^s over
/// the given maps psi and fields f.
inline double composition_constant(std::span<const FlowMap> maps, std::span<const ScalarField> fields,
                                   SobolevIndex s) {
  double worst = 1.0;
  for (const FlowMap& psi : maps) {
    for (const ScalarField& f : fields) {
      const double before = sobolev_norm(f, s);
      if (before == 0.0) continue;
      const double after = sobolev_norm(compose_scalar_with_map(f, psi), s);
      worst = std::max({worst, after / before, before / after});
    }
  }
  return worst;
}

/// C1 = 1.5 * the empirical two-sided H^{k-1} constant of f -> f o phi^{-1}
/// over phi in exp(B(u_base, R1)).
inline EstimatedConstants estimate_composition_C1(const VectorField& u_base, double R1,
                                                  int sample_count, const SolverConfig& solver,
                                                  std::uint64_t seed = 1) {
  if (sample_count < 1) throw Error("need at least one sample");
  SolverConfig config = solver;
  config.grid = u_base.grid();
  config.t_end = 1.0;
  const Grid g = config.grid;
  std::vector<FlowMap> inverses;
  for (const VectorField& h : ball_samples(g, R1, sample_count, config.k, seed)) {
    inverses.push_back(invert_map(exp_map(u_base + h, config)));
  }
  std::vector<ScalarField> fields;
  for (int i = 0; i < sample_count; ++i) {
    fields.push_back(builtin::random_vorticity(g, 6, seed * 7919 + static_cast<std::uint64_t>(i)));
  }
  EstimatedConstants out;
  out.sample_count = sample_count;
  out.radius = R1;
  out.C1_empirical = composition_constant(inverses, fields, SobolevIndex{config.k.s - 1.0});
  out.C1 = kSafetyFactor * out.C1_empirical;
  return out;
}

// ---------------------------------------------------------------------------
// Sequences.

struct SequencePair {
  int n = 1;
  VectorField u0;
  VectorField u0_tilde;
  double r_n = 0.0;
  VectorField v_n;
};

/// r_n = m / (8 n C2).
inline double bump_radius(int n, const Witness& witness, const EstimatedConstants& constants) {
  return witness.m / (8.0 * n * constants.C2);
}

/// With band_limited the bump is projected onto the 2/3-dealiased band the
/// solver integrates and renormalized there, so the data actually evolved
/// carries ||v_n||_{H^k} = R/2.
inline SequencePair build_sequence_pair(int n, double R, const Witness& witness,
                                        const EstimatedConstants& constants, Grid grid,
                                        int mode_seed = 0, bool band_limited = false) {
  if (n < 1) throw Error("n must be positive");
  SequencePair out{n, VectorField(grid), VectorField(grid), bump_radius(n, witness, constants),
                   VectorField(grid)};
  if (R > 0.0) require_resolvable(out.r_n, grid);
  BumpSpec spec;
  spec.center = witness.x_star;
  spec.radius = out.r_n;
  spec.target_hk_norm = 0.5 * R;
  spec.mode_seed = mode_seed;
  out.v_n = make_bump(spec, grid);
  if (band_limited && R > 0.0) {
    Spectrum a = out.v_n.x1.spectrum();
    Spectrum b = out.v_n.x2.spectrum();
    spectral::dealias(a);
    spectral::dealias(b);
    out.v_n = VectorField{ScalarField::from_spectrum(a), ScalarField::from_spectrum(b)};
    out.v_n *= spec.target_hk_norm / sobolev_norm(out.v_n, spec.k);
  }
  const VectorField base = resample(witness.u_base, grid);
  out.u0 = base + out.v_n;
  VectorField shift = resample(witness.w_star, grid);
  shift *= 1.0 / n;
  out.u0_tilde = out.u0 + shift;
  return out;
}

}  // namespace eulerrough
