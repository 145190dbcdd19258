#pragma once

// Named initial data and seeded random band-limited fields.

#include <cstdint>
#include <random>
#include <string>

#include "eulerrough/field.hpp"
#include "eulerrough/spectral.hpp"

namespace eulerrough::builtin {

/// omega = 2 sin x1 sin x2, a Laplacian eigenfunction (steady Taylor-Green cell).
inline ScalarField taylor_green_vorticity(Grid g, double amplitude = 1.0) {
  return ScalarField::sample(
      g, [amplitude](double x, double y) { return 2.0 * amplitude * std::sin(x) * std::sin(y); });
}

/// omega = cos x2, the steady shear u = (-sin x2, 0).
inline ScalarField shear_vorticity(Grid g, double amplitude = 1.0) {
  return ScalarField::sample(g, [amplitude](double, double y) { return amplitude * std::cos(y); });
}

/// Random zero-mean vorticity with modes 1 <= |xi| <= max_mode.
///
/// Coefficients are drawn in a fixed lattice order that does not depend on
/// the grid, so the same seed produces the same continuum field at every N.
inline ScalarField random_vorticity(Grid g, int max_mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Spectrum s(g);
  const int lim = std::min(max_mode, g.n() / 2 - 1);
  for (int k1 = -max_mode; k1 <= max_mode; ++k1) {
    for (int k2 = 0; k2 <= max_mode; ++k2) {
      if (k2 == 0 && k1 <= 0) continue;
      const int q = k1 * k1 + k2 * k2;
      if (q > max_mode * max_mode) continue;
      const double re = normal(rng);
      const double im = normal(rng);
      if (std::abs(k1) > lim || k2 > lim) continue;
      // Mild spectral decay keeps the field smooth at every max_mode.
      const double amp = 1.0 / (1.0 + 0.25 * q);
      s.set_mode(k1, k2, amp * Complex(re, im));
    }
  }
  return ScalarField::from_spectrum(s);
}

/// Divergence-free random velocity scaled to the given nodal max speed.
inline VectorField random_velocity(Grid g, int max_mode, double max_speed, std::uint64_t seed) {
  VectorField u = biot_savart(random_vorticity(g, max_mode, seed));
  const double m = u.max_norm();
  if (m > 0.0) u *= max_speed / m;
  return u;
}

inline VectorField taylor_green_velocity(Grid g, double amplitude = 1.0) {
  return biot_savart(taylor_green_vorticity(g, amplitude));
}

inline VectorField shear_velocity(Grid g, double amplitude = 1.0) {
  return biot_savart(shear_vorticity(g, amplitude));
}

/// Resolve "zero", "taylor_green", "shear", "mixed", or "random[:seed]".
inline VectorField named_velocity(const std::string& name, Grid g) {
  if (name == "zero") return VectorField(g);
  if (name == "taylor_green") return taylor_green_velocity(g);
  if (name == "shear") return shear_velocity(g);
  if (name == "mixed") {
    return biot_savart(shear_vorticity(g) + taylor_green_vorticity(g, 0.1));
  }
  if (name.rfind("random", 0) == 0) {
    std::uint64_t seed = 1;
    if (const auto colon = name.find(':'); colon != std::string::npos) {
      seed = std::stoull(name.substr(colon + 1));
    }
    return random_velocity(g, 8, 1.0, seed);
  }
  throw Error("unknown builtin field '" + name + "'");
}

}  // namespace eulerrough::builtin
