#pragma once

// Fourier-multiplier calculus on the torus: derivatives, the zero-mean inverse
// Laplacian, curl / Biot-Savart, Sobolev norms, and spectral resampling.

#include <cmath>
#include <numbers>

#include "eulerrough/field.hpp"

namespace eulerrough {

/// Sobolev index s of the norm ||f||_{H^s}; the solution space uses s = k > 2.
struct SobolevIndex {
  double s = 3.0;
};

/// Relative tolerance on the mean of data handed to a Poisson solve.
inline constexpr double kMeanTolerance = 1e-8;

namespace spectral {

inline Complex derivative_multiplier(int xi, int n) {
  if (xi == n / 2) return {0.0, 0.0};  // odd-ball Nyquist mode
  return {0.0, static_cast<double>(xi)};
}

inline Spectrum derivative(Spectrum s, int axis) {
  const int n = s.grid().n();
  if (axis == 1) {
    s.apply([n](int k1, int) { return derivative_multiplier(k1, n); });
  } else {
    s.apply([n](int, int k2) { return derivative_multiplier(k2, n); });
  }
  return s;
}

inline Spectrum laplacian(Spectrum s) {
  s.apply([](int k1, int k2) { return Complex(-static_cast<double>(k1 * k1 + k2 * k2), 0.0); });
  return s;
}

/// Inverse Laplacian on zero-mean data; the mean mode is dropped.
inline Spectrum inverse_laplacian(Spectrum s) {
  s.apply([](int k1, int k2) {
    const int q = k1 * k1 + k2 * k2;
    return q == 0 ? Complex(0.0, 0.0) : Complex(-1.0 / q, 0.0);
  });
  return s;
}

/// Zero every mode outside the 2/3-rule box.
inline Spectrum& dealias(Spectrum& s) {
  const int cut = s.grid().dealias_cutoff();
  s.apply([cut](int k1, int k2) {
    return (std::abs(k1) <= cut && k2 <= cut) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
  });
  return s;
}

inline double sobolev_norm_squared(const Spectrum& s, double index) {
  const Grid& g = s.grid();
  const int n = g.n();
  const int h = g.half();
  double sum = 0.0;
  for (int a = 0; a < n; ++a) {
    const int k1 = g.wavenumber(a);
    for (int b = 0; b < h; ++b) {
      const double q = 1.0 + static_cast<double>(k1 * k1 + b * b);
      const double weight = index == 0.0 ? 1.0 : std::pow(q, index);
      sum += s.column_weight(b) * weight * std::norm(s.at(a, b));
    }
  }
  return kTwoPi * kTwoPi * sum;
}

/// Velocity (u1, u2) = grad-perp of the stream function solving lap psi = omega.
inline std::array<Spectrum, 2> biot_savart(const Spectrum& omega) {
  Spectrum psi = inverse_laplacian(omega);
  Spectrum u1 = derivative(psi, 2);
  u1 *= -1.0;
  return {std::move(u1), derivative(psi, 1)};
}

inline Spectrum curl(const Spectrum& u1, const Spectrum& u2) {
  return derivative(u2, 1) - derivative(u1, 2);
}

inline void require_zero_mean(const Spectrum& s, double max_norm) {
  const double mean = s.mean();
  if (std::abs(mean) > kMeanTolerance * max_norm && std::abs(mean) > 0.0) {
    throw NonZeroMean(mean, max_norm);
  }
}

/// Spectral resampling. Refinement zero-pads, splitting a Nyquist coefficient
/// evenly between +N/2 and -N/2; coarsening truncates and folds the +-M/2
/// pair back together, so coarsen(refine(f)) == f.
inline Spectrum resample(const Spectrum& s, Grid target) {
  const Grid& src = s.grid();
  const int n = src.n();
  const int m = target.n();
  Spectrum out(target);
  if (n == m) return s;
  // Enumerate the full source lattice including Hermitian partners.
  for (int a = 0; a < n; ++a) {
    const int k1 = src.wavenumber(a);
    for (int k2 = -n / 2 + 1; k2 <= n / 2; ++k2) {
      Complex c = s.mode(k1, k2);
      if (c == Complex(0.0, 0.0)) continue;
      if (m > n) {
        // Split source Nyquist modes across +-n/2 in the finer lattice.
        const bool nyq1 = (k1 == n / 2);
        const bool nyq2 = (k2 == n / 2);
        for (int s1 = 0; s1 < (nyq1 ? 2 : 1); ++s1) {
          for (int s2 = 0; s2 < (nyq2 ? 2 : 1); ++s2) {
            const int q1 = (nyq1 && s1 == 1) ? -k1 : k1;
            const int q2 = (nyq2 && s2 == 1) ? -k2 : k2;
            const double frac = (nyq1 ? 0.5 : 1.0) * (nyq2 ? 0.5 : 1.0);
            if (q2 > 0 || (q2 == 0)) {
              out.at(((q1 % m) + m) % m, q2) += frac * c;
            }
          }
        }
      } else {
        if (std::abs(k1) > m / 2 || std::abs(k2) > m / 2) continue;
        if (k2 >= 0) {
          out.at(((k1 % m) + m) % m, k2) += c;
        } else if (k2 == -m / 2) {
          // -m/2 aliases onto the stored +m/2 column.
          out.at(((k1 % m) + m) % m, m / 2) += c;
        }
      }
    }
  }
  return out;
}

}  // namespace spectral

// ---------------------------------------------------------------------------
// Field-level operations.

inline ScalarField spectral_derivative(const ScalarField& f, int axis) {
  if (axis != 1 && axis != 2) throw Error("axis must be 1 or 2");
  return ScalarField::from_spectrum(spectral::derivative(f.spectrum(), axis));
}

inline ScalarField solve_poisson_zero_mean(const ScalarField& g) {
  Spectrum s = g.spectrum();
  spectral::require_zero_mean(s, g.max_norm());
  return ScalarField::from_spectrum(spectral::inverse_laplacian(std::move(s)));
}

inline ScalarField vorticity_of(const VectorField& u) {
  return ScalarField::from_spectrum(spectral::curl(u.x1.spectrum(), u.x2.spectrum()));
}

inline ScalarField divergence_of(const VectorField& u) {
  return ScalarField::from_spectrum(spectral::derivative(u.x1.spectrum(), 1) +
                                    spectral::derivative(u.x2.spectrum(), 2));
}

/// max|div u| / max|u|, 0 for the zero field.
inline double relative_divergence(const VectorField& u) {
  const double scale = u.max_norm();
  if (scale == 0.0) return 0.0;
  return divergence_of(u).max_norm() / scale;
}

inline VectorField velocity_from_spectra(const std::array<Spectrum, 2>& u) {
  return {ScalarField::from_spectrum(u[0]), ScalarField::from_spectrum(u[1])};
}

inline VectorField biot_savart(const ScalarField& omega) {
  Spectrum s = omega.spectrum();
  spectral::require_zero_mean(s, omega.max_norm());
  return velocity_from_spectra(spectral::biot_savart(s));
}

inline double sobolev_norm(const ScalarField& f, SobolevIndex k) {
  return std::sqrt(spectral::sobolev_norm_squared(f.spectrum(), k.s));
}

inline double sobolev_norm(const VectorField& u, SobolevIndex k) {
  return std::sqrt(spectral::sobolev_norm_squared(u.x1.spectrum(), k.s) +
                   spectral::sobolev_norm_squared(u.x2.spectrum(), k.s));
}

inline ScalarField resample(const ScalarField& f, Grid target) {
  if (f.grid() == target) return f;
  return ScalarField::from_spectrum(spectral::resample(f.spectrum(), target));
}

inline VectorField resample(const VectorField& u, Grid target) {
  return {resample(u.x1, target), resample(u.x2, target)};
}

/// ||grad u||_{H^s}: root-sum-square over the four partial derivatives.
inline double gradient_sobolev_norm(const VectorField& u, SobolevIndex k) {
  double sum = 0.0;
  for (const ScalarField* c : {&u.x1, &u.x2}) {
    const Spectrum s = c->spectrum();
    sum += spectral::sobolev_norm_squared(spectral::derivative(s, 1), k.s);
    sum += spectral::sobolev_norm_squared(spectral::derivative(s, 2), k.s);
  }
  return std::sqrt(sum);
}

}  // namespace eulerrough
