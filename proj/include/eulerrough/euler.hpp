#pragma once

// Pseudospectral 2D incompressible Euler in vorticity form on the torus:
//   omega_t + u . grad omega = 0,   u = grad-perp lap^{-1} omega.
// Classical RK4 in time; with dealiasing on, the state lives in the 2/3-rule
// Galerkin subspace, which conserves energy and enstrophy exactly in the
// semi-discrete system.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "eulerrough/errors.hpp"
#include "eulerrough/field.hpp"
#include "eulerrough/fft.hpp"
#include "eulerrough/spectral.hpp"

namespace eulerrough {

struct SolverConfig {
  Grid grid{128};
  double dt = 1e-3;      // upper bound; the step is shortened to land on t_end
  double t_end = 1.0;
  bool dealias = true;
  SobolevIndex k{3.0};
  double cfl_limit = 0.5;
  double divergence_tolerance = 1e-10;
};

struct Diagnostics {
  double t = 0.0;
  double energy = 0.0;     // integral of |u|^2
  double enstrophy = 0.0;  // integral of omega^2
  double hk_norm = 0.0;    // ||u||_{H^k}
  double courant = 0.0;
};

struct SolutionSnapshot {
  double t = 0.0;
  ScalarField omega;
  VectorField u;
  double energy = 0.0;
  double enstrophy = 0.0;
};

namespace detail {

/// Energy, enstrophy and ||u||_{H^s} from the vorticity spectrum.
inline Diagnostics spectral_diagnostics(const Spectrum& omega, double s) {
  const Grid& g = omega.grid();
  const int n = g.n();
  const int h = g.half();
  double energy = 0.0;
  double enstrophy = 0.0;
  double hk = 0.0;
  for (int a = 0; a < n; ++a) {
    const int k1 = g.wavenumber(a);
    for (int b = 0; b < h; ++b) {
      const int q = k1 * k1 + b * b;
      if (q == 0) continue;
      const double w = omega.column_weight(b) * std::norm(omega.at(a, b));
      enstrophy += w;
      energy += w / q;
      hk += w / q * std::pow(1.0 + q, s);
    }
  }
  const double area = kTwoPi * kTwoPi;
  Diagnostics d;
  d.energy = area * energy;
  d.enstrophy = area * enstrophy;
  d.hk_norm = std::sqrt(area * hk);
  return d;
}

}  // namespace detail

/// Right-hand side -u.grad(omega) evaluated pseudospectrally.
class VorticityRhs {
 public:
  VorticityRhs(Grid grid, bool dealias)
      : grid_(grid),
        dealias_(dealias),
        u1_(grid.size()),
        u2_(grid.size()),
        w1_(grid.size()),
        w2_(grid.size()),
        scratch_(grid.spectral_size()) {}

  /// Returns the tendency; `max_speed` receives max |u| over nodes.
  Spectrum operator()(const Spectrum& omega, double* max_speed = nullptr) {
    const int n = grid_.n();
    const int h = grid_.half();
    const int cut = grid_.dealias_cutoff();
    const auto& plan = fft::plan_for(n);
    auto fill = [&](std::vector<double>& out, auto&& multiplier) {
      for (int a = 0; a < n; ++a) {
        const int k1 = grid_.wavenumber(a);
        for (int b = 0; b < h; ++b) {
          const std::size_t i = static_cast<std::size_t>(a) * h + b;
          Complex c = omega.coeffs()[i];
          if (dealias_ && (std::abs(k1) > cut || b > cut)) c = 0.0;
          scratch_[i] = multiplier(k1, b, c);
        }
      }
      plan.backward(scratch_, out);
    };
    const int nyq = n / 2;
    auto deriv = [nyq](int k, Complex c) {
      return k == nyq ? Complex(0.0, 0.0) : Complex(-k * c.imag(), k * c.real());
    };
    // psi = -omega/|xi|^2, u1 = -d2 psi, u2 = d1 psi
    fill(u1_, [&](int k1, int k2, Complex c) {
      const int q = k1 * k1 + k2 * k2;
      if (q == 0) return Complex(0.0, 0.0);
      return deriv(k2, c / static_cast<double>(q));
    });
    fill(u2_, [&](int k1, int k2, Complex c) {
      const int q = k1 * k1 + k2 * k2;
      if (q == 0) return Complex(0.0, 0.0);
      return -deriv(k1, c / static_cast<double>(q));
    });
    fill(w1_, [&](int k1, int, Complex c) { return deriv(k1, c); });
    fill(w2_, [&](int, int k2, Complex c) { return deriv(k2, c); });

    double vmax2 = 0.0;
    for (std::size_t i = 0; i < u1_.size(); ++i) {
      vmax2 = std::max(vmax2, u1_[i] * u1_[i] + u2_[i] * u2_[i]);
      w1_[i] = u1_[i] * w1_[i] + u2_[i] * w2_[i];
    }
    if (max_speed) *max_speed = std::sqrt(vmax2);

    Spectrum out(grid_);
    plan.forward(w1_, out.coeffs());
    const double scale = -1.0 / static_cast<double>(grid_.size());
    for (int a = 0; a < n; ++a) {
      const int k1 = grid_.wavenumber(a);
      for (int b = 0; b < h; ++b) {
        Complex& c = out.at(a, b);
        c *= scale;
        if (dealias_ && (std::abs(k1) > cut || b > cut)) c = 0.0;
      }
    }
    out.at(0, 0) = 0.0;
    return out;
  }

 private:
  Grid grid_;
  bool dealias_;
  std::vector<double> u1_, u2_, w1_, w2_;
  std::vector<Complex> scratch_;
};

/// RK4 time stepper holding the spectral vorticity state.
class EulerStepper {
 public:
  EulerStepper(const Spectrum& omega0, const SolverConfig& config)
      : config_(config), rhs_(omega0.grid(), config.dealias), omega_(omega0) {
    if (config_.dealias) spectral::dealias(omega_);
  }

  double t() const { return t_; }
  const Spectrum& omega() const { return omega_; }
  const SolverConfig& config() const { return config_; }

  /// Tendency at the current state (cached between calls).
  const Spectrum& tendency() {
    if (!k1_) {
      double speed = 0.0;
      k1_ = rhs_(omega_, &speed);
      speed_ = speed;
    }
    return *k1_;
  }

  double max_speed() {
    tendency();
    return speed_;
  }

  double courant(double dt) { return dt * max_speed() / config_.grid.spacing(); }

  /// Advance by dt after checking the CFL guard at the current state.
  void step(double dt) {
    const double c = courant(dt);
    if (c > config_.cfl_limit) throw CflViolation(c, config_.cfl_limit, t_);
    const Spectrum k1 = tendency();
    auto axpy = [](const Spectrum& x, double a, const Spectrum& y) {
      Spectrum r = x;
      auto rc = r.coeffs();
      auto yc = y.coeffs();
      for (std::size_t i = 0; i < rc.size(); ++i) rc[i] += a * yc[i];
      return r;
    };
    const Spectrum k2 = rhs_(axpy(omega_, 0.5 * dt, k1));
    const Spectrum k3 = rhs_(axpy(omega_, 0.5 * dt, k2));
    const Spectrum k4 = rhs_(axpy(omega_, dt, k3));
    auto w = omega_.coeffs();
    const double s = dt / 6.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] += s * (k1.coeffs()[i] + 2.0 * k2.coeffs()[i] + 2.0 * k3.coeffs()[i] +
                   k4.coeffs()[i]);
    }
    t_ += dt;
    k1_.reset();
  }

  Diagnostics diagnostics(double dt) {
    Diagnostics d = detail::spectral_diagnostics(omega_, config_.k.s);
    d.t = t_;
    d.courant = courant(dt);
    return d;
  }

  SolutionSnapshot snapshot() const {
    const Diagnostics d = detail::spectral_diagnostics(omega_, config_.k.s);
    return {t_, ScalarField::from_spectrum(omega_),
            velocity_from_spectra(spectral::biot_savart(omega_)), d.energy, d.enstrophy};
  }

 private:
  SolverConfig config_;
  VorticityRhs rhs_;
  Spectrum omega_;
  std::optional<Spectrum> k1_;
  double speed_ = 0.0;
  double t_ = 0.0;
};

/// Number of RK4 steps and the (possibly shortened) step landing on t_end.
inline std::pair<int, double> step_plan(double t_end, double dt_max) {
  if (!(dt_max > 0.0) || !(t_end > 0.0)) throw Error("dt and t_end must be positive");
  const int steps = std::max(1, static_cast<int>(std::ceil(t_end / dt_max - 1e-9)));
  return {steps, t_end / steps};
}

/// Curl of u0 after validating the solver preconditions.
inline Spectrum initial_vorticity(const VectorField& u0, const SolverConfig& config) {
  if (!(u0.grid() == config.grid)) throw Error("initial data grid does not match solver grid");
  const double div = relative_divergence(u0);
  if (div > config.divergence_tolerance) throw NotDivergenceFree(div);
  const double scale = u0.max_norm();
  for (const ScalarField* c : {&u0.x1, &u0.x2}) {
    const double mean = c->mean();
    if (std::abs(mean) > kMeanTolerance * scale && std::abs(mean) > 1e-14) {
      throw NonZeroMean(mean, scale);
    }
  }
  return spectral::curl(u0.x1.spectrum(), u0.x2.spectrum());
}

/// One RK4 step of the vorticity equation.
inline ScalarField step_vorticity(const ScalarField& omega, double dt, const SolverConfig& config) {
  Spectrum s = omega.spectrum();
  spectral::require_zero_mean(s, omega.max_norm());
  SolverConfig c = config;
  c.grid = omega.grid();
  EulerStepper stepper(s, c);
  stepper.step(dt);
  return ScalarField::from_spectrum(stepper.omega());
}

using StepObserver = std::function<void(EulerStepper&, double dt)>;

/// Discrete solution map u0 -> u(t_end). The observer, when given, is called at
/// t = 0, after every `stride`-th step, and at the final time.
inline SolutionSnapshot solve(const VectorField& u0, const SolverConfig& config,
                              const StepObserver& observer = {}, int stride = 1) {
  EulerStepper stepper(initial_vorticity(u0, config), config);
  const auto [steps, dt] = step_plan(config.t_end, config.dt);
  if (observer) observer(stepper, dt);
  for (int i = 1; i <= steps; ++i) {
    stepper.step(dt);
    if (observer && (i % stride == 0 || i == steps)) observer(stepper, dt);
  }
  return stepper.snapshot();
}

/// Diagnostics rows t,energy,enstrophy,h3norm,courant collected at a stride.
inline std::vector<Diagnostics> solve_with_diagnostics(const VectorField& u0,
                                                       const SolverConfig& config, int stride,
                                                       SolutionSnapshot* final_state = nullptr) {
  std::vector<Diagnostics> rows;
  SolutionSnapshot snap = solve(
      u0, config, [&rows](EulerStepper& s, double dt) { rows.push_back(s.diagnostics(dt)); },
      stride);
  if (final_state) *final_state = std::move(snap);
  return rows;
}

/// Phi_T(u0) computed as (1/T) Phi_1(T u0), from the scaling symmetry
/// u -> lambda u(lambda t) of the Euler equations.
inline SolutionSnapshot apply_scaling_map(const VectorField& u0, double T,
                                          const SolverConfig& config) {
  if (!(T > 0.0)) throw Error("scaling time T must be positive");
  SolverConfig c = config;
  c.t_end = 1.0;
  SolutionSnapshot snap = solve(T == 1.0 ? u0 : T * u0, c);
  if (T != 1.0) {
    snap.omega *= 1.0 / T;
    snap.u *= 1.0 / T;
    snap.energy /= T * T;
    snap.enstrophy /= T * T;
  }
  snap.t = T;
  return snap;
}

/// sum_ij d_i u_j d_j u_i at the nodes.
inline ScalarField pressure_source(const VectorField& u) {
  const Spectrum s1 = u.x1.spectrum();
  const Spectrum s2 = u.x2.spectrum();
  const ScalarField d11 = ScalarField::from_spectrum(spectral::derivative(s1, 1));
  const ScalarField d21 = ScalarField::from_spectrum(spectral::derivative(s1, 2));  // d2 u1
  const ScalarField d12 = ScalarField::from_spectrum(spectral::derivative(s2, 1));  // d1 u2
  const ScalarField d22 = ScalarField::from_spectrum(spectral::derivative(s2, 2));
  ScalarField source(u.grid());
  auto out = source.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = d11.values()[i];
    const double b = d22.values()[i];
    out[i] = a * a + 2.0 * d12.values()[i] * d21.values()[i] + b * b;
  }
  return source;
}

/// Pressure p with -lap p = sum_ij d_i u_j d_j u_i, zero mean.
inline ScalarField pressure_from_velocity(const VectorField& u) {
  Spectrum src = pressure_source(u).spectrum();
  src.at(0, 0) = 0.0;  // the source integrates to zero for solenoidal u
  Spectrum p = spectral::inverse_laplacian(std::move(src));
  p *= -1.0;
  return ScalarField::from_spectrum(p);
}

/// (u.grad)u + grad p, the steady-state momentum residual.
inline VectorField momentum_residual(const VectorField& u, const ScalarField& p) {
  const Spectrum s1 = u.x1.spectrum();
  const Spectrum s2 = u.x2.spectrum();
  const Spectrum sp = p.spectrum();
  auto phys = [](const Spectrum& s) { return ScalarField::from_spectrum(s); };
  const ScalarField u1_1 = phys(spectral::derivative(s1, 1));
  const ScalarField u1_2 = phys(spectral::derivative(s1, 2));
  const ScalarField u2_1 = phys(spectral::derivative(s2, 1));
  const ScalarField u2_2 = phys(spectral::derivative(s2, 2));
  const ScalarField p1 = phys(spectral::derivative(sp, 1));
  const ScalarField p2 = phys(spectral::derivative(sp, 2));
  VectorField r(u.grid());
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    const double a = u.x1.values()[i];
    const double b = u.x2.values()[i];
    r.x1.values()[i] = a * u1_1.values()[i] + b * u1_2.values()[i] + p1.values()[i];
    r.x2.values()[i] = a * u2_1.values()[i] + b * u2_2.values()[i] + p2.values()[i];
  }
  return r;
}

}  // namespace eulerrough
