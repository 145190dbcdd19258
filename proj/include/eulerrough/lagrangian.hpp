#pragma once

// Flow maps of the torus and the Lagrangian side of 2D Euler.
//
// A map is stored as identity plus a periodic displacement sampled at the
// nodes. Trajectories are integrated with RK4; along a solver run the velocity
// between two steps is the cubic Hermite interpolant built from omega and
// omega_t at both ends, so the flow map is fourth order in dt as well.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "eulerrough/errors.hpp"
#include "eulerrough/euler.hpp"
#include "eulerrough/field.hpp"
#include "eulerrough/interpolation.hpp"
#include "eulerrough/spectral.hpp"

namespace eulerrough {

class FlowMap {
 public:
  explicit FlowMap(Grid g) : displacement_(g) {}
  explicit FlowMap(VectorField displacement) : displacement_(std::move(displacement)) {}

  static FlowMap identity(Grid g) { return FlowMap(g); }

  /// Map sending node j to positions[j] (unwrapped).
  static FlowMap from_positions(Grid g, std::span<const Point> positions) {
    if (positions.size() != g.size()) throw Error("position count does not match grid");
    VectorField d(g);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const Point x = g.node(i);
      d.x1.values()[i] = positions[i].x1 - x.x1;
      d.x2.values()[i] = positions[i].x2 - x.x2;
    }
    return FlowMap(std::move(d));
  }

  const Grid& grid() const { return displacement_.grid(); }
  const VectorField& displacement() const { return displacement_; }

  Point position(std::size_t flat) const {
    const Point x = grid().node(flat);
    return {x.x1 + displacement_.x1.values()[flat], x.x2 + displacement_.x2.values()[flat]};
  }

  std::vector<Point> positions() const {
    std::vector<Point> out(grid().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = position(i);
    return out;
  }

  /// Entries J[i][j] = d phi_i / d x_j at the nodes.
  std::array<std::array<ScalarField, 2>, 2> jacobian() const {
    const Grid g = grid();
    const ScalarField one = ScalarField::constant(g, 1.0);
    const ScalarField& d1 = displacement_.x1;
    const ScalarField& d2 = displacement_.x2;
    return {{{one + spectral_derivative(d1, 1), spectral_derivative(d1, 2)},
             {spectral_derivative(d2, 1), one + spectral_derivative(d2, 2)}}};
  }

  ScalarField jacobian_determinant() const {
    const auto j = jacobian();
    ScalarField det(grid());
    for (std::size_t i = 0; i < grid().size(); ++i) {
      det.values()[i] = j[0][0].values()[i] * j[1][1].values()[i] -
                        j[0][1].values()[i] * j[1][0].values()[i];
    }
    return det;
  }

  /// sup over nodes of the spectral (operator 2-) norm of D phi.
  double max_jacobian_norm() const {
    const auto j = jacobian();
    double best = 0.0;
    for (std::size_t i = 0; i < grid().size(); ++i) {
      best = std::max(best, operator_norm(j[0][0].values()[i], j[0][1].values()[i],
                                          j[1][0].values()[i], j[1][1].values()[i]));
    }
    return best;
  }

  static double operator_norm(double a, double b, double c, double d) {
    // largest singular value of [[a, b], [c, d]]
    const double s = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    return std::sqrt(0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * det * det))));
  }

 private:
  VectorField displacement_;
};

// ---------------------------------------------------------------------------
// Inversion and composition.

struct InversionOptions {
  double tolerance = 1e-9;  // required max-norm residual
  int max_iterations = 50;
  InterpolationOptions interpolation{};
};

/// Solve phi(psi(x)) = x at every node by damped Newton on the displacement.
/// Starts from the identity unless a previous inverse is supplied.
inline FlowMap invert_map(const FlowMap& phi, InversionOptions opts = {},
                          const FlowMap* warm_start = nullptr) {
  const Grid g = phi.grid();
  const VectorField& d = phi.displacement();
  if (d.max_norm() == 0.0) return FlowMap::identity(g);
  const Spectrum s1 = d.x1.spectrum();
  const Spectrum s2 = d.x2.spectrum();
  std::vector<Spectrum> fields = {s1,
                                  s2,
                                  spectral::derivative(s1, 1),
                                  spectral::derivative(s1, 2),
                                  spectral::derivative(s2, 1),
                                  spectral::derivative(s2, 2)};
  const FieldSampler sampler(std::move(fields), g.size(), opts.interpolation);

  const std::size_t count = g.size();
  std::vector<Point> e(count, Point{});
  if (warm_start) {
    for (std::size_t i = 0; i < count; ++i) {
      e[i] = {warm_start->displacement().x1.values()[i], warm_start->displacement().x2.values()[i]};
    }
  }
  struct NodeState {
    Point r;
    std::array<double, 4> jac;
    double size = 0.0;
    double lambda = 1.0;
    bool done = false;
  };
  std::vector<NodeState> state(count);
  std::vector<std::vector<double>> vals;

  auto evaluate = [&](const std::vector<std::size_t>& idx, const std::vector<Point>& disp,
                      std::vector<NodeState>& into) {
    std::vector<Point> pts(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Point x = g.node(idx[k]);
      pts[k] = {x.x1 + disp[k].x1, x.x2 + disp[k].x2};
    }
    sampler.evaluate(pts, vals);
    into.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      NodeState& st = into[k];
      st.r = {disp[k].x1 + vals[0][k], disp[k].x2 + vals[1][k]};
      st.jac = {1.0 + vals[2][k], vals[3][k], vals[4][k], 1.0 + vals[5][k]};
      st.size = std::max(std::abs(st.r.x1), std::abs(st.r.x2));
    }
  };

  std::vector<std::size_t> active(count);
  for (std::size_t i = 0; i < count; ++i) active[i] = i;
  {
    std::vector<NodeState> fresh;
    evaluate(active, e, fresh);
    for (std::size_t i = 0; i < count; ++i) state[i] = fresh[i];
  }
  // Stop well below the tolerance; the residual floor is roundoff.
  const double target = std::min(opts.tolerance, 1e-13 * (1.0 + d.max_norm()));
  int iterations = 0;
  for (; iterations < opts.max_iterations; ++iterations) {
    std::vector<std::size_t> next;
    for (std::size_t i : active) {
      NodeState& st = state[i];
      if (st.size <= target || st.lambda < 1e-4) st.done = true;
      if (!st.done) next.push_back(i);
    }
    active.swap(next);
    if (active.empty()) break;
    std::vector<Point> trial(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      const NodeState& st = state[active[k]];
      const auto& j = st.jac;
      const double det = j[0] * j[3] - j[1] * j[2];
      if (!(det > 0.0)) throw InversionFailure(st.size, iterations);
      const double dx1 = (j[3] * st.r.x1 - j[1] * st.r.x2) / det;
      const double dx2 = (-j[2] * st.r.x1 + j[0] * st.r.x2) / det;
      const Point& cur = e[active[k]];
      trial[k] = {cur.x1 - st.lambda * dx1, cur.x2 - st.lambda * dx2};
    }
    std::vector<NodeState> fresh;
    evaluate(active, trial, fresh);
    for (std::size_t k = 0; k < active.size(); ++k) {
      NodeState& st = state[active[k]];
      if (fresh[k].size < st.size) {
        fresh[k].lambda = 1.0;
        st = fresh[k];
        e[active[k]] = trial[k];
      } else {
        st.lambda *= 0.5;  // backtrack
      }
    }
  }
  double worst = 0.0;
  for (const NodeState& st : state) worst = std::max(worst, st.size);
  if (!(worst <= opts.tolerance)) throw InversionFailure(worst, iterations);

  VectorField out(g);
  for (std::size_t i = 0; i < count; ++i) {
    out.x1.values()[i] = e[i].x1;
    out.x2.values()[i] = e[i].x2;
  }
  return FlowMap(std::move(out));
}

/// Nodal values f(phi(x_j)).
inline ScalarField compose_scalar_with_map(const ScalarField& f, const FlowMap& phi,
                                           InterpolationOptions opts = {}) {
  if (!(f.grid() == phi.grid())) throw Error("field and map live on different grids");
  if (phi.displacement().max_norm() == 0.0) return f;
  const std::vector<Point> pts = phi.positions();
  return ScalarField(f.grid(), evaluate_offgrid(f, pts, opts));
}

inline VectorField compose_vector_with_map(const VectorField& u, const FlowMap& phi,
                                           InterpolationOptions opts = {}) {
  const std::vector<Point> pts = phi.positions();
  const FieldSampler sampler({u.x1.spectrum(), u.x2.spectrum()}, pts.size(), opts);
  std::vector<std::vector<double>> vals;
  sampler.evaluate(pts, vals);
  return {ScalarField(u.grid(), std::move(vals[0])), ScalarField(u.grid(), std::move(vals[1]))};
}

/// phi o psi.
inline FlowMap compose_maps(const FlowMap& phi, const FlowMap& psi, InterpolationOptions opts = {}) {
  VectorField d = compose_vector_with_map(phi.displacement(), psi, opts);
  d += psi.displacement();
  return FlowMap(std::move(d));
}

// ---------------------------------------------------------------------------
// Trajectories.

/// Velocity spectra and their time derivative at one instant.
struct VelocityState {
  double t = 0.0;
  std::array<Spectrum, 2> u;
  std::array<Spectrum, 2> u_t;
};

inline VelocityState velocity_state(EulerStepper& stepper) {
  return {stepper.t(), spectral::biot_savart(stepper.omega()),
          spectral::biot_savart(stepper.tendency())};
}

namespace detail {

inline std::array<Spectrum, 2> hermite(const VelocityState& a, const VelocityState& b, double t) {
  const double h = b.t - a.t;
  const double s = h > 0.0 ? (t - a.t) / h : 0.0;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = (s3 - 2 * s2 + s) * h;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = (s3 - s2) * h;
  std::array<Spectrum, 2> out = {Spectrum(a.u[0].grid()), Spectrum(a.u[0].grid())};
  for (int c = 0; c < 2; ++c) {
    auto o = out[c].coeffs();
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] = h00 * a.u[c].coeffs()[i] + h10 * a.u_t[c].coeffs()[i] + h01 * b.u[c].coeffs()[i] +
             h11 * b.u_t[c].coeffs()[i];
    }
  }
  return out;
}

inline FieldSampler velocity_sampler(const std::array<Spectrum, 2>& u, std::size_t points,
                                     InterpolationOptions opts) {
  return FieldSampler({u[0], u[1]}, points, opts);
}

}  // namespace detail

/// One RK4 step of x' = u(t, x) with the velocity sampled at t, t+dt/2, t+dt.
inline void rk4_trajectory_step(std::vector<Point>& pos, const FieldSampler& start,
                                const FieldSampler& mid, const FieldSampler& end, double dt) {
  const std::size_t n = pos.size();
  std::vector<std::vector<double>> k1, k2, k3, k4;
  std::vector<Point> stage(n);
  start.evaluate(pos, k1);
  for (std::size_t i = 0; i < n; ++i) {
    stage[i] = {pos[i].x1 + 0.5 * dt * k1[0][i], pos[i].x2 + 0.5 * dt * k1[1][i]};
  }
  mid.evaluate(stage, k2);
  for (std::size_t i = 0; i < n; ++i) {
    stage[i] = {pos[i].x1 + 0.5 * dt * k2[0][i], pos[i].x2 + 0.5 * dt * k2[1][i]};
  }
  mid.evaluate(stage, k3);
  for (std::size_t i = 0; i < n; ++i) {
    stage[i] = {pos[i].x1 + dt * k3[0][i], pos[i].x2 + dt * k3[1][i]};
  }
  end.evaluate(stage, k4);
  for (std::size_t i = 0; i < n; ++i) {
    const double v1 = (k1[0][i] + 2 * k2[0][i] + 2 * k3[0][i] + k4[0][i]) / 6.0;
    const double v2 = (k1[1][i] + 2 * k2[1][i] + 2 * k3[1][i] + k4[1][i]) / 6.0;
    if (std::hypot(dt * v1, dt * v2) > kTwoPi / 2) {
      throw TrajectoryFailure("trajectory moved more than half the domain in one step");
    }
    pos[i].x1 += dt * v1;
    pos[i].x2 += dt * v2;
  }
}

/// Time-dependent velocity provider.
class VelocityPath {
 public:
  virtual ~VelocityPath() = default;
  virtual Grid grid() const = 0;
  virtual std::array<Spectrum, 2> velocity(double t) const = 0;
};

class SteadyPath final : public VelocityPath {
 public:
  explicit SteadyPath(const VectorField& u) : u_{u.x1.spectrum(), u.x2.spectrum()} {}
  Grid grid() const override { return u_[0].grid(); }
  std::array<Spectrum, 2> velocity(double) const override { return u_; }

 private:
  std::array<Spectrum, 2> u_;
};

/// Stored solver states with cubic Hermite interpolation in time.
class SnapshotPath final : public VelocityPath {
 public:
  void record(EulerStepper& stepper) { states_.push_back(velocity_state(stepper)); }

  /// Run the solver, keeping every `stride`-th state.
  static SnapshotPath from_solve(const VectorField& u0, const SolverConfig& config, int stride = 1) {
    SnapshotPath path;
    solve(u0, config, [&path](EulerStepper& s, double) { path.record(s); }, stride);
    return path;
  }

  Grid grid() const override {
    if (states_.empty()) throw Error("empty velocity path");
    return states_.front().u[0].grid();
  }
  double t_begin() const { return states_.front().t; }
  double t_end() const { return states_.back().t; }
  std::size_t size() const { return states_.size(); }

  std::array<Spectrum, 2> velocity(double t) const override {
    if (states_.empty()) throw Error("empty velocity path");
    if (states_.size() == 1) return states_.front().u;
    const double slack = 1e-9 * std::max(1.0, std::abs(t_end()));
    if (t < t_begin() - slack || t > t_end() + slack) throw Error("time outside velocity path");
    auto it = std::upper_bound(states_.begin(), states_.end(), t,
                               [](double v, const VelocityState& s) { return v < s.t; });
    std::size_t hi = static_cast<std::size_t>(it - states_.begin());
    hi = std::clamp<std::size_t>(hi, 1, states_.size() - 1);
    return detail::hermite(states_[hi - 1], states_[hi], t);
  }

 private:
  std::vector<VelocityState> states_;
};

/// RK4 trajectories of the given points from t = 0 to t_end.
inline std::vector<Point> track_points(const VelocityPath& path, std::vector<Point> points,
                                       double t_end, double dt, InterpolationOptions opts = {}) {
  const auto [steps, h] = step_plan(t_end, dt);
  const std::size_t n = points.size();
  auto sampler_at = [&](double t) {
    return std::make_unique<FieldSampler>(detail::velocity_sampler(path.velocity(t), n, opts));
  };
  auto start = sampler_at(0.0);
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const auto mid = sampler_at(t + 0.5 * h);
    auto end = sampler_at(i + 1 == steps ? t_end : t + h);
    rk4_trajectory_step(points, *start, *mid, *end, h);
    start = std::move(end);
  }
  return points;
}

inline std::vector<Point> grid_nodes(Grid g) {
  std::vector<Point> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.node(i);
  return out;
}

/// phi(t_end) for phi_t = u o phi, phi(0) = id.
inline FlowMap integrate_flow_map(const VelocityPath& path, double t_end, double dt,
                                  InterpolationOptions opts = {}) {
  const Grid g = path.grid();
  return FlowMap::from_positions(g, track_points(path, grid_nodes(g), t_end, dt, opts));
}

/// Solver observer advancing particles alongside the Euler run. Must be
/// attached with stride 1.
class ParticleCoIntegrator {
 public:
  explicit ParticleCoIntegrator(std::vector<Point> points, InterpolationOptions opts = {})
      : pos_(std::move(points)), opts_(opts) {}

  void operator()(EulerStepper& stepper, double) {
    VelocityState cur = velocity_state(stepper);
    auto end = std::make_unique<FieldSampler>(detail::velocity_sampler(cur.u, pos_.size(), opts_));
    if (prev_) {
      const double h = cur.t - prev_->t;
      const FieldSampler mid =
          detail::velocity_sampler(detail::hermite(*prev_, cur, prev_->t + 0.5 * h), pos_.size(), opts_);
      rk4_trajectory_step(pos_, *prev_sampler_, mid, *end, h);
    }
    prev_ = std::move(cur);
    prev_sampler_ = std::move(end);
  }

  const std::vector<Point>& positions() const { return pos_; }

 private:
  std::vector<Point> pos_;
  InterpolationOptions opts_;
  std::optional<VelocityState> prev_;
  std::unique_ptr<FieldSampler> prev_sampler_;
};

struct ParticleRun {
  SolutionSnapshot final_state;
  std::vector<Point> positions;
};

/// Solve Euler and carry the given particles along.
inline ParticleRun solve_with_particles(const VectorField& u0, const SolverConfig& config,
                                        std::vector<Point> points, InterpolationOptions opts = {}) {
  ParticleCoIntegrator tracker(std::move(points), opts);
  SolutionSnapshot snap = solve(u0, config, std::ref(tracker), 1);
  return {std::move(snap), tracker.positions()};
}

/// exp(u0) = phi(1) of the Euler flow starting at u0 (phi(t_end) in general).
inline FlowMap exp_map(const VectorField& u0, const SolverConfig& config,
                       InterpolationOptions opts = {}) {
  const Grid g = u0.grid();
  if (u0.max_norm() == 0.0) return FlowMap::identity(g);
  ParticleRun run = solve_with_particles(u0, config, grid_nodes(g), opts);
  return FlowMap::from_positions(g, run.positions);
}

/// max over checkpoints of ||omega(t) o phi(t) - omega_0||_{H^2} / ||omega_0||_{H^2}.
inline double frozen_vorticity_residual(const VectorField& u0, const SolverConfig& config,
                                        int checkpoints = 10, InterpolationOptions opts = {}) {
  const Grid g = u0.grid();
  if (u0.max_norm() == 0.0) return 0.0;
  const auto [steps, dt] = step_plan(config.t_end, config.dt);
  const int every = std::max(1, steps / std::max(1, checkpoints));
  ParticleCoIntegrator tracker(grid_nodes(g), opts);
  std::optional<ScalarField> omega0;
  double norm0 = 0.0;
  double worst = 0.0;
  int calls = 0;
  solve(
      u0, config,
      [&](EulerStepper& s, double h) {
        tracker(s, h);
        const int step = calls++;
        if (step == 0) {
          omega0 = ScalarField::from_spectrum(s.omega());
          norm0 = sobolev_norm(*omega0, SobolevIndex{2});
          return;
        }
        if (step % every != 0 && step != steps) return;
        const FieldSampler w({s.omega()}, g.size(), opts);
        std::vector<std::vector<double>> vals;
        w.evaluate(tracker.positions(), vals);
        const ScalarField diff = ScalarField(g, std::move(vals[0])) - *omega0;
        worst = std::max(worst, sobolev_norm(diff, SobolevIndex{2}) / norm0);
      },
      1);
  return worst;
}

// ---------------------------------------------------------------------------
// Second-order Lagrangian formulation: phi_tt = F(phi, phi_t), integrated as
// a first-order system. Independent of the Eulerian solver.

/// F = (grad lap^{-1} sum_ij d_i u_j d_j u_i) o phi with u = phi_t o phi^{-1}.
/// The composition is done first and the derivatives taken after.
inline VectorField lagrangian_rhs(const FlowMap& phi, const VectorField& phi_t,
                                  const FlowMap* warm_start = nullptr,
                                  FlowMap* inverse_out = nullptr, InversionOptions opts = {}) {
  const Grid g = phi.grid();
  if (phi_t.max_norm() == 0.0) {
    if (inverse_out) *inverse_out = invert_map(phi, opts, warm_start);
    return VectorField(g);
  }
  FlowMap inverse = invert_map(phi, opts, warm_start);
  const VectorField u = compose_vector_with_map(phi_t, inverse, opts.interpolation);
  Spectrum src = pressure_source(u).spectrum();
  src.at(0, 0) = 0.0;
  const Spectrum q = spectral::inverse_laplacian(std::move(src));
  const VectorField grad{ScalarField::from_spectrum(spectral::derivative(q, 1)),
                         ScalarField::from_spectrum(spectral::derivative(q, 2))};
  if (inverse_out) *inverse_out = std::move(inverse);
  return compose_vector_with_map(grad, phi, opts.interpolation);
}

/// exp(u0) by RK4 on (phi, phi_t) from (id, u0); uses config.grid via u0,
/// config.dt and config.t_end.
inline FlowMap exp_map_via_ode(const VectorField& u0, const SolverConfig& config,
                               InversionOptions opts = {}) {
  const Grid g = u0.grid();
  if (u0.max_norm() == 0.0) return FlowMap::identity(g);
  const auto [steps, h] = step_plan(config.t_end, config.dt);
  VectorField d(g);
  VectorField v = u0;
  FlowMap inverse = FlowMap::identity(g);
  auto rhs = [&](const VectorField& disp, const VectorField& vel) {
    return lagrangian_rhs(FlowMap(disp), vel, &inverse, &inverse, opts);
  };
  for (int i = 0; i < steps; ++i) {
    const VectorField a1 = rhs(d, v);
    const VectorField& d1 = v;
    const VectorField v2 = v + (0.5 * h) * a1;
    const VectorField a2 = rhs(d + (0.5 * h) * d1, v2);
    const VectorField v3 = v + (0.5 * h) * a2;
    const VectorField a3 = rhs(d + (0.5 * h) * v2, v3);
    const VectorField v4 = v + h * a3;
    const VectorField a4 = rhs(d + h * v3, v4);
    d += (h / 6.0) * (d1 + 2.0 * v2 + 2.0 * v3 + v4);
    v += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  }
  return FlowMap(std::move(d));
}

}  // namespace eulerrough
