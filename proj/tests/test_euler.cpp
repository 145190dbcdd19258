#include <gtest/gtest.h>

#include <cmath>

#include "eulerrough/builtin.hpp"
#include "eulerrough/euler.hpp"

using namespace eulerrough;

namespace {

double h3_distance(const VectorField& a, const VectorField& b) {
  return sobolev_norm(a - b, SobolevIndex{3});
}

SolverConfig config_for(int n, double dt, double t_end) {
  SolverConfig c;
  c.grid = Grid(n);
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST(StepVorticity, TaylorGreenCellIsSteady) {
  const Grid g(64);
  const ScalarField w = builtin::taylor_green_vorticity(g);
  const ScalarField next = step_vorticity(w, 1e-2, config_for(64, 1e-2, 1.0));
  EXPECT_LE((next - w).max_norm(), 1e-10);
}

TEST(StepVorticity, ShearIsSteady) {
  const Grid g(64);
  const ScalarField w = builtin::shear_vorticity(g);
  const ScalarField next = step_vorticity(w, 1e-2, config_for(64, 1e-2, 1.0));
  EXPECT_LE((next - w).max_norm(), 1e-10);
}

TEST(StepVorticity, ZeroStaysZero) {
  const Grid g(32);
  const ScalarField next = step_vorticity(ScalarField(g), 1e-2, config_for(32, 1e-2, 1.0));
  EXPECT_EQ(next.max_norm(), 0.0);
}

TEST(StepVorticity, RejectsNetVorticity) {
  const Grid g(32);
  EXPECT_THROW(step_vorticity(ScalarField::constant(g, 1.0), 1e-2, config_for(32, 1e-2, 1.0)),
               NonZeroMean);
}

TEST(Solve, SteadyStatesAreFixedPoints) {
  const Grid g(128);
  for (const VectorField& u0 : {builtin::taylor_green_velocity(g), builtin::shear_velocity(g)}) {
    const SolutionSnapshot s = solve(u0, config_for(128, 1e-3, 1.0));
    EXPECT_NEAR(s.t, 1.0, 1e-12);
    EXPECT_LE(h3_distance(s.u, u0), 1e-6);
  }
}

TEST(Solve, ZeroInitialData) {
  const Grid g(32);
  const SolutionSnapshot s = solve(VectorField(g), config_for(32, 1e-2, 1.0));
  EXPECT_EQ(s.u.max_norm(), 0.0);
  EXPECT_EQ(s.omega.max_norm(), 0.0);
}

TEST(Solve, SnapshotVelocityMatchesBiotSavart) {
  const Grid g(64);
  const SolutionSnapshot s = solve(builtin::named_velocity("mixed", g), config_for(64, 1e-2, 0.2));
  const VectorField u = biot_savart(s.omega);
  EXPECT_LE(h3_distance(u, s.u), 1e-10 * sobolev_norm(u, SobolevIndex{3}));
}

TEST(Solve, MixedDataConservesEnergyAndEnstrophy) {
  for (int n : {64, 128}) {
    const Grid g(n);
    const VectorField u0 = builtin::named_velocity("mixed", g);
    const auto rows = solve_with_diagnostics(u0, config_for(n, 1e-3, 1.0), 100);
    ASSERT_GE(rows.size(), 2u);
    const auto& first = rows.front();
    const auto& last = rows.back();
    EXPECT_NEAR(last.t, 1.0, 1e-12);
    EXPECT_LE(std::abs(last.energy - first.energy), 1e-6 * first.energy) << "N=" << n;
    EXPECT_LE(std::abs(last.enstrophy - first.enstrophy), 1e-6 * first.enstrophy) << "N=" << n;
  }
}

TEST(Solve, RandomDataConservesOverWholeRun) {
  const Grid g(128);
  const VectorField u0 = builtin::random_velocity(g, 8, 1.0, 11);
  const auto rows = solve_with_diagnostics(u0, config_for(128, 1e-3, 1.0), 50);
  for (const auto& r : rows) {
    EXPECT_LE(std::abs(r.energy / rows.front().energy - 1.0), 1e-6);
    EXPECT_LE(std::abs(r.enstrophy / rows.front().enstrophy - 1.0), 1e-6);
  }
}

TEST(Solve, ObserverStrideAndFinalCall) {
  const Grid g(32);
  int calls = 0;
  solve(builtin::shear_velocity(g), config_for(32, 0.09, 0.9),
        [&calls](EulerStepper&, double) { ++calls; }, 3);
  // t=0, steps 3, 6, 9 and the final step 10
  EXPECT_EQ(calls, 5);
}

TEST(Solve, RejectsDivergentInput) {
  const Grid g(32);
  const VectorField u = VectorField::sample(
      g, [](double x, double) { return std::sin(x); }, [](double, double) { return 0.0; });
  EXPECT_THROW(solve(u, config_for(32, 1e-2, 0.1)), NotDivergenceFree);
}

TEST(Solve, RejectsGridMismatch) {
  EXPECT_THROW(solve(builtin::shear_velocity(Grid(32)), config_for(64, 1e-2, 0.1)), Error);
}

TEST(Solve, CflViolationReportsCourantNumber) {
  const Grid g(64);
  const VectorField u0 = builtin::taylor_green_velocity(g);
  try {
    solve(u0, config_for(64, 0.5, 1.0));
    FAIL() << "expected a CFL abort";
  } catch (const CflViolation& e) {
    // max |u| = 1 for the Taylor-Green cell, so C = dt / h
    EXPECT_NEAR(e.courant(), 0.5 / g.spacing(), 1e-6);
  }
}

TEST(Solve, StepPlanLandsOnEndTime) {
  const auto [steps, dt] = step_plan(1.0, 0.3);
  EXPECT_EQ(steps, 4);
  EXPECT_DOUBLE_EQ(dt, 0.25);
  EXPECT_EQ(step_plan(1.0, 1e-3).first, 1000);
  EXPECT_THROW(step_plan(1.0, 0.0), Error);
}

TEST(Solve, FourthOrderInTime) {
  const Grid g(64);
  const VectorField u0 = builtin::random_velocity(g, 6, 1.0, 5);
  auto run = [&](double dt) { return solve(u0, config_for(64, dt, 1.0)).u; };
  const VectorField a = run(0.04);
  const VectorField b = run(0.02);
  const VectorField c = run(0.01);
  const double coarse = h3_distance(a, b);
  const double fine = h3_distance(b, c);
  EXPECT_GT(coarse, 1e-10);
  EXPECT_GE(coarse / fine, 12.0) << coarse << " " << fine;
}

TEST(Pressure, ShearHasNoPressure) {
  const ScalarField p = pressure_from_velocity(builtin::shear_velocity(Grid(64)));
  EXPECT_LE(p.max_norm(), 1e-13);
}

TEST(Pressure, ZeroVelocity) {
  EXPECT_EQ(pressure_from_velocity(VectorField(Grid(32))).max_norm(), 0.0);
}

TEST(Pressure, TaylorGreenBalancesAdvection) {
  const VectorField u = builtin::taylor_green_velocity(Grid(64));
  const ScalarField p = pressure_from_velocity(u);
  // p = (cos 2x1 + cos 2x2) / 4 for this cell
  const ScalarField exact = ScalarField::sample(
      u.grid(), [](double x, double y) { return 0.25 * (std::cos(2 * x) + std::cos(2 * y)); });
  EXPECT_LE((p - exact).max_norm(), 1e-12);
  EXPECT_LE(momentum_residual(u, p).max_norm(), 1e-8);
}

TEST(Pressure, PoissonIdentityOnRandomField) {
  const VectorField u = builtin::random_velocity(Grid(64), 6, 1.0, 3);
  const ScalarField p = pressure_from_velocity(u);
  const ScalarField lap = spectral_derivative(spectral_derivative(p, 1), 1) +
                          spectral_derivative(spectral_derivative(p, 2), 2);
  ScalarField source(u.grid());
  const ScalarField a = spectral_derivative(u.x1, 1);
  const ScalarField b = spectral_derivative(u.x1, 2);
  const ScalarField c = spectral_derivative(u.x2, 1);
  const ScalarField d = spectral_derivative(u.x2, 2);
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    source.values()[i] = a.values()[i] * a.values()[i] + 2 * b.values()[i] * c.values()[i] +
                         d.values()[i] * d.values()[i];
  }
  source -= ScalarField::constant(u.grid(), source.mean());
  EXPECT_LE((lap + source).l2_norm_quadrature(), 1e-8 * source.l2_norm_quadrature());
}

TEST(Scaling, UnitTimeIsBitIdentical) {
  const Grid g(32);
  const VectorField u0 = builtin::random_velocity(g, 4, 1.0, 2);
  const SolverConfig c = config_for(32, 1e-2, 1.0);
  const SolutionSnapshot a = solve(u0, c);
  const SolutionSnapshot b = apply_scaling_map(u0, 1.0, c);
  ASSERT_EQ(a.u.x1.values().size(), b.u.x1.values().size());
  for (std::size_t i = 0; i < a.u.x1.values().size(); ++i) {
    ASSERT_EQ(a.u.x1.values()[i], b.u.x1.values()[i]);
    ASSERT_EQ(a.u.x2.values()[i], b.u.x2.values()[i]);
  }
}

TEST(Scaling, SteadyStateIsFixedForAnyT) {
  const Grid g(64);
  const VectorField u0 = builtin::taylor_green_velocity(g);
  for (double T : {0.25, 2.0}) {
    EXPECT_LE(h3_distance(apply_scaling_map(u0, T, config_for(64, 1e-3, 1.0)).u, u0), 1e-6);
  }
}

TEST(Scaling, MatchesDirectSolve) {
  const Grid g(128);
  const VectorField u0 = builtin::random_velocity(g, 8, 1.0, 7);
  for (double T : {0.25, 0.5, 2.0}) {
    const SolutionSnapshot direct = solve(u0, config_for(128, 1e-3, T));
    const SolutionSnapshot scaled = apply_scaling_map(u0, T, config_for(128, 1e-3, 1.0));
    EXPECT_LE(h3_distance(direct.u, scaled.u), 1e-6) << "T=" << T;
  }
}

TEST(Scaling, RejectsNonPositiveTime) {
  EXPECT_THROW(apply_scaling_map(VectorField(Grid(16)), 0.0, config_for(16, 0.1, 1.0)), Error);
}
