#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "eulerrough/builtin.hpp"
#include "eulerrough/interpolation.hpp"
#include "eulerrough/spectral.hpp"

using namespace eulerrough;
using std::numbers::pi;

namespace {

double max_diff(const ScalarField& a, const ScalarField& b) {
  return (a - b).max_norm();
}

// Band-limited test field with a few modes, none at Nyquist.
ScalarField trig_field(Grid g) {
  return ScalarField::sample(g, [](double x, double y) {
    return std::sin(x) + 0.5 * std::cos(2 * x - 3 * y) + 0.25 * std::sin(5 * y + 1.0) +
           0.1 * std::cos(7 * x + 4 * y - 0.3);
  });
}

}  // namespace

TEST(Grid, RejectsOddOrTinySizes) {
  EXPECT_THROW(Grid(6), Error);
  EXPECT_THROW(Grid(33), Error);
  EXPECT_NO_THROW(Grid(8));
  const Grid g(16);
  EXPECT_DOUBLE_EQ(g.coordinate(4), 2 * pi * 4 / 16);
  EXPECT_EQ(g.wavenumber(8), 8);
  EXPECT_EQ(g.wavenumber(9), -7);
}

TEST(ScalarField, RoundTripAndHermitianSymmetry) {
  const Grid g(32);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  ScalarField f(g);
  for (auto& v : f.values()) v = normal(rng);
  const ScalarField back = ScalarField::from_spectrum(f.spectrum());
  EXPECT_LE(max_diff(f, back), 1e-12 * f.max_norm());

  const Spectrum s = f.spectrum();
  double worst = 0.0;
  for (int k1 = -15; k1 <= 15; ++k1) {
    worst = std::max(worst, std::abs(s.mode(k1, 0) - std::conj(s.mode(-k1, 0))));
  }
  double scale = 0.0;
  for (const auto& c : s.coeffs()) scale = std::max(scale, std::abs(c));
  EXPECT_LE(worst, 1e-12 * scale);
}

TEST(SpectralDerivative, SineAlongFirstAxis) {
  const Grid g(32);
  const auto f = ScalarField::sample(g, [](double x, double) { return std::sin(x); });
  const auto expected = ScalarField::sample(g, [](double x, double) { return std::cos(x); });
  EXPECT_LE(max_diff(spectral_derivative(f, 1), expected), 1e-10);
}

TEST(SpectralDerivative, ConstantHasZeroDerivative) {
  const Grid g(16);
  EXPECT_LE(spectral_derivative(ScalarField::constant(g, 1.0), 1).max_norm(), 1e-14);
}

TEST(SpectralDerivative, ProductAlongSecondAxis) {
  const Grid g(32);
  const auto f =
      ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::sin(y); });
  const auto expected =
      ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
  EXPECT_LE(max_diff(spectral_derivative(f, 2), expected), 1e-10);
}

TEST(SpectralDerivative, MixedPartialsCommute) {
  const Grid g(32);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  ScalarField f(g);
  for (auto& v : f.values()) v = normal(rng);
  const Spectrum s = f.spectrum();
  const Spectrum d12 = spectral::derivative(spectral::derivative(s, 1), 2);
  const Spectrum d21 = spectral::derivative(spectral::derivative(s, 2), 1);
  // The multipliers commute; only the rounding order of xi1*xi2*c differs.
  for (std::size_t i = 0; i < d12.coeffs().size(); ++i) {
    EXPECT_LE(std::abs(d12.coeffs()[i] - d21.coeffs()[i]),
              4 * std::numeric_limits<double>::epsilon() * std::abs(d12.coeffs()[i]));
  }
}

TEST(SpectralDerivative, NyquistModeIsZeroed) {
  const Grid g(16);
  const auto f = ScalarField::sample(g, [](double x, double) { return std::cos(8 * x); });
  EXPECT_LE(spectral_derivative(f, 1).max_norm(), 1e-12);
}

TEST(Poisson, LaplacianEigenfunctions) {
  const Grid g(32);
  const auto rhs =
      ScalarField::sample(g, [](double x, double y) { return -2 * std::sin(x) * std::sin(y); });
  const auto expected =
      ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::sin(y); });
  EXPECT_LE(max_diff(solve_poisson_zero_mean(rhs), expected), 1e-12);

  const auto rhs2 = ScalarField::sample(g, [](double, double y) { return -std::cos(y); });
  const auto expected2 = ScalarField::sample(g, [](double, double y) { return std::cos(y); });
  EXPECT_LE(max_diff(solve_poisson_zero_mean(rhs2), expected2), 1e-12);

  EXPECT_EQ(solve_poisson_zero_mean(ScalarField(g)).max_norm(), 0.0);
}

TEST(Poisson, RejectsNonZeroMean) {
  const Grid g(16);
  const auto rhs = ScalarField::sample(g, [](double x, double) { return 1.0 + std::sin(x); });
  EXPECT_THROW(solve_poisson_zero_mean(rhs), NonZeroMean);
}

TEST(Vorticity, ShearAndTaylorGreen) {
  const Grid g(32);
  const auto shear = VectorField::sample(
      g, [](double, double y) { return -std::sin(y); }, [](double, double) { return 0.0; });
  const auto expected = ScalarField::sample(g, [](double, double y) { return std::cos(y); });
  EXPECT_LE(max_diff(vorticity_of(shear), expected), 1e-12);

  const auto constant = VectorField::sample(
      g, [](double, double) { return 0.3; }, [](double, double) { return -1.2; });
  EXPECT_LE(vorticity_of(constant).max_norm(), 1e-14);

  const auto tg = VectorField::sample(
      g, [](double x, double y) { return std::sin(x) * std::cos(y); },
      [](double x, double y) { return -std::cos(x) * std::sin(y); });
  const auto tg_omega =
      ScalarField::sample(g, [](double x, double y) { return 2 * std::sin(x) * std::sin(y); });
  EXPECT_LE(max_diff(vorticity_of(tg), tg_omega), 1e-12);
}

TEST(BiotSavart, KnownStreamFunctions) {
  const Grid g(32);
  const auto omega =
      ScalarField::sample(g, [](double x, double y) { return 2 * std::sin(x) * std::sin(y); });
  const VectorField u = biot_savart(omega);
  const auto e1 = ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
  const auto e2 =
      ScalarField::sample(g, [](double x, double y) { return -std::cos(x) * std::sin(y); });
  EXPECT_LE(max_diff(u.x1, e1), 1e-12);
  EXPECT_LE(max_diff(u.x2, e2), 1e-12);

  const VectorField zero = biot_savart(ScalarField(g));
  EXPECT_EQ(zero.max_norm(), 0.0);

  const VectorField shear = biot_savart(ScalarField::sample(g, [](double, double y) {
    return std::cos(y);
  }));
  EXPECT_LE(max_diff(shear.x1, ScalarField::sample(g, [](double, double y) { return -std::sin(y); })),
            1e-12);
  EXPECT_LE(shear.x2.max_norm(), 1e-14);
}

TEST(BiotSavart, RejectsNetVorticity) {
  const Grid g(16);
  EXPECT_THROW(biot_savart(ScalarField::constant(g, 0.5)), NonZeroMean);
}

TEST(BiotSavart, InvertsCurlOnSolenoidalFields) {
  const Grid g(64);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const VectorField u = builtin::random_velocity(g, 8, 1.0, seed);
    EXPECT_LE(relative_divergence(u), 1e-10);
    const VectorField back = biot_savart(vorticity_of(u));
    EXPECT_LE(sobolev_norm(back - u, {3}), 1e-10 * sobolev_norm(u, {3}));
  }
}

TEST(BiotSavart, GradientBoundedByVorticity) {
  // ||grad u||_{H^{k-1}} <= C ||omega||_{H^{k-1}} with C = 2.
  const Grid g(32);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const VectorField u = builtin::random_velocity(g, 1 + seed % 10, 1.0, 1000 + seed);
    const double ratio =
        gradient_sobolev_norm(u, {2}) / sobolev_norm(vorticity_of(u), {2});
    worst = std::max(worst, ratio);
  }
  RecordProperty("max_ratio", std::to_string(worst));
  EXPECT_LE(worst, 2.0);
}

TEST(SobolevNorm, KnownValues) {
  const Grid g(32);
  const auto f = ScalarField::sample(g, [](double x, double) { return std::sin(x); });
  EXPECT_NEAR(sobolev_norm(f, {0}), pi * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(sobolev_norm(f, {3}), std::pow(2.0, 1.5) * pi * std::sqrt(2.0), 1e-11);
  EXPECT_EQ(sobolev_norm(ScalarField(g), {2.5}), 0.0);
}

TEST(SobolevNorm, ParsevalAndMonotonicity) {
  const Grid g(32);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField f(g);
    for (auto& v : f.values()) v = normal(rng);
    const double quad = f.l2_norm_quadrature();
    EXPECT_NEAR(sobolev_norm(f, {0}), quad, 1e-10 * quad);
    double previous = 0.0;
    for (double s : {0.0, 0.5, 1.0, 2.0, 3.0, 3.5}) {
      const double v = sobolev_norm(f, {s});
      EXPECT_GE(v, previous);
      previous = v;
    }
  }
}

TEST(Resample, RefineCoarsenAndConstants) {
  const Grid coarse(32);
  const Grid fine(64);
  const auto f = ScalarField::sample(coarse, [](double x, double) { return std::sin(x); });
  const auto refined = resample(f, fine);
  const auto expected = ScalarField::sample(fine, [](double x, double) { return std::sin(x); });
  EXPECT_LE(max_diff(refined, expected), 1e-12);

  const auto c = resample(ScalarField::constant(coarse, 2.5), fine);
  EXPECT_LE(max_diff(c, ScalarField::constant(fine, 2.5)), 1e-12);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  ScalarField noise(coarse);
  for (auto& v : noise.values()) v = normal(rng);
  const auto round_trip = resample(resample(noise, fine), coarse);
  EXPECT_LE(max_diff(round_trip, noise), 1e-12 * noise.max_norm());
  // Refinement preserves nodal values at the shared nodes.
  const auto up = resample(noise, fine);
  for (int j1 = 0; j1 < 32; ++j1) {
    for (int j2 = 0; j2 < 32; ++j2) EXPECT_NEAR(up(2 * j1, 2 * j2), noise(j1, j2), 1e-12);
  }
}

TEST(OffGrid, DirectSummation) {
  const Grid g(32);
  const auto f = ScalarField::sample(g, [](double x, double) { return std::sin(x); });
  const std::vector<Point> pts{{pi / 2, 1.0}, {pi / 2 + 2 * pi, 1.0}, {-3 * pi / 2, 1.0}};
  const auto v = evaluate_offgrid(f, pts);
  EXPECT_NEAR(v[0], 1.0, 1e-8);
  EXPECT_NEAR(v[1], v[0], 1e-12);
  EXPECT_NEAR(v[2], v[0], 1e-12);
}

TEST(OffGrid, NodalValuesAreReproducedByBothBackends) {
  const Grid g(32);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  ScalarField f(g);
  for (auto& v : f.values()) v = normal(rng);
  std::vector<Point> nodes;
  for (int j = 0; j < 200; ++j) nodes.push_back(g.node(static_cast<std::size_t>(j * 5)));
  const auto many = evaluate_offgrid(f, nodes);
  for (int j = 0; j < 200; ++j) EXPECT_NEAR(many[j], f.values()[j * 5], 1e-10);
  const std::vector<Point> few(nodes.begin(), nodes.begin() + 10);
  const auto direct = evaluate_offgrid(f, few);
  for (int j = 0; j < 10; ++j) EXPECT_NEAR(direct[j], f.values()[j * 5], 1e-10);
}

TEST(OffGrid, InterpolationAccuracyOnBandLimitedFields) {
  const Grid g(128);
  const ScalarField f = trig_field(g);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(-1.0, 8.0);
  std::vector<Point> pts(5000);
  for (auto& p : pts) p = {uni(rng), uni(rng)};
  const auto values = evaluate_offgrid(f, pts);
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = pts[i].x1;
    const double y = pts[i].x2;
    const double exact = std::sin(x) + 0.5 * std::cos(2 * x - 3 * y) +
                         0.25 * std::sin(5 * y + 1.0) + 0.1 * std::cos(7 * x + 4 * y - 0.3);
    worst = std::max(worst, std::abs(values[i] - exact));
  }
  EXPECT_LE(worst, 1e-8);

  // Random band-limited content up to |xi| = 8, checked against direct summation.
  const VectorField u = builtin::random_velocity(g, 8, 1.0, 4);
  const Spectrum s = u.x1.spectrum();
  std::vector<Point> probe(pts.begin(), pts.begin() + 65);
  const auto interp = evaluate_offgrid(u.x1, probe);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    EXPECT_NEAR(interp[i], fourier_sum(s, probe[i]), 1e-8 * u.x1.max_norm());
  }
}
