#pragma once

// Periodic fields on the torus [0, 2*pi)^2.
//
// Physical storage is row-major with the first index along x1:
//   values[j1 * N + j2] = f(2*pi*j1/N, 2*pi*j2/N).
// Spectral storage is FFTW's half-complex layout, N x (N/2 + 1), normalized so
// that coefficient(xi) = (2*pi)^-2 * integral f(x) exp(-i xi.x) dx, i.e. the
// raw FFT divided by N^2. Row index a maps to xi1 = wavenumber(a) in
// {-N/2+1, ..., N/2}; column index b is xi2 = b in {0, ..., N/2}.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "eulerrough/errors.hpp"
#include "eulerrough/fft.hpp"

namespace eulerrough {

using Complex = std::complex<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Wrap a coordinate into [0, 2*pi).
inline double wrap_coordinate(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Minimal-image difference a - b on the circle, in (-pi, pi].
inline double periodic_delta(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  return d;
}

/// Distance on the flat torus (minimum over period shifts).
inline double torus_distance(const Point& a, const Point& b) {
  return std::hypot(periodic_delta(a.x1, b.x1), periodic_delta(a.x2, b.x2));
}

class Grid {
 public:
  explicit Grid(int n) : n_(n) {
    if (n < 8 || n % 2 != 0) {
      throw Error("grid size must be an even integer >= 8, got " + std::to_string(n));
    }
  }

  int n() const { return n_; }
  double spacing() const { return kTwoPi / n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * (n_ / 2 + 1); }
  int half() const { return n_ / 2 + 1; }

  double coordinate(int j) const { return kTwoPi * j / n_; }
  Point node(int j1, int j2) const { return {coordinate(j1), coordinate(j2)}; }
  Point node(std::size_t flat) const {
    return node(static_cast<int>(flat / n_), static_cast<int>(flat % n_));
  }

  /// Signed wavenumber of FFT row index `a`; the Nyquist index maps to +N/2.
  int wavenumber(int a) const { return a <= n_ / 2 ? a : a - n_; }

  /// Largest wavenumber retained by the 2/3 dealiasing rule.
  int dealias_cutoff() const { return (n_ - 1) / 3; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int n_;
};

/// Half-complex Fourier coefficients of a real field.
class Spectrum {
 public:
  explicit Spectrum(Grid grid) : grid_(grid), coeffs_(grid.spectral_size()) {}

  const Grid& grid() const { return grid_; }
  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  Complex& at(int a, int b) { return coeffs_[static_cast<std::size_t>(a) * grid_.half() + b]; }
  const Complex& at(int a, int b) const {
    return coeffs_[static_cast<std::size_t>(a) * grid_.half() + b];
  }

  /// Coefficient of exp(i(xi1 x1 + xi2 x2)) for any xi in the resolved lattice.
  Complex mode(int xi1, int xi2) const {
    const int n = grid_.n();
    if (xi2 < 0) {
      return std::conj(at(index_of(-xi1, n), -xi2));
    }
    return at(index_of(xi1, n), xi2);
  }

  /// Set the coefficient of mode xi and keep the Hermitian partner consistent.
  void set_mode(int xi1, int xi2, Complex value) {
    const int n = grid_.n();
    if (xi2 < 0) {
      xi1 = -xi1;
      xi2 = -xi2;
      value = std::conj(value);
    }
    at(index_of(xi1, n), xi2) = value;
    if (xi2 == 0 || xi2 == n / 2) {
      at(index_of(-xi1, n), xi2) = std::conj(value);
    }
  }

  double mean() const { return coeffs_[0].real(); }

  /// Multiplicity of half-spectrum column b in the full lattice.
  double column_weight(int b) const { return (b == 0 || b == grid_.n() / 2) ? 1.0 : 2.0; }

  Spectrum& operator+=(const Spectrum& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Spectrum& operator-=(const Spectrum& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  Spectrum& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
  friend Spectrum operator-(Spectrum a, const Spectrum& b) { return a -= b; }
  friend Spectrum operator*(double s, Spectrum a) { return a *= s; }

  /// Apply a multiplier m(xi1, xi2) to every coefficient.
  template <typename F>
  Spectrum& apply(F&& multiplier) {
    const int n = grid_.n();
    const int h = grid_.half();
    for (int a = 0; a < n; ++a) {
      const int k1 = grid_.wavenumber(a);
      for (int b = 0; b < h; ++b) {
        coeffs_[static_cast<std::size_t>(a) * h + b] *= multiplier(k1, b);
      }
    }
    return *this;
  }

 private:
  static int index_of(int xi, int n) { return ((xi % n) + n) % n; }

  Grid grid_;
  std::vector<Complex> coeffs_;
};

class ScalarField {
 public:
  explicit ScalarField(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}
  ScalarField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw Error("value array does not match grid size");
  }

  /// Sample an analytic function at the grid nodes.
  template <typename F>
  static ScalarField sample(Grid grid, F&& f) {
    ScalarField out(grid);
    const int n = grid.n();
    for (int j1 = 0; j1 < n; ++j1) {
      const double x1 = grid.coordinate(j1);
      for (int j2 = 0; j2 < n; ++j2) {
        out.values_[static_cast<std::size_t>(j1) * n + j2] = f(x1, grid.coordinate(j2));
      }
    }
    return out;
  }

  static ScalarField constant(Grid grid, double c) {
    ScalarField out(grid);
    std::fill(out.values_.begin(), out.values_.end(), c);
    return out;
  }

  static ScalarField from_spectrum(const Spectrum& s) {
    const Grid g = s.grid();
    std::vector<Complex> scratch(s.coeffs().begin(), s.coeffs().end());
    ScalarField out(g);
    fft::plan_for(g.n()).backward(scratch, out.values_);
    return out;
  }

  Spectrum spectrum() const {
    Spectrum s(grid_);
    fft::plan_for(grid_.n()).forward(values_, s.coeffs());
    s *= 1.0 / static_cast<double>(grid_.size());
    return s;
  }

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator()(int j1, int j2) const {
    return values_[static_cast<std::size_t>(j1) * grid_.n() + j2];
  }
  double& operator()(int j1, int j2) {
    return values_[static_cast<std::size_t>(j1) * grid_.n() + j2];
  }

  double max_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }
  /// L2 norm by the trapezoidal (spectrally exact) quadrature.
  double l2_norm_quadrature() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    const double h = grid_.spacing();
    return std::sqrt(s * h * h);
  }

  ScalarField& operator+=(const ScalarField& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  void require_same_grid(const ScalarField& o) const {
    if (!(grid_ == o.grid_)) throw Error("field arithmetic across different grids");
  }

  Grid grid_;
  std::vector<double> values_;
};

/// Two scalar components on a shared grid.
struct VectorField {
  ScalarField x1;
  ScalarField x2;

  explicit VectorField(Grid grid) : x1(grid), x2(grid) {}
  VectorField(ScalarField a, ScalarField b) : x1(std::move(a)), x2(std::move(b)) {
    if (!(x1.grid() == x2.grid())) throw Error("vector components live on different grids");
  }

  template <typename F1, typename F2>
  static VectorField sample(Grid grid, F1&& f1, F2&& f2) {
    return {ScalarField::sample(grid, f1), ScalarField::sample(grid, f2)};
  }

  const Grid& grid() const { return x1.grid(); }

  /// max over nodes of the Euclidean magnitude.
  double max_norm() const {
    double m = 0.0;
    auto a = x1.values();
    auto b = x2.values();
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::hypot(a[i], b[i]));
    return m;
  }

  VectorField& operator+=(const VectorField& o) {
    x1 += o.x1;
    x2 += o.x2;
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    x1 -= o.x1;
    x2 -= o.x2;
    return *this;
  }
  VectorField& operator*=(double s) {
    x1 *= s;
    x2 *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }
};

}  // namespace eulerrough
