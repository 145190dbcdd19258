#pragma once

// Off-grid evaluation of periodic fields.
//
// Small point sets are evaluated by direct Fourier summation (exact for the
// band-limited interpolant). Large point sets use a tensor-product Lagrange
// stencil on a spectrally upsampled copy of the field, which reproduces nodal
// values exactly and is accurate to ~1e-10 for well-resolved fields.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "eulerrough/field.hpp"
#include "eulerrough/spectral.hpp"

namespace eulerrough {

struct InterpolationOptions {
  int upsample = 2;        // refinement factor of the interpolation grid
  int stencil = 10;        // Lagrange points per axis (even)
  std::size_t direct_max_points = 64;
};

/// Interpolates several fields on one grid with a shared stencil computation.
class PeriodicInterpolator {
 public:
  PeriodicInterpolator(std::span<const Spectrum> fields, InterpolationOptions opts = {})
      : opts_(opts), fine_(fields.empty() ? 8 : fields.front().grid().n() * opts.upsample) {
    if (opts_.stencil < 2 || opts_.stencil > 32 || opts_.stencil % 2 != 0) {
      throw Error("stencil must be even and within [2, 32]");
    }
    // Fine values are stored with periodic ghost layers so that every
    // stencil reads a contiguous p x p block.
    const int m = fine_.n();
    const int w = m + opts_.stencil;
    const int off = opts_.stencil / 2 - 1;
    fine_values_.reserve(fields.size());
    for (const Spectrum& s : fields) {
      const ScalarField up = ScalarField::from_spectrum(spectral::resample(s, fine_));
      std::vector<double> padded(static_cast<std::size_t>(w) * w);
      for (int r = 0; r < w; ++r) {
        const int src_r = ((r - off) % m + m) % m;
        for (int c = 0; c < w; ++c) {
          padded[static_cast<std::size_t>(r) * w + c] = up(src_r, ((c - off) % m + m) % m);
        }
      }
      fine_values_.push_back(std::move(padded));
    }
    const int p = opts_.stencil;
    barycentric_.resize(p);
    for (int i = 0; i < p; ++i) {
      double prod = 1.0;
      for (int k = 0; k < p; ++k) {
        if (k != i) prod *= static_cast<double>(i - k);
      }
      barycentric_[i] = 1.0 / prod;
    }
  }

  std::size_t field_count() const { return fine_values_.size(); }

  /// Writes one value per field into `out`.
  void evaluate(const Point& x, std::span<double> out) const {
    switch (opts_.stencil) {
      case 6: return evaluate_fixed<6>(x, out);
      case 8: return evaluate_fixed<8>(x, out);
      case 10: return evaluate_fixed<10>(x, out);
      case 12: return evaluate_fixed<12>(x, out);
      default: return evaluate_any(x, out, opts_.stencil);
    }
  }

 private:
  // Fixed-size copy so the compiler can unroll the stencil loops.
  template <int P>
  void evaluate_fixed(const Point& x, std::span<double> out) const {
    const int w = fine_.n() + P;
    double w1[P];
    double w2[P];
    const int j1 = weights(x.x1, w1, P);
    const int j2 = weights(x.x2, w2, P);
    for (std::size_t f = 0; f < fine_values_.size(); ++f) {
      const double* v = fine_values_[f].data() + static_cast<std::size_t>(j1) * w + j2;
      double acc = 0.0;
      for (int a = 0; a < P; ++a) {
        const double* row = v + static_cast<std::size_t>(a) * w;
        double inner = 0.0;
        for (int b = 0; b < P; ++b) inner += w2[b] * row[b];
        acc += w1[a] * inner;
      }
      out[f] = acc;
    }
  }

  void evaluate_any(const Point& x, std::span<double> out, int p) const {
    const int w = fine_.n() + p;
    double w1[32];
    double w2[32];
    const int j1 = weights(x.x1, w1, p);
    const int j2 = weights(x.x2, w2, p);
    for (std::size_t f = 0; f < fine_values_.size(); ++f) {
      const double* v = fine_values_[f].data() + static_cast<std::size_t>(j1) * w + j2;
      double acc = 0.0;
      for (int a = 0; a < p; ++a) {
        const double* row = v + static_cast<std::size_t>(a) * w;
        double inner = 0.0;
        for (int b = 0; b < p; ++b) inner += w2[b] * row[b];
        acc += w1[a] * inner;
      }
      out[f] = acc;
    }
  }

  /// Lagrange weights for coordinate x; returns the first padded index.
  int weights(double x, double* w, int p) const {
    const int m = fine_.n();
    double s = x / fine_.spacing();
    s -= m * std::floor(s / m);
    // Snap coordinates within roundoff of a node so nodal values are exact.
    const double nearest = std::round(s);
    if (std::abs(s - nearest) < 1e-12 * m) s = nearest;
    int j0 = static_cast<int>(s);
    const double t = s - j0;
    if (j0 >= m) j0 -= m;
    // t lies in [0, 1); stencil offsets are first..first+p-1.
    const int first = -p / 2 + 1;
    if (t == 0.0) {
      for (int i = 0; i < p; ++i) w[i] = (first + i == 0) ? 1.0 : 0.0;
      return j0;
    }
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
      w[i] = barycentric_[i] / (t - (first + i));
      sum += w[i];
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < p; ++i) w[i] *= inv;
    return j0;
  }

  InterpolationOptions opts_;
  Grid fine_;
  std::vector<std::vector<double>> fine_values_;
  std::vector<double> barycentric_;
};

/// Direct Fourier summation of a real field at one point.
inline double fourier_sum(const Spectrum& s, const Point& x) {
  const Grid& g = s.grid();
  const int n = g.n();
  const int h = g.half();
  std::vector<Complex> e2(h);
  for (int b = 0; b < h; ++b) e2[b] = std::polar(1.0, b * x.x2);
  // Nyquist modes are the symmetric (cosine) split of +-N/2, matching resample().
  e2[n / 2] = std::cos(0.5 * n * x.x2);
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    Complex row(0.0, 0.0);
    for (int b = 0; b < h; ++b) row += s.column_weight(b) * s.at(a, b) * e2[b];
    const Complex e1 =
        a == n / 2 ? Complex(std::cos(0.5 * n * x.x1), 0.0) : std::polar(1.0, g.wavenumber(a) * x.x1);
    total += (e1 * row).real();
  }
  return total;
}

inline std::vector<double> evaluate_offgrid(const ScalarField& f, std::span<const Point> points,
                                            InterpolationOptions opts = {}) {
  std::vector<double> out(points.size());
  const Spectrum s = f.spectrum();
  if (points.size() <= opts.direct_max_points) {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = fourier_sum(s, points[i]);
    return out;
  }
  const PeriodicInterpolator interp(std::span<const Spectrum>(&s, 1), opts);
  for (std::size_t i = 0; i < points.size(); ++i) interp.evaluate(points[i], {&out[i], 1});
  return out;
}

/// Evaluates a fixed set of fields at arbitrary point lists, picking the
/// direct sum or the stencil interpolator by the expected point count.
class FieldSampler {
 public:
  FieldSampler(std::vector<Spectrum> fields, std::size_t expected_points,
               InterpolationOptions opts = {})
      : fields_(std::move(fields)) {
    if (expected_points > opts.direct_max_points) {
      interp_.emplace(std::span<const Spectrum>(fields_), opts);
    }
  }

  std::size_t field_count() const { return fields_.size(); }

  /// out[f][i] = field f at points[i].
  void evaluate(std::span<const Point> points, std::vector<std::vector<double>>& out) const {
    out.resize(fields_.size());
    for (auto& o : out) o.resize(points.size());
    std::vector<double> tmp(fields_.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (interp_) {
        interp_->evaluate(points[i], tmp);
      } else {
        for (std::size_t f = 0; f < fields_.size(); ++f) tmp[f] = fourier_sum(fields_[f], points[i]);
      }
      for (std::size_t f = 0; f < fields_.size(); ++f) out[f][i] = tmp[f];
    }
  }

 private:
  std::vector<Spectrum> fields_;
  std::optional<PeriodicInterpolator> interp_;
};

}  // namespace eulerrough
