#pragma once

#include <stdexcept>
#include <string>

namespace eulerrough {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Poisson-type solve was requested for data with non-vanishing mean.
class NonZeroMean : public Error {
 public:
  NonZeroMean(double mean, double scale)
      : Error("field mean " + std::to_string(mean) + " exceeds tolerance relative to max-norm " +
              std::to_string(scale)),
        mean_(mean) {}
  double mean() const { return mean_; }

 private:
  double mean_;
};

class NotDivergenceFree : public Error {
 public:
  explicit NotDivergenceFree(double relative_divergence)
      : Error("velocity field is not divergence-free (relative divergence " +
              std::to_string(relative_divergence) + ")"),
        relative_divergence_(relative_divergence) {}
  double relative_divergence() const { return relative_divergence_; }

 private:
  double relative_divergence_;
};

class CflViolation : public Error {
 public:
  CflViolation(double courant, double limit, double t)
      : Error("CFL guard violated at t=" + std::to_string(t) + ": Courant number " +
              std::to_string(courant) + " > " + std::to_string(limit)),
        courant_(courant) {}
  double courant() const { return courant_; }

 private:
  double courant_;
};

class InversionFailure : public Error {
 public:
  InversionFailure(double residual, int iterations)
      : Error("flow map inversion did not converge after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class TrajectoryFailure : public Error {
 public:
  using Error::Error;
};

/// Raised when a requested bump radius is not resolvable on the grid.
class Unresolvable : public Error {
 public:
  Unresolvable(double radius, double spacing, int minimal_n)
      : Error("bump radius " + std::to_string(radius) + " is below 8 grid spacings (" +
              std::to_string(8.0 * spacing) + "); raise N to at least " +
              std::to_string(minimal_n)),
        minimal_n_(minimal_n) {}
  int minimal_n() const { return minimal_n_; }

 private:
  int minimal_n_;
};

class DegenerateWitness : public Error {
 public:
  explicit DegenerateWitness(double m)
      : Error("witness search found only m=" + std::to_string(m) +
              "; perturb the base point along t*u_base and retry"),
        m_(m) {}
  double m() const { return m_; }

 private:
  double m_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace eulerrough
