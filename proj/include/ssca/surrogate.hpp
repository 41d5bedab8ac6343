#pragma once

#include <cstddef>
#include <vector>

#include "ssca/numerics.hpp"

namespace ssca {

/// Strongly convex quadratic constant + <linear, w> + curvature * ||w||^2.
struct QuadraticSurrogate {
  double constant = 0.0;
  Vector linear;
  double curvature = 1.0;

  QuadraticSurrogate() = default;
  QuadraticSurrogate(std::size_t dim, double tau);
  QuadraticSurrogate(double c, Vector lin, double tau);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(linear.size()); }
};

double eval(const QuadraticSurrogate& s, const Vector& w);
Vector gradient(const QuadraticSurrogate& s, const Vector& w);

/// Recursively averaged surrogates for the objective and M constraints.
/// All coefficients start at zero (round 0).
class SurrogateBank {
 public:
  SurrogateBank(std::size_t dim, std::size_t num_constraints, double tau);

  const QuadraticSurrogate& objective() const noexcept { return objective_; }
  /// m is 1-based, matching constraint numbering.
  const QuadraticSurrogate& constraint(std::size_t m) const;
  const std::vector<QuadraticSurrogate>& constraints() const noexcept { return constraints_; }
  std::size_t num_constraints() const noexcept { return constraints_.size(); }
  std::size_t dim() const noexcept { return objective_.dim(); }
  double tau() const noexcept { return objective_.curvature; }
  unsigned round() const noexcept { return round_; }

  /// linear <- (1-rho) linear + rho (batch_avg_grad - 2 tau w_t)
  void accumulate_objective(double rho, const Vector& w_t, const Vector& batch_avg_grad);

  /// constant_m <- (1-rho) constant_m + rho (value - <grad, w_t> + tau ||w_t||^2)
  /// linear_m   <- (1-rho) linear_m   + rho (grad - 2 tau w_t)
  void accumulate_constraint(std::size_t m, double rho, const Vector& w_t, double batch_avg_value,
                             const Vector& batch_avg_grad);

  /// Marks the end of a round's accumulation.
  void advance_round() noexcept { ++round_; }

 private:
  QuadraticSurrogate objective_;
  std::vector<QuadraticSurrogate> constraints_;
  unsigned round_ = 0;
};

void check_stepsize(double rho, const char* what);

}  // namespace ssca
