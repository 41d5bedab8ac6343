#pragma once

#include <span>
#include <vector>

#include "ssca/numerics.hpp"
#include "ssca/surrogate.hpp"

namespace ssca {

/// Solution of min F0(w) + c * sum(s) s.t. F_m(w) <= s_m, s_m >= 0.
struct PenalizedSolveResult {
  Vector omega_bar;
  Vector slack;  // length M, nonnegative
  Vector dual;   // length M, within [0, c]
  std::vector<bool> active;
};

/// argmin of an unconstrained strongly convex quadratic: -linear / (2 tau).
Vector solve_unconstrained(const QuadraticSurrogate& surrogate);

/// Single-constraint penalized problem with ||w||^2 objective:
///   min ||w||^2 + c s  s.t.  <a, w> + tau ||w||^2 + C - U <= s,  s >= 0.
/// Closed form through the dual variable nu in [0, c].
PenalizedSolveResult solve_penalized_ball(const Vector& a_lin, double tau, double C, double U,
                                          double c);

struct BisectionSolution {
  Vector omega_bar;
  double slack = 0.0;
  double nu = 0.0;
};

/// Same problem as solve_penalized_ball, solved by maximizing the concave dual
/// h(nu) = nu (C - U - b nu / (4 (1 + tau nu))) over [0, c] with bisection on h'.
BisectionSolution dual_bisection_oracle(const Vector& a_lin, double tau, double C, double U,
                                        double c);

struct BarrierOptions {
  double tol = 1e-9;              // duality-gap target, relative to max(1, |objective|)
  double initial_weight = 1.0;    // first barrier weight t is this divided by max(1, c)
  double weight_growth = 10.0;
  int max_newton_per_centering = 200;
  int max_centering_steps = 80;
};

/// Log-barrier interior-point solve of the penalized QCQP for general M >= 1.
/// Starts from w = 0 with each s_m centered for that w.
PenalizedSolveResult solve_qcqp_barrier(const QuadraticSurrogate& objective,
                                        std::span<const QuadraticSurrogate> constraints, double c,
                                        const BarrierOptions& options = {});

PenalizedSolveResult solve_qcqp_barrier(const QuadraticSurrogate& objective,
                                        std::span<const QuadraticSurrogate> constraints, double c,
                                        double tol);

struct KktResiduals {
  double stationarity = 0.0;     // ||grad F0 + sum nu_m grad F_m||_inf
  double primal = 0.0;           // max violation of F_m <= s_m and s_m >= 0
  double complementarity = 0.0;  // max of |nu_m (F_m - s_m)| and |(c - nu_m) s_m|
  double dual = 0.0;             // max violation of 0 <= nu_m <= c
};

KktResiduals kkt_residuals(const QuadraticSurrogate& objective,
                           std::span<const QuadraticSurrogate> constraints, double c,
                           const PenalizedSolveResult& result);

}  // namespace ssca
