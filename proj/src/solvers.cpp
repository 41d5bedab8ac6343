#include "ssca/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ssca/errors.hpp"

namespace ssca {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string(what) + " is not finite");
}

void check_ball_inputs(const Vector& a_lin, double tau, double C, double U, double c) {
  if (!all_finite(a_lin)) throw NumericError("penalized ball: linear coefficients not finite");
  require_finite(tau, "penalized ball: tau");
  require_finite(C, "penalized ball: C");
  require_finite(U, "penalized ball: U");
  require_finite(c, "penalized ball: c");
  if (!(tau > 0.0)) throw InvalidArgument("penalized ball: tau must be positive");
  if (!(c > 0.0)) throw InvalidArgument("penalized ball: penalty c must be positive");
}

Vector ball_minimizer(const Vector& a_lin, double tau, double nu) {
  return (-nu / (2.0 * (1.0 + nu * tau))) * a_lin;
}

double ball_violation(const Vector& a_lin, double tau, double C, double U, const Vector& w) {
  return a_lin.dot(w) + tau * w.squaredNorm() + C - U;
}

}  // namespace

Vector solve_unconstrained(const QuadraticSurrogate& surrogate) {
  if (!(surrogate.curvature > 0.0)) {
    throw InvalidArgument("solve_unconstrained: curvature must be positive");
  }
  return surrogate.linear / (-2.0 * surrogate.curvature);
}

PenalizedSolveResult solve_penalized_ball(const Vector& a_lin, double tau, double C, double U,
                                          double c) {
  check_ball_inputs(a_lin, tau, C, U, c);
  const double b = a_lin.squaredNorm();
  const double denom = b + 4.0 * tau * (U - C);
  double nu = c;
  if (denom > 0.0) {
    const double raw = (std::sqrt(b / denom) - 1.0) / tau;
    nu = std::clamp(raw, 0.0, c);
  }

  PenalizedSolveResult r;
  r.omega_bar = ball_minimizer(a_lin, tau, nu);
  r.slack = Vector::Constant(1, std::max(0.0, ball_violation(a_lin, tau, C, U, r.omega_bar)));
  r.dual = Vector::Constant(1, nu);
  r.active = {nu > 0.0};
  return r;
}

BisectionSolution dual_bisection_oracle(const Vector& a_lin, double tau, double C, double U,
                                        double c) {
  check_ball_inputs(a_lin, tau, C, U, c);
  const double b = a_lin.squaredNorm();
  // h(nu) = nu (C - U) - b nu^2 / (4 (1 + tau nu)), differentiated directly.
  auto dh = [&](double nu) {
    const double q = 1.0 + tau * nu;
    return (C - U) - b * (2.0 * nu * q - tau * nu * nu) / (4.0 * q * q);
  };

  double nu = 0.0;
  if (dh(0.0) <= 0.0) {
    nu = 0.0;
  } else if (dh(c) >= 0.0) {
    nu = c;
  } else {
    double lo = 0.0;
    double hi = c;
    for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (dh(mid) > 0.0 ? lo : hi) = mid;
    }
    nu = 0.5 * (lo + hi);
  }

  BisectionSolution out;
  out.nu = nu;
  out.omega_bar = ball_minimizer(a_lin, tau, nu);
  out.slack = std::max(0.0, ball_violation(a_lin, tau, C, U, out.omega_bar));
  return out;
}

namespace {

struct BarrierProblem {
  const QuadraticSurrogate& f0;
  std::span<const QuadraticSurrogate> cons;
  double c;

  double objective(const Vector& w, const Vector& s) const { return eval(f0, w) + c * s.sum(); }

  // Returns +inf outside the strict interior.
  double phi(double t, const Vector& w, const Vector& s) const {
    double val = t * objective(w, s);
    for (std::size_t m = 0; m < cons.size(); ++m) {
      const double u = s[m] - eval(cons[m], w);
      if (!(u > 0.0) || !(s[m] > 0.0)) return std::numeric_limits<double>::infinity();
      val -= std::log(u) + std::log(s[m]);
    }
    return val;
  }
};

// Active-set refinement of a barrier point: constraints are classified as
// inactive (nu = 0), active (F = 0, nu free) or violated (nu = c), and the
// resulting KKT equations are solved by Newton's method. Every Hessian is a
// multiple of the identity, so each step needs only an |A| x |A| solve. The
// refined point replaces the barrier one only if the classification holds.
void polish(const QuadraticSurrogate& f0, std::span<const QuadraticSurrogate> cons, double c, double tight,
            PenalizedSolveResult& r) {
  const std::size_t M = cons.size();
  enum class Role { Inactive, Active, Violated };
  std::vector<Role> role(M);
  std::vector<std::size_t> act;
  for (std::size_t m = 0; m < M; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    const double fm = eval(cons[m], r.omega_bar);
    const double nu = r.dual[mi];
    if (fm > tight && nu >= c * (1.0 - tight)) {
      role[m] = Role::Violated;
    } else if (fm < -tight) {
      role[m] = Role::Inactive;
    } else {
      role[m] = Role::Active;
      act.push_back(m);
    }
  }

  Vector w = r.omega_bar;
  Vector nu(static_cast<Eigen::Index>(M));
  for (std::size_t m = 0; m < M; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    nu[mi] = role[m] == Role::Violated ? c : role[m] == Role::Inactive ? 0.0 : r.dual[mi];
  }
  const auto A = static_cast<Eigen::Index>(act.size());
  Eigen::MatrixXd G(w.size(), A);
  Vector F(A);
  for (int it = 0; it < 50; ++it) {
    double h = 2.0 * f0.curvature;
    Vector rw = gradient(f0, w);
    for (std::size_t m = 0; m < M; ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      if (nu[mi] == 0.0 && role[m] != Role::Active) continue;
      h += 2.0 * nu[mi] * cons[m].curvature;
      rw += nu[mi] * gradient(cons[m], w);
    }
    for (Eigen::Index a = 0; a < A; ++a) {
      G.col(a) = gradient(cons[act[static_cast<std::size_t>(a)]], w);
      F[a] = eval(cons[act[static_cast<std::size_t>(a)]], w);
    }
    const double residual = std::max(rw.cwiseAbs().maxCoeff(), A ? F.cwiseAbs().maxCoeff() : 0.0);
    if (residual <= 1e-13 * std::max(1.0, w.cwiseAbs().maxCoeff())) break;
    Vector dnu = Vector::Zero(A);
    if (A > 0) {
      const Eigen::MatrixXd S = G.transpose() * G;
      dnu = S.ldlt().solve(h * F - G.transpose() * rw);
      if (!dnu.allFinite()) return;
    }
    w -= (rw + G * dnu) / h;
    for (Eigen::Index a = 0; a < A; ++a) nu[static_cast<Eigen::Index>(act[static_cast<std::size_t>(a)])] += dnu[a];
    if (!w.allFinite()) return;
  }

  // Accept only a consistent KKT point.
  for (std::size_t m = 0; m < M; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    const double fm = eval(cons[m], w);
    switch (role[m]) {
      case Role::Inactive:
        if (fm > 0.0) return;
        break;
      case Role::Violated:
        if (fm < 0.0) return;
        break;
      case Role::Active:
        if (nu[mi] < 0.0 || nu[mi] > c || std::abs(fm) > 1e-9) return;
        break;
    }
  }
  if ((w - r.omega_bar).cwiseAbs().maxCoeff() > std::sqrt(tight)) return;
  r.omega_bar = w;
  r.dual = nu;
}

}  // namespace

PenalizedSolveResult solve_qcqp_barrier(const QuadraticSurrogate& objective,
                                        std::span<const QuadraticSurrogate> constraints, double c,
                                        double tol) {
  BarrierOptions opt;
  opt.tol = tol;
  return solve_qcqp_barrier(objective, constraints, c, opt);
}

PenalizedSolveResult solve_qcqp_barrier(const QuadraticSurrogate& objective,
                                        std::span<const QuadraticSurrogate> constraints, double c,
                                        const BarrierOptions& opt) {
  const std::size_t M = constraints.size();
  const Eigen::Index d = objective.linear.size();
  if (M == 0) throw InvalidArgument("solve_qcqp_barrier: need at least one constraint");
  if (!(c > 0.0)) throw InvalidArgument("solve_qcqp_barrier: penalty c must be positive");
  if (!(opt.tol > 0.0)) throw InvalidArgument("solve_qcqp_barrier: tolerance must be positive");
  if (!(objective.curvature > 0.0)) {
    throw InvalidArgument("solve_qcqp_barrier: objective curvature must be positive");
  }
  for (const auto& g : constraints) {
    if (g.linear.size() != d) throw ShapeError("solve_qcqp_barrier: constraint dimension mismatch");
    if (!(g.curvature > 0.0)) {
      throw InvalidArgument("solve_qcqp_barrier: constraint curvature must be positive");
    }
  }

  const BarrierProblem prob{objective, constraints, c};
  const double newton_tol = opt.tol / 10.0;
  const auto Mi = static_cast<Eigen::Index>(M);

  Vector w = Vector::Zero(d);
  Vector s(Mi);
  // A large t c at the first centering pins the iterate to the constraint
  // boundary, where damped Newton crawls; start where the slack price is O(1).
  double t = opt.initial_weight / std::max(1.0, c);
  // Start each slack at the minimizer of t c s - log(s - g) - log(s) for w = 0,
  // the larger root of t c s^2 - (t c g + 2) s + g = 0.
  for (std::size_t m = 0; m < M; ++m) {
    const double g = eval(constraints[m], w);
    const double a = t * c;
    const double b = a * g + 2.0;
    s[m] = (b + std::sqrt(b * b - 4.0 * a * g)) / (2.0 * a);
  }

  Eigen::MatrixXd G(d, Mi);
  Vector u(Mi), grad_w(d), grad_s(Mi), k(Mi), dw(d), ds(Mi);
  double decrement = std::numeric_limits<double>::infinity();

  for (int outer = 0;; ++outer) {
    if (outer >= opt.max_centering_steps) {
      throw SolverError("solve_qcqp_barrier: centering-step cap reached", 2.0 * M / t);
    }
    int it = 0;
    for (;; ++it) {
      if (it >= opt.max_newton_per_centering) {
        std::ostringstream msg;
        msg << "solve_qcqp_barrier: Newton did not converge (decrement " << decrement
            << ", weight " << t << ")";
        throw SolverError(msg.str(), decrement);
      }
      double diag = 2.0 * t * objective.curvature;
      grad_w = t * gradient(objective, w);
      for (std::size_t m = 0; m < M; ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        u[mi] = s[mi] - eval(constraints[m], w);
        G.col(mi) = gradient(constraints[m], w);
        diag += 2.0 * constraints[m].curvature / u[mi];
        grad_w += G.col(mi) / u[mi];
        grad_s[mi] = t * c - 1.0 / u[mi] - 1.0 / s[mi];
        const double wm = 1.0 / (u[mi] * u[mi]);
        const double qm = 1.0 / (s[mi] * s[mi]);
        k[mi] = wm * qm / (wm + qm);
      }
      // Eliminate the diagonal slack block, then apply Woodbury to
      // diag*I + G K G^T so that the work is O(d M^2).
      Vector wgt(Mi);
      for (Eigen::Index m = 0; m < Mi; ++m) {
        const double wm = 1.0 / (u[m] * u[m]);
        const double qm = 1.0 / (s[m] * s[m]);
        wgt[m] = wm / (wm + qm);
      }
      const Vector rhs = -grad_w - G * (wgt.cwiseProduct(grad_s));
      Eigen::MatrixXd small = G.transpose() * G;
      small.diagonal() += diag * k.cwiseInverse();
      const Vector inner = small.ldlt().solve(G.transpose() * rhs);
      dw = (rhs - G * inner) / diag;
      for (Eigen::Index m = 0; m < Mi; ++m) {
        const double wm = 1.0 / (u[m] * u[m]);
        const double qm = 1.0 / (s[m] * s[m]);
        ds[m] = (-grad_s[m] + wm * G.col(m).dot(dw)) / (wm + qm);
      }
      decrement = -(grad_w.dot(dw) + grad_s.dot(ds));
      if (!std::isfinite(decrement)) {
        throw SolverError("solve_qcqp_barrier: non-finite Newton step", decrement);
      }
      const double phi0 = prob.phi(t, w, s);
      // Decreases below the roundoff of phi cannot be resolved.
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(phi0);
      if (decrement / 2.0 <= std::max(newton_tol, floor)) break;

      double step = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60 && !accepted; ++ls) {
        accepted = prob.phi(t, w + step * dw, s + step * ds) <= phi0 - 0.25 * step * decrement;
        if (!accepted) step *= 0.5;
      }
      if (!accepted) break;
      const Vector w_next = w + step * dw;
      const Vector s_next = s + step * ds;
      if (w_next == w && s_next == s) break;
      w = w_next;
      s = s_next;
    }
    const double gap = 2.0 * static_cast<double>(M) / t;
    if (gap <= opt.tol * std::max(1.0, std::abs(prob.objective(w, s)))) break;
    t *= opt.weight_growth;
  }

  PenalizedSolveResult r;
  r.omega_bar = w;
  r.slack.resize(Mi);
  r.dual.resize(Mi);
  r.active.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    r.dual[mi] = std::clamp(1.0 / (t * (s[mi] - eval(constraints[m], w))), 0.0, c);
  }
  polish(objective, constraints, c, std::sqrt(opt.tol), r);
  const double tight = std::sqrt(opt.tol);
  for (std::size_t m = 0; m < M; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    const double fm = eval(constraints[m], r.omega_bar);
    r.slack[mi] = std::max(0.0, fm);
    r.active[m] = fm >= -tight;
  }
  return r;
}

KktResiduals kkt_residuals(const QuadraticSurrogate& objective,
                           std::span<const QuadraticSurrogate> constraints, double c,
                           const PenalizedSolveResult& r) {
  KktResiduals k;
  Vector stat = gradient(objective, r.omega_bar);
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    const double fm = eval(constraints[m], r.omega_bar);
    const double nu = r.dual[mi];
    const double s = r.slack[mi];
    stat += nu * gradient(constraints[m], r.omega_bar);
    k.primal = std::max({k.primal, fm - s, -s});
    k.complementarity = std::max({k.complementarity, std::abs(nu * (fm - s)), std::abs((c - nu) * s)});
    k.dual = std::max({k.dual, -nu, nu - c});
  }
  k.stationarity = stat.cwiseAbs().maxCoeff();
  return k;
}

}  // namespace ssca
