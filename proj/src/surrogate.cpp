#include "ssca/surrogate.hpp"

#include <string>

#include "ssca/errors.hpp"

namespace ssca {

QuadraticSurrogate::QuadraticSurrogate(std::size_t dim, double tau)
    : constant(0.0), linear(Vector::Zero(static_cast<Eigen::Index>(dim))), curvature(tau) {
  if (!(tau > 0.0)) throw InvalidArgument("QuadraticSurrogate: curvature must be positive");
}

QuadraticSurrogate::QuadraticSurrogate(double c, Vector lin, double tau)
    : constant(c), linear(std::move(lin)), curvature(tau) {
  if (!(tau > 0.0)) throw InvalidArgument("QuadraticSurrogate: curvature must be positive");
}

double eval(const QuadraticSurrogate& s, const Vector& w) {
  require_same_size(s.linear, w, "QuadraticSurrogate::eval");
  return s.constant + s.linear.dot(w) + s.curvature * w.squaredNorm();
}

Vector gradient(const QuadraticSurrogate& s, const Vector& w) {
  require_same_size(s.linear, w, "QuadraticSurrogate::gradient");
  return s.linear + 2.0 * s.curvature * w;
}

void check_stepsize(double rho, const char* what) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw InvalidArgument(std::string(what) + ": stepsize must lie in (0, 1], got " +
                          std::to_string(rho));
  }
}

SurrogateBank::SurrogateBank(std::size_t dim, std::size_t num_constraints, double tau)
    : objective_(dim, tau), constraints_(num_constraints, QuadraticSurrogate(dim, tau)) {}

const QuadraticSurrogate& SurrogateBank::constraint(std::size_t m) const {
  if (m < 1 || m > constraints_.size()) {
    throw InvalidArgument("SurrogateBank: constraint index " + std::to_string(m) +
                          " outside [1, " + std::to_string(constraints_.size()) + "]");
  }
  return constraints_[m - 1];
}

void SurrogateBank::accumulate_objective(double rho, const Vector& w_t,
                                         const Vector& batch_avg_grad) {
  check_stepsize(rho, "accumulate_objective");
  require_same_size(objective_.linear, w_t, "accumulate_objective(w_t)");
  require_same_size(objective_.linear, batch_avg_grad, "accumulate_objective(grad)");
  const double tau = objective_.curvature;
  objective_.linear = (1.0 - rho) * objective_.linear + rho * (batch_avg_grad - 2.0 * tau * w_t);
}

void SurrogateBank::accumulate_constraint(std::size_t m, double rho, const Vector& w_t,
                                          double batch_avg_value, const Vector& batch_avg_grad) {
  if (m < 1 || m > constraints_.size()) {
    throw InvalidArgument("accumulate_constraint: constraint index " + std::to_string(m) +
                          " outside [1, " + std::to_string(constraints_.size()) + "]");
  }
  check_stepsize(rho, "accumulate_constraint");
  QuadraticSurrogate& s = constraints_[m - 1];
  require_same_size(s.linear, w_t, "accumulate_constraint(w_t)");
  require_same_size(s.linear, batch_avg_grad, "accumulate_constraint(grad)");
  const double tau = s.curvature;
  const double offset = batch_avg_value - batch_avg_grad.dot(w_t) + tau * w_t.squaredNorm();
  s.constant = (1.0 - rho) * s.constant + rho * offset;
  s.linear = (1.0 - rho) * s.linear + rho * (batch_avg_grad - 2.0 * tau * w_t);
}

}  // namespace ssca
