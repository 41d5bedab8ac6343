#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "ssca/numerics.hpp"
#include "ssca/solvers.hpp"
#include "ssca/surrogate.hpp"

namespace ssca {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstVecRef = Eigen::Ref<const Vector>;

/// L output classes, J hidden cells, P input features.
struct NnShape {
  std::size_t L = 0;
  std::size_t J = 0;
  std::size_t P = 0;

  std::size_t output_size() const noexcept { return L * J; }
  std::size_t hidden_size() const noexcept { return J * P; }
  std::size_t dim() const noexcept { return J * (P + L); }
  bool operator==(const NnShape&) const = default;
};

/// Two-layer swish/softmax network. Flat layout: omega0 (L x J) row-major,
/// then omega1 (J x P) row-major.
struct NnParams {
  RowMatrix omega0;
  RowMatrix omega1;

  static NnParams zeros(const NnShape& shape);
  static NnParams from_flat(const NnShape& shape, const Vector& flat);
  /// Entries uniform in (-scale, scale).
  static NnParams random_uniform(const NnShape& shape, SeededRng& rng, double scale);

  NnShape shape() const noexcept {
    return {static_cast<std::size_t>(omega0.rows()), static_cast<std::size_t>(omega0.cols()),
            static_cast<std::size_t>(omega1.cols())};
  }
  Vector flat() const;
  double squared_norm() const noexcept { return omega0.squaredNorm() + omega1.squaredNorm(); }
};

double sigmoid(double z) noexcept;
double swish(double z) noexcept;
double swish_prime(double z) noexcept;

/// Class probabilities Q (length L) for one feature vector.
Vector forward(const NnParams& params, ConstVecRef z);

/// Mean cross-entropy over the rows of (features, labels).
double loss(const NnParams& params, const RowMatrix& features, const RowMatrix& labels);

/// Per-sample terms shared by the centralized and feature-partitioned paths.
struct ResidualTerms {
  Vector activation;  // S(pre), length J
  Vector slope;       // S'(pre), length J
  Vector residual;    // Q - y, length L
  double log_lik = 0.0;  // sum_l y_l log Q_l
};

/// Evaluates the network head from a full hidden pre-activation.
ResidualTerms residual_terms(const RowMatrix& omega0, const Vector& preactivation, ConstVecRef y);

/// Hidden-unit backprop signal S'(pre) * (omega0^T r), length J.
Vector hidden_delta(const RowMatrix& omega0, const ResidualTerms& terms);

/// Per-sample statistics: a_bar = d(-log Q_y)/d omega0, b_bar = d(-log Q_y)/d omega1,
/// c_bar = sum_l y_l log Q_l.
struct SampleStats {
  RowMatrix a_bar;
  RowMatrix b_bar;
  double c_bar = 0.0;

  static SampleStats zeros(const NnShape& shape);
  SampleStats& operator+=(const SampleStats& other);
  SampleStats& operator*=(double k);
  Vector flat_grad() const;
};

SampleStats sample_stats(const NnParams& params, ConstVecRef z, ConstVecRef y);

/// Sum of sample_stats over the listed rows, accumulated in list order.
SampleStats batch_sum(const NnParams& params, const RowMatrix& features, const RowMatrix& labels,
                      const IndexSet& rows);

/// Full gradient of loss(.) + lambda ||w||^2 over all rows, flattened.
Vector full_gradient(const NnParams& params, const RowMatrix& features, const RowMatrix& labels,
                     double lambda);

/// Fraction of rows whose argmax Q matches the label argmax.
double accuracy(const NnParams& params, const RowMatrix& features, const RowMatrix& labels);

/// Recursive surrogate state of the application: beta tracks the iterates,
/// (A, B) the linear coefficients and C the constant of the loss surrogate.
struct AppSurrogateState {
  Vector beta;
  RowMatrix A;
  RowMatrix B;
  double C = 0.0;
  unsigned round = 0;

  static AppSurrogateState zeros(const NnShape& shape);
  /// stacked (A, B) in the flat parameter layout.
  Vector stacked_linear() const;
};

/// One recursion step given weighted batch averages of the sample statistics.
/// The constant tracks the batch loss -c_bar + tau ||w_t||^2 - <(A_bar, B_bar), w_t>.
AppSurrogateState update_app_surrogate(const AppSurrogateState& state, double rho, double tau,
                                       const NnParams& w_t, const SampleStats& batch_avg);

/// Closed-form minimizer of F_bar(w) + 2 lambda <beta, w>.
NnParams solve_unconstrained_app(const AppSurrogateState& state, double lambda, double tau);

struct AppConstrainedSolution {
  NnParams omega_bar;
  double slack = 0.0;
  double nu = 0.0;
};

/// min ||w||^2 + c s  s.t.  F_bar(w) + C - U <= s, s >= 0, via the closed form.
AppConstrainedSolution solve_constrained_app(const AppSurrogateState& state, double U, double tau,
                                             double c);

/// Same problem through the log-barrier solver.
AppConstrainedSolution solve_constrained_app_barrier(const AppSurrogateState& state, double U,
                                                     double tau, double c, double tol);

/// The loss-constraint surrogate F_bar(w) + C - U as a generic quadratic.
QuadraticSurrogate constraint_surrogate(const AppSurrogateState& state, double U, double tau);

}  // namespace ssca
