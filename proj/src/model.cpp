#include "ssca/model.hpp"

#include <cmath>
#include <string>

#include "ssca/errors.hpp"

namespace ssca {

namespace {

void check_shape(const NnParams& p, const NnShape& s, const char* what) {
  if (p.shape() != s) throw ShapeError(std::string(what) + ": parameter shape mismatch");
}

void check_sample(const NnParams& p, Eigen::Index z_size, Eigen::Index y_size) {
  if (z_size != p.omega1.cols()) {
    throw ShapeError("feature length " + std::to_string(z_size) + " does not match P=" +
                     std::to_string(p.omega1.cols()));
  }
  if (y_size != p.omega0.rows()) {
    throw ShapeError("label length " + std::to_string(y_size) + " does not match L=" +
                     std::to_string(p.omega0.rows()));
  }
}

}  // namespace

NnParams NnParams::zeros(const NnShape& s) {
  const auto L = static_cast<Eigen::Index>(s.L);
  const auto J = static_cast<Eigen::Index>(s.J);
  const auto P = static_cast<Eigen::Index>(s.P);
  return {RowMatrix::Zero(L, J), RowMatrix::Zero(J, P)};
}

NnParams NnParams::from_flat(const NnShape& s, const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != s.dim()) {
    throw ShapeError("NnParams::from_flat: expected " + std::to_string(s.dim()) + " entries, got " +
                     std::to_string(flat.size()));
  }
  NnParams p = zeros(s);
  const auto n0 = static_cast<Eigen::Index>(s.output_size());
  const auto n1 = static_cast<Eigen::Index>(s.hidden_size());
  Eigen::Map<Vector>(p.omega0.data(), n0) = flat.head(n0);
  Eigen::Map<Vector>(p.omega1.data(), n1) = flat.segment(n0, n1);
  return p;
}

NnParams NnParams::random_uniform(const NnShape& s, SeededRng& rng, double scale) {
  NnParams p = zeros(s);
  for (Eigen::Index k = 0; k < p.omega0.size(); ++k) p.omega0.data()[k] = rng.uniform(-scale, scale);
  for (Eigen::Index k = 0; k < p.omega1.size(); ++k) p.omega1.data()[k] = rng.uniform(-scale, scale);
  return p;
}

Vector NnParams::flat() const {
  Vector out(omega0.size() + omega1.size());
  out.head(omega0.size()) = Eigen::Map<const Vector>(omega0.data(), omega0.size());
  out.tail(omega1.size()) = Eigen::Map<const Vector>(omega1.data(), omega1.size());
  return out;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double swish(double z) noexcept { return z * sigmoid(z); }

double swish_prime(double z) noexcept {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

ResidualTerms residual_terms(const RowMatrix& omega0, const Vector& pre, ConstVecRef y) {
  ResidualTerms t;
  const Eigen::Index J = pre.size();
  t.activation.resize(J);
  t.slope.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    t.activation[j] = swish(pre[j]);
    t.slope[j] = swish_prime(pre[j]);
  }
  if (!t.activation.allFinite()) throw NumericError("non-finite hidden activation");
  const Vector logits = omega0 * t.activation;
  const double peak = logits.maxCoeff();
  const Vector shifted = (logits.array() - peak).exp().matrix();
  const double total = shifted.sum();
  const Vector log_q = (logits.array() - peak - std::log(total)).matrix();
  t.residual = shifted / total - y;
  t.log_lik = y.dot(log_q);
  if (!std::isfinite(t.log_lik) || !t.residual.allFinite()) {
    throw NumericError("non-finite softmax output");
  }
  return t;
}

Vector hidden_delta(const RowMatrix& omega0, const ResidualTerms& terms) {
  return terms.slope.cwiseProduct(omega0.transpose() * terms.residual);
}

Vector forward(const NnParams& params, ConstVecRef z) {
  if (z.size() != params.omega1.cols()) throw ShapeError("forward: feature length mismatch");
  Vector act = params.omega1 * z;
  for (Eigen::Index j = 0; j < act.size(); ++j) act[j] = swish(act[j]);
  if (!act.allFinite()) throw NumericError("forward: non-finite hidden activation");
  const Vector logits = params.omega0 * act;
  const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

double loss(const NnParams& params, const RowMatrix& features, const RowMatrix& labels) {
  if (features.rows() != labels.rows()) throw ShapeError("loss: feature/label row mismatch");
  if (features.rows() == 0) throw InvalidArgument("loss: empty batch");
  double total = 0.0;
  for (Eigen::Index n = 0; n < features.rows(); ++n) {
    check_sample(params, features.cols(), labels.cols());
    const Vector pre = params.omega1 * features.row(n).transpose();
    total -= residual_terms(params.omega0, pre, labels.row(n).transpose()).log_lik;
  }
  return total / static_cast<double>(features.rows());
}

SampleStats SampleStats::zeros(const NnShape& s) {
  const NnParams p = NnParams::zeros(s);
  return {p.omega0, p.omega1, 0.0};
}

SampleStats& SampleStats::operator+=(const SampleStats& o) {
  a_bar += o.a_bar;
  b_bar += o.b_bar;
  c_bar += o.c_bar;
  return *this;
}

SampleStats& SampleStats::operator*=(double k) {
  a_bar *= k;
  b_bar *= k;
  c_bar *= k;
  return *this;
}

Vector SampleStats::flat_grad() const {
  Vector out(a_bar.size() + b_bar.size());
  out.head(a_bar.size()) = Eigen::Map<const Vector>(a_bar.data(), a_bar.size());
  out.tail(b_bar.size()) = Eigen::Map<const Vector>(b_bar.data(), b_bar.size());
  return out;
}

SampleStats sample_stats(const NnParams& params, ConstVecRef z, ConstVecRef y) {
  check_sample(params, z.size(), y.size());
  const Vector pre = params.omega1 * z;
  const ResidualTerms t = residual_terms(params.omega0, pre, y);
  SampleStats s;
  s.a_bar = t.residual * t.activation.transpose();
  s.b_bar = hidden_delta(params.omega0, t) * z.transpose();
  s.c_bar = t.log_lik;
  return s;
}

SampleStats batch_sum(const NnParams& params, const RowMatrix& features, const RowMatrix& labels,
                      const IndexSet& rows) {
  SampleStats acc = SampleStats::zeros(params.shape());
  for (std::size_t n : rows) {
    if (n >= static_cast<std::size_t>(features.rows())) {
      throw InvalidArgument("batch_sum: row index " + std::to_string(n) + " out of range");
    }
    const auto i = static_cast<Eigen::Index>(n);
    acc += sample_stats(params, features.row(i).transpose(), labels.row(i).transpose());
  }
  return acc;
}

Vector full_gradient(const NnParams& params, const RowMatrix& features, const RowMatrix& labels,
                     double lambda) {
  IndexSet all(static_cast<std::size_t>(features.rows()));
  for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
  SampleStats s = batch_sum(params, features, labels, all);
  s *= 1.0 / static_cast<double>(features.rows());
  return s.flat_grad() + 2.0 * lambda * params.flat();
}

double accuracy(const NnParams& params, const RowMatrix& features, const RowMatrix& labels) {
  if (features.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index n = 0; n < features.rows(); ++n) {
    const Vector q = forward(params, features.row(n).transpose());
    Eigen::Index predicted = 0;
    Eigen::Index truth = 0;
    q.maxCoeff(&predicted);
    labels.row(n).maxCoeff(&truth);
    hits += predicted == truth ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(features.rows());
}

AppSurrogateState AppSurrogateState::zeros(const NnShape& s) {
  const NnParams p = NnParams::zeros(s);
  return {Vector::Zero(static_cast<Eigen::Index>(s.dim())), p.omega0, p.omega1, 0.0, 0};
}

Vector AppSurrogateState::stacked_linear() const {
  Vector out(A.size() + B.size());
  out.head(A.size()) = Eigen::Map<const Vector>(A.data(), A.size());
  out.tail(B.size()) = Eigen::Map<const Vector>(B.data(), B.size());
  return out;
}

AppSurrogateState update_app_surrogate(const AppSurrogateState& state, double rho, double tau,
                                       const NnParams& w_t, const SampleStats& avg) {
  check_stepsize(rho, "update_app_surrogate");
  if (!(tau > 0.0)) throw InvalidArgument("update_app_surrogate: tau must be positive");
  const NnShape shape = w_t.shape();
  check_shape(NnParams{state.A, state.B}, shape, "update_app_surrogate(state)");
  check_shape(NnParams{avg.a_bar, avg.b_bar}, shape, "update_app_surrogate(batch)");

  // The accumulated statistic is the average log-likelihood; the loss is its negation.
  const double c_bar_total = -avg.c_bar + tau * w_t.squared_norm();
  const double linear_at_w =
      (avg.a_bar.array() * w_t.omega0.array()).sum() + (avg.b_bar.array() * w_t.omega1.array()).sum();

  AppSurrogateState next;
  next.beta = (1.0 - rho) * state.beta + rho * w_t.flat();
  next.A = (1.0 - rho) * state.A + rho * (avg.a_bar - 2.0 * tau * w_t.omega0);
  next.B = (1.0 - rho) * state.B + rho * (avg.b_bar - 2.0 * tau * w_t.omega1);
  next.C = (1.0 - rho) * state.C + rho * (c_bar_total - linear_at_w);
  next.round = state.round + 1;
  return next;
}

NnParams solve_unconstrained_app(const AppSurrogateState& state, double lambda, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("solve_unconstrained_app: tau must be positive");
  if (lambda < 0.0) throw InvalidArgument("solve_unconstrained_app: lambda must be nonnegative");
  const NnShape shape{static_cast<std::size_t>(state.A.rows()), static_cast<std::size_t>(state.A.cols()),
                      static_cast<std::size_t>(state.B.cols())};
  const NnParams beta = NnParams::from_flat(shape, state.beta);
  NnParams out;
  out.omega0 = (state.A + 2.0 * lambda * beta.omega0) / (-2.0 * tau);
  out.omega1 = (state.B + 2.0 * lambda * beta.omega1) / (-2.0 * tau);
  return out;
}

QuadraticSurrogate constraint_surrogate(const AppSurrogateState& state, double U, double tau) {
  return QuadraticSurrogate(state.C - U, state.stacked_linear(), tau);
}

AppConstrainedSolution solve_constrained_app(const AppSurrogateState& state, double U, double tau,
                                             double c) {
  const NnShape shape{static_cast<std::size_t>(state.A.rows()), static_cast<std::size_t>(state.A.cols()),
                      static_cast<std::size_t>(state.B.cols())};
  const PenalizedSolveResult r = solve_penalized_ball(state.stacked_linear(), tau, state.C, U, c);
  return {NnParams::from_flat(shape, r.omega_bar), r.slack[0], r.dual[0]};
}

AppConstrainedSolution solve_constrained_app_barrier(const AppSurrogateState& state, double U,
                                                     double tau, double c, double tol) {
  const NnShape shape{static_cast<std::size_t>(state.A.rows()), static_cast<std::size_t>(state.A.cols()),
                      static_cast<std::size_t>(state.B.cols())};
  const QuadraticSurrogate norm_objective(shape.dim(), 1.0);
  const QuadraticSurrogate cons[] = {constraint_surrogate(state, U, tau)};
  const PenalizedSolveResult r = solve_qcqp_barrier(norm_objective, cons, c, tol);
  return {NnParams::from_flat(shape, r.omega_bar), r.slack[0], r.dual[0]};
}

}  // namespace ssca
