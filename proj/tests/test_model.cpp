#include <doctest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "ssca/data.hpp"
#include "ssca/errors.hpp"
#include "ssca/model.hpp"
#include "ssca/numerics.hpp"
#include "ssca/solvers.hpp"

using namespace ssca;

namespace {

RowMatrix one_hot(std::size_t L, std::size_t cls) {
  RowMatrix y = RowMatrix::Zero(1, static_cast<Eigen::Index>(L));
  y(0, static_cast<Eigen::Index>(cls)) = 1.0;
  return y;
}

RowMatrix random_rows(SeededRng& r, Eigen::Index n, Eigen::Index p) {
  RowMatrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = r.uniform01();
  return m;
}

RowMatrix random_labels(SeededRng& r, Eigen::Index n, std::size_t L) {
  RowMatrix y = RowMatrix::Zero(n, static_cast<Eigen::Index>(L));
  for (Eigen::Index i = 0; i < n; ++i) y(i, static_cast<Eigen::Index>(r.below(L))) = 1.0;
  return y;
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1e-12, b.norm());
}

SampleStats random_stats(SeededRng& r, const NnShape& s) {
  SampleStats st = SampleStats::zeros(s);
  for (Eigen::Index k = 0; k < st.a_bar.size(); ++k) st.a_bar.data()[k] = r.uniform(-1, 1);
  for (Eigen::Index k = 0; k < st.b_bar.size(); ++k) st.b_bar.data()[k] = r.uniform(-1, 1);
  st.c_bar = -r.uniform(0, 3);
  return st;
}

}  // namespace

TEST_CASE("swish values") {
  CHECK(swish(0.0) == 0.0);
  CHECK(swish_prime(0.0) == 0.5);
  CHECK(std::abs(swish(20.0) - 20.0) < 1e-7);
  CHECK(std::abs(swish(-800.0)) < 1e-300);
  CHECK(std::isfinite(swish_prime(-800.0)));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("swish derivative matches finite differences") {
  SeededRng r(6, 0);
  for (int k = 0; k < 100; ++k) {
    Vector z(1);
    z[0] = r.uniform(-8, 8);
    const Vector g = finite_diff_grad([](const Vector& x) { return swish(x[0]); }, z, 1e-5);
    CHECK(std::abs(g[0] - swish_prime(z[0])) < 1e-7);
  }
}

TEST_CASE("flat layout round trip") {
  SeededRng r(1, 0);
  const NnShape s{3, 4, 5};
  CHECK(s.dim() == 4 * (5 + 3));
  const NnParams p = NnParams::random_uniform(s, r, 0.05);
  CHECK(p.omega0.cwiseAbs().maxCoeff() < 0.05);
  const Vector f = p.flat();
  CHECK(f[1] == p.omega0(0, 1));
  CHECK(f[4] == p.omega0(1, 0));
  CHECK(f[12] == p.omega1(0, 0));
  CHECK(f[13] == p.omega1(0, 1));
  const NnParams q = NnParams::from_flat(s, f);
  CHECK(q.omega0 == p.omega0);
  CHECK(q.omega1 == p.omega1);
  CHECK_THROWS_AS(NnParams::from_flat(s, Vector::Zero(5)), ShapeError);
}

TEST_CASE("forward output lies on the simplex") {
  SeededRng r(2, 0);
  const NnShape s{5, 6, 7};
  NnParams p = NnParams::zeros(s);
  const RowMatrix z = random_rows(r, 1, 7);
  Vector q = forward(p, z.row(0).transpose());
  for (Eigen::Index l = 0; l < 5; ++l) CHECK(q[l] == doctest::Approx(0.2).epsilon(1e-15));

  p = NnParams::random_uniform(s, r, 1.0);
  q = forward(p, z.row(0).transpose());
  NnParams perm = p;
  perm.omega0.row(0) = p.omega0.row(3);
  perm.omega0.row(3) = p.omega0.row(0);
  const Vector qp = forward(perm, z.row(0).transpose());
  CHECK(qp[0] == q[3]);
  CHECK(qp[3] == q[0]);
  CHECK(qp[1] == q[1]);

  p.omega0 *= 1e3;
  p.omega1 *= 1e3;
  q = forward(p, z.row(0).transpose());
  CHECK(std::abs(q.sum() - 1.0) < 1e-12);
  CHECK((q.array() >= 0.0).all());
  CHECK_THROWS_AS(forward(p, Vector::Zero(3)), ShapeError);
}

TEST_CASE("loss values") {
  SeededRng r(3, 0);
  const NnShape s{10, 4, 6};
  const RowMatrix X = random_rows(r, 8, 6);
  const RowMatrix Y = random_labels(r, 8, 10);
  CHECK(loss(NnParams::zeros(s), X, Y) == doctest::Approx(std::log(10.0)).epsilon(1e-14));

  for (int k = 0; k < 5; ++k) {
    const NnParams p = NnParams::random_uniform(s, r, 1.0);
    double naive = 0.0;
    oracle::Mat w0 = p.omega0, w1 = p.omega1;
    for (Eigen::Index n = 0; n < 8; ++n) {
      naive += oracle::naive_sample_loss(w0, w1, X.row(n).transpose(), Y.row(n).transpose());
    }
    CHECK(std::abs(loss(p, X, Y) - naive / 8.0) < 1e-12);
  }
}

TEST_CASE("loss vanishes as the margin grows") {
  const NnShape s{2, 1, 1};
  RowMatrix X(1, 1);
  X(0, 0) = 1.0;
  const RowMatrix Y = one_hot(2, 0);
  double prev = 1e9;
  for (double m : {1.0, 10.0, 100.0, 1000.0}) {
    NnParams p = NnParams::zeros(s);
    p.omega1(0, 0) = 1.0;
    p.omega0(0, 0) = m;
    p.omega0(1, 0) = -m;
    const double f = loss(p, X, Y);
    CHECK(f <= prev);
    CHECK(f >= 0.0);
    prev = f;
  }
  CHECK(prev < 1e-300);
  CHECK(loss(NnParams::zeros(s), X, Y) > 0.69);
}

TEST_CASE("per-sample statistics are the loss gradient") {
  SeededRng r(4, 0);
  const NnShape s{4, 5, 6};
  for (int k = 0; k < 20; ++k) {
    const NnParams p = NnParams::random_uniform(s, r, 1.0);
    const RowMatrix z = random_rows(r, 1, 6);
    const RowMatrix y = random_labels(r, 1, 4);
    const SampleStats st = sample_stats(p, z.row(0).transpose(), y.row(0).transpose());
    const Vector fd = finite_diff_grad(
        [&](const Vector& w) {
          oracle::Mat w0, w1;
          oracle::unflatten(w, 4, 5, 6, w0, w1);
          return oracle::naive_sample_loss(w0, w1, z.row(0).transpose(), y.row(0).transpose());
        },
        p.flat(), 1e-6);
    CHECK(rel_err(st.flat_grad(), fd) < 1e-5);
    CHECK(st.c_bar <= 0.0);
  }
}

TEST_CASE("zero residual gives zero statistics") {
  // With L = 1 the softmax is identically 1, so Q = y.
  SeededRng r(5, 0);
  const NnParams p = NnParams::random_uniform({1, 3, 4}, r, 1.0);
  const RowMatrix z = random_rows(r, 1, 4);
  const SampleStats st = sample_stats(p, z.row(0).transpose(), Vector::Ones(1));
  CHECK(st.a_bar.isZero(0.0));
  CHECK(st.b_bar.isZero(0.0));
  CHECK(st.c_bar == 0.0);

  const SampleStats u = sample_stats(NnParams::zeros({10, 3, 4}), z.row(0).transpose(),
                                     one_hot(10, 7).row(0).transpose());
  CHECK(u.c_bar == doctest::Approx(-std::log(10.0)).epsilon(1e-14));
}

TEST_CASE("full gradient matches finite differences") {
  SeededRng r(7, 0);
  const NnShape s{3, 4, 5};
  const RowMatrix X = random_rows(r, 12, 5);
  const RowMatrix Y = random_labels(r, 12, 3);
  const double lambda = 0.01;
  for (int k = 0; k < 5; ++k) {
    const NnParams p = NnParams::random_uniform(s, r, 1.0);
    const Vector fd = finite_diff_grad(
        [&](const Vector& w) { return loss(NnParams::from_flat(s, w), X, Y) + lambda * w.squaredNorm(); },
        p.flat(), 1e-6);
    CHECK(rel_err(full_gradient(p, X, Y, lambda), fd) < 1e-5);
  }
}

TEST_CASE("batch sum follows the listed order") {
  SeededRng r(8, 0);
  const NnShape s{3, 4, 5};
  const RowMatrix X = random_rows(r, 10, 5);
  const RowMatrix Y = random_labels(r, 10, 3);
  const NnParams p = NnParams::random_uniform(s, r, 1.0);
  const IndexSet rows{7, 2, 2, 9};
  SampleStats manual = SampleStats::zeros(s);
  for (auto n : rows) manual += sample_stats(p, X.row(static_cast<Eigen::Index>(n)).transpose(),
                                             Y.row(static_cast<Eigen::Index>(n)).transpose());
  const SampleStats got = batch_sum(p, X, Y, rows);
  CHECK(got.a_bar == manual.a_bar);
  CHECK(got.b_bar == manual.b_bar);
  CHECK(got.c_bar == manual.c_bar);
}

TEST_CASE("accuracy counts argmax hits") {
  const NnShape s{2, 1, 1};
  NnParams p = NnParams::zeros(s);
  p.omega1(0, 0) = 1.0;
  p.omega0(0, 0) = 1.0;
  p.omega0(1, 0) = -1.0;
  RowMatrix X(4, 1);
  X << 1.0, 1.0, 1.0, 1.0;
  RowMatrix Y(4, 2);
  Y << 1, 0, 1, 0, 0, 1, 1, 0;
  CHECK(accuracy(p, X, Y) == 0.75);
}

TEST_CASE("surrogate update with full replacement") {
  SeededRng r(9, 0);
  const NnShape s{3, 4, 5};
  const SampleStats avg = random_stats(r, s);
  const AppSurrogateState st = update_app_surrogate(AppSurrogateState::zeros(s), 1.0, 0.2, NnParams::zeros(s), avg);
  CHECK(st.A == avg.a_bar);
  CHECK(st.B == avg.b_bar);
  CHECK(st.beta.isZero(0.0));
  CHECK(st.C == -avg.c_bar);
  CHECK(st.round == 1);
  CHECK_THROWS_AS(update_app_surrogate(st, 0.0, 0.2, NnParams::zeros(s), avg), InvalidArgument);
  CHECK_THROWS_AS(update_app_surrogate(st, 0.5, 0.2, NnParams::zeros({3, 4, 6}), avg), ShapeError);
}

TEST_CASE("loss-constraint surrogate reproduces the batch loss at the expansion point") {
  SeededRng r(10, 0);
  const NnShape s{3, 4, 5};
  const RowMatrix X = random_rows(r, 6, 5);
  const RowMatrix Y = random_labels(r, 6, 3);
  for (int k = 0; k < 10; ++k) {
    const NnParams w = NnParams::random_uniform(s, r, 1.0);
    SampleStats avg = batch_sum(w, X, Y, {0, 1, 2, 3, 4, 5});
    avg *= 1.0 / 6.0;
    const double tau = r.uniform(0.05, 1.0);
    const AppSurrogateState st = update_app_surrogate(AppSurrogateState::zeros(s), 1.0, tau, w, avg);
    const QuadraticSurrogate f = constraint_surrogate(st, 0.0, tau);
    CHECK(std::abs(eval(f, w.flat()) - loss(w, X, Y)) < 1e-9);
    CHECK(rel_err(gradient(f, w.flat()), avg.flat_grad()) < 1e-12);
  }
}

TEST_CASE("two updates equal the unrolled recursion") {
  SeededRng r(11, 0);
  const NnShape s{2, 3, 4};
  const double tau = 0.3, r1 = 0.8, r2 = 0.4;
  const NnParams w1 = NnParams::random_uniform(s, r, 1.0);
  const NnParams w2 = NnParams::random_uniform(s, r, 1.0);
  const SampleStats g1 = random_stats(r, s);
  const SampleStats g2 = random_stats(r, s);
  AppSurrogateState st = AppSurrogateState::zeros(s);
  st = update_app_surrogate(st, r1, tau, w1, g1);
  st = update_app_surrogate(st, r2, tau, w2, g2);

  // Plain scalar recursion over the flat layout.
  const Vector f1 = w1.flat(), f2 = w2.flat();
  const Vector s1 = g1.flat_grad(), s2 = g2.flat_grad();
  Vector lin = Vector::Zero(f1.size()), beta = Vector::Zero(f1.size());
  double C = 0.0;
  lin = (1 - r1) * lin + r1 * (s1 - 2 * tau * f1);
  beta = (1 - r1) * beta + r1 * f1;
  C = (1 - r1) * C + r1 * (-g1.c_bar + tau * f1.dot(f1) - s1.dot(f1));
  lin = (1 - r2) * lin + r2 * (s2 - 2 * tau * f2);
  beta = (1 - r2) * beta + r2 * f2;
  C = (1 - r2) * C + r2 * (-g2.c_bar + tau * f2.dot(f2) - s2.dot(f2));

  CHECK((st.stacked_linear() - lin).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((st.beta - beta).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(st.C - C) < 1e-13);
}

TEST_CASE("unconstrained app solve") {
  SeededRng r(12, 0);
  const NnShape s{3, 4, 5};
  CHECK(solve_unconstrained_app(AppSurrogateState::zeros(s), 0.1, 0.2).flat().isZero(0.0));

  AppSurrogateState st = AppSurrogateState::zeros(s);
  st = update_app_surrogate(st, 0.7, 0.2, NnParams::random_uniform(s, r, 1.0), random_stats(r, s));
  st = update_app_surrogate(st, 0.5, 0.2, NnParams::random_uniform(s, r, 1.0), random_stats(r, s));
  const NnParams plain = solve_unconstrained_app(st, 0.0, 0.2);
  CHECK(plain.omega0 == st.A / -0.4);
  CHECK(plain.omega1 == st.B / -0.4);

  const double lambda = 0.05;
  const Vector generic =
      solve_unconstrained(QuadraticSurrogate(0.0, st.stacked_linear() + 2 * lambda * st.beta, 0.2));
  CHECK((solve_unconstrained_app(st, lambda, 0.2).flat() - generic).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("full replacement then solve is a gradient step") {
  SeededRng r(13, 0);
  const NnShape s{3, 4, 5};
  const double tau = 0.25;
  const NnParams w = NnParams::random_uniform(s, r, 1.0);
  const SampleStats avg = random_stats(r, s);
  const AppSurrogateState st = update_app_surrogate(AppSurrogateState::zeros(s), 1.0, tau, w, avg);
  const Vector expect = w.flat() - avg.flat_grad() / (2 * tau);
  CHECK((solve_unconstrained_app(st, 0.0, tau).flat() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constrained app solve") {
  const NnShape s{2, 3, 4};
  AppSurrogateState zero = AppSurrogateState::zeros(s);
  zero.C = 0.1;
  const auto sol = solve_constrained_app(zero, 0.2, 0.2, 1e5);
  CHECK(sol.omega_bar.flat().isZero(0.0));
  CHECK(sol.slack == 0.0);

  SeededRng r(14, 0);
  for (int k = 0; k < 30; ++k) {
    AppSurrogateState st = AppSurrogateState::zeros(s);
    st = update_app_surrogate(st, 1.0, 0.2, NnParams::random_uniform(s, r, 0.5), random_stats(r, s));
    const double U = st.C - r.uniform(-0.5, 1.5);
    const double c = r.uniform(1.0, 100.0);
    const auto cf = solve_constrained_app(st, U, 0.2, c);
    const auto bar = solve_constrained_app_barrier(st, U, 0.2, c, 1e-10);
    const auto bis = dual_bisection_oracle(st.stacked_linear(), 0.2, st.C, U, c);
    CHECK((cf.omega_bar.flat() - bar.omega_bar.flat()).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((cf.omega_bar.flat() - bis.omega_bar).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(cf.slack - bar.slack) < 1e-5);
  }
}
