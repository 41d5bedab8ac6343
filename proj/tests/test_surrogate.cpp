#include <doctest.h>

#include <cmath>

#include "ssca/errors.hpp"
#include "ssca/numerics.hpp"
#include "ssca/schedules.hpp"
#include "ssca/solvers.hpp"
#include "ssca/surrogate.hpp"

using namespace ssca;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

Vector random_vec(SeededRng& r, Eigen::Index d, double scale = 1.0) {
  Vector v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = r.uniform(-scale, scale);
  return v;
}

}  // namespace

TEST_CASE("bank starts at zero") {
  SurrogateBank bank(3, 2, 0.2);
  CHECK(bank.objective().linear.isZero(0.0));
  CHECK(bank.constraint(1).constant == 0.0);
  CHECK(bank.constraint(2).linear.isZero(0.0));
  CHECK(bank.round() == 0);
  CHECK_THROWS_AS(bank.constraint(0), InvalidArgument);
  CHECK_THROWS_AS(bank.constraint(3), InvalidArgument);
}

TEST_CASE("objective accumulation") {
  SurrogateBank bank(2, 0, 0.2);
  bank.accumulate_objective(0.9, Vector::Zero(2), vec({1, 1}));
  CHECK(bank.objective().linear[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(bank.objective().linear[1] == doctest::Approx(0.9).epsilon(1e-15));

  const Vector w = vec({0.5, -1.0});
  const Vector g = vec({3.0, 4.0});
  bank.accumulate_objective(1.0, w, g);
  CHECK((bank.objective().linear - (g - 0.4 * w)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(bank.accumulate_objective(0.0, w, g), InvalidArgument);
  CHECK_THROWS_AS(bank.accumulate_objective(1.1, w, g), InvalidArgument);
  CHECK_THROWS_AS(bank.accumulate_objective(0.5, Vector::Zero(3), g), ShapeError);
}

TEST_CASE("constant input converges to its fixed point") {
  SurrogateBank bank(2, 0, 0.2);
  const Vector G = vec({0.7, -1.3});
  const auto rho = StepsizeSchedule::power(0.9, 0.1);
  for (unsigned t = 1; t <= 10000; ++t) {
    bank.accumulate_objective(rho.value(t), Vector::Zero(2), G);
    bank.advance_round();
  }
  CHECK((bank.objective().linear - G).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(bank.round() == 10000);
}

TEST_CASE("constraint accumulation") {
  SurrogateBank bank(2, 1, 0.3);
  bank.accumulate_constraint(1, 1.0, Vector::Zero(2), 2.5, vec({1, -1}));
  CHECK(bank.constraint(1).constant == 2.5);
  CHECK(bank.constraint(1).linear == vec({1, -1}));
  CHECK_THROWS_AS(bank.accumulate_constraint(2, 1.0, Vector::Zero(2), 0.0, Vector::Zero(2)), InvalidArgument);

  SurrogateBank zero(2, 1, 0.3);
  for (int k = 0; k < 10; ++k) zero.accumulate_constraint(1, 0.5, Vector::Zero(2), 0.0, Vector::Zero(2));
  CHECK(zero.constraint(1).constant == 0.0);
  CHECK(zero.constraint(1).linear.isZero(0.0));
}

TEST_CASE("surrogate touches the sample function at the expansion point") {
  SeededRng r(17, 0);
  for (int k = 0; k < 20; ++k) {
    SurrogateBank bank(5, 1, 0.25);
    const Vector w = random_vec(r, 5);
    const Vector g = random_vec(r, 5);
    const double value = r.uniform(-2, 2);
    bank.accumulate_constraint(1, 1.0, w, value, g);
    CHECK(std::abs(eval(bank.constraint(1), w) - value) < 1e-12);
    CHECK((gradient(bank.constraint(1), w) - g).cwiseAbs().maxCoeff() < 1e-10);

    bank.accumulate_objective(1.0, w, g);
    CHECK((gradient(bank.objective(), w) - g).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("eval examples") {
  QuadraticSurrogate zero(3, 0.2);
  const Vector w = vec({1.0, 2.0, -1.0});
  CHECK(eval(zero, w) == doctest::Approx(0.2 * 6.0));
  QuadraticSurrogate s(0.0, vec({1, -2}), 0.5);
  CHECK(eval(s, vec({1, 1})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(eval(s, w), ShapeError);
}

TEST_CASE("closed-form minimizer beats random probes") {
  SeededRng r(3, 3);
  for (int k = 0; k < 20; ++k) {
    QuadraticSurrogate s(r.uniform(-1, 1), random_vec(r, 4, 3.0), r.uniform(0.05, 2.0));
    const Vector best = solve_unconstrained(s);
    const double f = eval(s, best);
    for (int p = 0; p < 100; ++p) CHECK(f <= eval(s, best + random_vec(r, 4, 2.0)));
  }
}

TEST_CASE("updates are convex combinations") {
  SeededRng r(8, 1);
  SurrogateBank bank(6, 0, 0.1);
  double running = 0.0;
  for (unsigned t = 1; t <= 500; ++t) {
    const Vector w = random_vec(r, 6);
    const Vector g = random_vec(r, 6, 5.0);
    running = std::max(running, (g - 0.2 * w).cwiseAbs().maxCoeff());
    bank.accumulate_objective(r.uniform(0.01, 1.0), w, g);
    CHECK(bank.objective().linear.cwiseAbs().maxCoeff() <= running + 1e-12);
  }
}

TEST_CASE("strong convexity inequality") {
  SeededRng r(44, 0);
  for (int k = 0; k < 100; ++k) {
    QuadraticSurrogate s(r.uniform(-1, 1), random_vec(r, 3), r.uniform(0.05, 1.0));
    const Vector a = random_vec(r, 3, 2.0);
    const Vector b = random_vec(r, 3, 2.0);
    const double rhs = eval(s, a) + gradient(s, a).dot(b - a) + s.curvature * (b - a).squaredNorm();
    CHECK(std::abs(eval(s, b) - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}
