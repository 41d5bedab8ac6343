#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ssca/errors.hpp"
#include "ssca/numerics.hpp"

using namespace ssca;

TEST_CASE("rng streams are reproducible and distinct") {
  SeededRng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differs_stream = false, differs_seed = false;
  for (int k = 0; k < 64; ++k) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_stream |= x != c.next_u64();
    differs_seed |= x != d.next_u64();
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("uniform draws stay in range") {
  SeededRng r(1, 0);
  for (int k = 0; k < 10000; ++k) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = r.uniform(-0.05, 0.05);
    REQUIRE(v >= -0.05);
    REQUIRE(v < 0.05);
    REQUIRE(r.below(7) < 7);
  }
  CHECK_THROWS_AS(r.below(0), InvalidArgument);
}

TEST_CASE("normal draws have unit moments") {
  SeededRng r(9, 1);
  double m = 0.0, s = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double z = r.normal();
    m += z;
    s += z * z;
  }
  m /= n;
  s = s / n - m * m;
  CHECK(std::abs(m) < 0.01);
  CHECK(std::abs(s - 1.0) < 0.02);
}

TEST_CASE("split children are independent of the parent position") {
  SeededRng p(5, 2);
  SeededRng c1 = p.split(7);
  p.next_u64();
  SeededRng c2 = p.split(7);
  CHECK(c1.next_u64() == c2.next_u64());
}

TEST_CASE("minibatch of the whole pool is a permutation") {
  SeededRng r(3, 0);
  IndexSet b = sample_minibatch(r, 5, 5);
  std::sort(b.begin(), b.end());
  CHECK(b == IndexSet{0, 1, 2, 3, 4});
}

TEST_CASE("minibatch is deterministic per fresh rng and distinct") {
  SeededRng r1(11, 0), r2(11, 0);
  const IndexSet a = sample_minibatch(r1, 10, 3);
  CHECK(a == sample_minibatch(r2, 10, 3));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 3);
  for (auto i : a) CHECK(i < 10);

  SeededRng big(2, 0);
  const IndexSet wide = sample_minibatch(big, 1000000, 500);
  CHECK(std::set<std::size_t>(wide.begin(), wide.end()).size() == 500);
}

TEST_CASE("minibatch precondition violations") {
  SeededRng r(1, 1);
  CHECK_THROWS_AS(sample_minibatch(r, 2, 3), InvalidArgument);
  CHECK_THROWS_AS(sample_minibatch(r, 2, 0), InvalidArgument);
}

TEST_CASE("single-draw sampling is fair") {
  SeededRng r(2024, 0);
  const int draws = 100000;
  int counts[10] = {};
  for (int k = 0; k < draws; ++k) ++counts[sample_minibatch(r, 10, 1)[0]];
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - draws * 0.1) <= 3.0 * sigma);
}

TEST_CASE("finite differences of a quadratic") {
  Vector w(2);
  w << 1.0, -2.0;
  const Vector g = finite_diff_grad([](const Vector& x) { return x.squaredNorm(); }, w, 1e-5);
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] + 4.0) < 1e-8);
  const Vector z = finite_diff_grad([](const Vector&) { return 3.0; }, w, 1e-5);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("finite differences report the failing coordinate") {
  Vector w = Vector::Zero(3);
  auto f = [](const Vector& x) { return x[2] > 0 ? std::numeric_limits<double>::infinity() : 0.0; };
  try {
    finite_diff_grad(f, w, 1e-3);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("coordinate 2") != std::string::npos);
  }
  CHECK_THROWS_AS(finite_diff_grad(f, w, 0.0), InvalidArgument);
}
