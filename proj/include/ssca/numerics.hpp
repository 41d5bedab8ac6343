#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ssca {

using Vector = Eigen::VectorXd;
using IndexSet = std::vector<std::size_t>;

/// Counter-based splittable generator (SplitMix64 finalizer over a keyed
/// counter). A (master_seed, stream_id) pair fully determines the sequence,
/// so per-client streams do not depend on scheduling order.
class SeededRng {
 public:
  SeededRng(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Unbiased integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() noexcept;

  /// Derives an independent child stream, e.g. one per repetition.
  SeededRng split(std::uint64_t child_id) const noexcept;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// `batch` distinct indices from [0, pool_size), uniform without replacement.
IndexSet sample_minibatch(SeededRng& rng, std::size_t pool_size, std::size_t batch);

using ScalarField = std::function<double(const Vector&)>;

/// Central differences (f(w + h e_k) - f(w - h e_k)) / 2h per coordinate.
Vector finite_diff_grad(const ScalarField& f, const Vector& w, double h);

void require_same_size(const Vector& a, const Vector& b, const char* what);
bool all_finite(const Vector& v) noexcept;

}  // namespace ssca
