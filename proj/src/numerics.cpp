#include "ssca/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "ssca/errors.hpp"

namespace ssca {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

SeededRng::SeededRng(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      key_(mix64(master_seed ^ mix64(stream_id * kGolden + kStreamSalt))) {}

std::uint64_t SeededRng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double SeededRng::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("SeededRng::below: bound must be positive");
  // Reject the tail so that every residue is equally likely.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

double SeededRng::normal() noexcept {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::split(std::uint64_t child_id) const noexcept {
  return SeededRng(mix64(key_ ^ mix64(child_id + kStreamSalt)), stream_id_);
}

IndexSet sample_minibatch(SeededRng& rng, std::size_t pool_size, std::size_t batch) {
  if (batch == 0 || batch > pool_size) {
    throw InvalidArgument("sample_minibatch: need 1 <= batch <= pool_size (batch=" +
                          std::to_string(batch) + ", pool=" + std::to_string(pool_size) + ")");
  }
  // Sparse partial Fisher-Yates: only displaced slots are stored.
  std::unordered_map<std::size_t, std::size_t> displaced;
  displaced.reserve(batch * 2);
  auto slot = [&](std::size_t k) {
    auto it = displaced.find(k);
    return it == displaced.end() ? k : it->second;
  };
  IndexSet out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool_size - i));
    const std::size_t vi = slot(i);
    const std::size_t vj = slot(j);
    out.push_back(vj);
    displaced[j] = vi;
  }
  return out;
}

Vector finite_diff_grad(const ScalarField& f, const Vector& w, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_grad: step must be positive");
  Vector g(w.size());
  Vector probe = w;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + h;
    const double up = f(probe);
    probe[k] = w[k] - h;
    const double down = f(probe);
    probe[k] = w[k];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite value at coordinate " +
                         std::to_string(k));
    }
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": size " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

bool all_finite(const Vector& v) noexcept { return v.allFinite(); }

}  // namespace ssca
