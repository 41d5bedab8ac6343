#pragma once

// Small role setups shared by protocol, baseline and acceptance tests.

#include <memory>
#include <vector>

#include "ssca/data.hpp"
#include "ssca/protocol/roles.hpp"
#include "ssca/protocol/transport.hpp"

namespace fixture {

using namespace ssca;

inline std::vector<std::uint16_t> nodes(std::size_t clients) {
  std::vector<std::uint16_t> out{kServerId};
  for (std::size_t i = 0; i < clients; ++i) out.push_back(static_cast<std::uint16_t>(i));
  return out;
}

inline std::vector<SampleClient> sample_clients(const RawDataset& d, std::size_t I, std::uint64_t seed) {
  std::vector<SampleClient> out;
  const auto blocks = partition_samples(d.size(), I);
  for (std::size_t i = 0; i < I; ++i) {
    out.emplace_back(static_cast<std::uint16_t>(i), gather_rows(d.features, blocks[i]),
                     gather_rows(d.labels, blocks[i]), seed);
  }
  return out;
}

inline std::vector<FeatureClient> feature_clients(const RawDataset& d, std::size_t I, std::size_t J) {
  std::vector<FeatureClient> out;
  const auto blocks = partition_features(d.feature_count(), I);
  for (std::size_t i = 0; i < I; ++i) {
    out.emplace_back(static_cast<std::uint16_t>(i), blocks[i], gather_columns(d.features, blocks[i]), d.labels, J);
  }
  return out;
}

inline NnParams init_model(const RawDataset& d, std::size_t J, std::uint64_t seed, double scale = 0.05) {
  SeededRng r(seed, 0x1417);
  return NnParams::random_uniform({d.classes(), J, d.feature_count()}, r, scale);
}

}  // namespace fixture
