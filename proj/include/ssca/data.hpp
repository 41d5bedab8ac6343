#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssca/model.hpp"
#include "ssca/numerics.hpp"

namespace ssca {

/// N samples: features N x P in [0, 1], labels N x L one-hot.
struct RawDataset {
  RowMatrix features;
  RowMatrix labels;
  std::string provenance;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t feature_count() const noexcept { return static_cast<std::size_t>(features.cols()); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(labels.cols()); }
};

struct DatasetSplit {
  RawDataset train;
  RawDataset test;
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled by 1/255; L is the largest label + 1.
RawDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Gaussian clusters: class k has mean separation * e_(k mod P), unit variance,
/// squashed through a logistic into [0, 1]. Classes are balanced and the rows
/// shuffled deterministically.
RawDataset synth_dataset(std::uint64_t seed, std::size_t N, std::size_t P, std::size_t L,
                         double separation);

/// N training rows plus a held-out split of max(1, N/4) rows (20% of the total).
DatasetSplit synth_split(std::uint64_t seed, std::size_t N, std::size_t P, std::size_t L,
                         double separation);

/// Contiguous blocks; balanced by default with the remainder on the lowest ids.
std::vector<IndexSet> partition_samples(std::size_t N, std::size_t I,
                                        const std::optional<std::vector<std::size_t>>& sizes = {});

/// Contiguous feature blocks, remainder on the lowest client ids.
std::vector<IndexSet> partition_features(std::size_t P, std::size_t I);

/// Columns of m listed in cols, in order.
RowMatrix gather_columns(const RowMatrix& m, const IndexSet& cols);

/// Rows of m listed in rows, in order.
RowMatrix gather_rows(const RowMatrix& m, const IndexSet& rows);

}  // namespace ssca
