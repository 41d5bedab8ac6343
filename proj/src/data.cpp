#include "ssca/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

#include "ssca/errors.hpp"

namespace ssca {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open file", path, 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > buf.size()) throw IngestionError("truncated header", path, offset);
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

RawDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = slurp(images_path);
  const auto lab = slurp(labels_path);

  if (read_be32(img, 0, images_path) != kImageMagic) {
    throw IngestionError("bad image magic", images_path, 0);
  }
  const std::size_t count = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  if (read_be32(lab, 0, labels_path) != kLabelMagic) {
    throw IngestionError("bad label magic", labels_path, 0);
  }
  const std::size_t label_count = read_be32(lab, 4, labels_path);
  if (label_count != count) {
    throw IngestionError("image count " + std::to_string(count) + " does not match label count " +
                             std::to_string(label_count),
                         labels_path, 4);
  }
  const std::size_t P = rows * cols;
  if (count == 0 || P == 0) throw IngestionError("empty dataset", images_path, 4);
  if (img.size() < 16 + count * P) throw IngestionError("truncated pixel data", images_path, img.size());
  if (lab.size() < 8 + count) throw IngestionError("truncated label data", labels_path, lab.size());

  const auto first_label = lab.begin() + 8;
  const std::size_t L = std::size_t{*std::max_element(first_label, first_label + static_cast<long>(count))} + 1;

  RawDataset d;
  const auto n = static_cast<Eigen::Index>(count);
  d.features.resize(n, static_cast<Eigen::Index>(P));
  d.labels = RowMatrix::Zero(n, static_cast<Eigen::Index>(L));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t base = 16 + static_cast<std::size_t>(i) * P;
    for (std::size_t p = 0; p < P; ++p) {
      d.features(i, static_cast<Eigen::Index>(p)) = img[base + p] / 255.0;
    }
    d.labels(i, lab[8 + static_cast<std::size_t>(i)]) = 1.0;
  }
  d.provenance = "idx:" + images_path;
  return d;
}

RawDataset synth_dataset(std::uint64_t seed, std::size_t N, std::size_t P, std::size_t L,
                         double separation) {
  if (N == 0 || P == 0 || L == 0) throw InvalidArgument("synth_dataset: N, P and L must be positive");
  SeededRng rng(seed, 0x5eed);

  IndexSet order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = N; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);

  RawDataset d;
  d.features.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(P));
  d.labels = RowMatrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(L));
  for (std::size_t n = 0; n < N; ++n) {
    const auto row = static_cast<Eigen::Index>(order[n]);
    const std::size_t cls = n % L;
    for (std::size_t p = 0; p < P; ++p) {
      const double mean = p == cls % P ? separation : 0.0;
      d.features(row, static_cast<Eigen::Index>(p)) = sigmoid(mean + rng.normal());
    }
    d.labels(row, static_cast<Eigen::Index>(cls)) = 1.0;
  }
  d.provenance = "synthetic:N=" + std::to_string(N) + ",P=" + std::to_string(P) + ",L=" +
                 std::to_string(L) + ",seed=" + std::to_string(seed);
  return d;
}

DatasetSplit synth_split(std::uint64_t seed, std::size_t N, std::size_t P, std::size_t L,
                         double separation) {
  const std::size_t held_out = std::max<std::size_t>(1, N / 4);
  RawDataset all = synth_dataset(seed, N + held_out, P, L, separation);
  const auto n = static_cast<Eigen::Index>(N);
  const auto h = static_cast<Eigen::Index>(held_out);
  DatasetSplit s;
  s.train.features = all.features.topRows(n);
  s.train.labels = all.labels.topRows(n);
  s.train.provenance = all.provenance + ",train";
  s.test.features = all.features.bottomRows(h);
  s.test.labels = all.labels.bottomRows(h);
  s.test.provenance = all.provenance + ",test";
  return s;
}

std::vector<IndexSet> partition_samples(std::size_t N, std::size_t I,
                                        const std::optional<std::vector<std::size_t>>& sizes) {
  if (I == 0) throw InvalidArgument("partition_samples: need at least one client");
  if (I > N) throw InvalidArgument("partition_samples: more clients than samples");
  std::vector<std::size_t> len(I, N / I);
  if (sizes) {
    if (sizes->size() != I) throw InvalidArgument("partition_samples: expected one size per client");
    if (std::accumulate(sizes->begin(), sizes->end(), std::size_t{0}) != N) {
      throw InvalidArgument("partition_samples: explicit sizes must sum to N");
    }
    len = *sizes;
  } else {
    for (std::size_t i = 0; i < N % I; ++i) ++len[i];
  }
  std::vector<IndexSet> out(I);
  std::size_t next = 0;
  for (std::size_t i = 0; i < I; ++i) {
    out[i].resize(len[i]);
    std::iota(out[i].begin(), out[i].end(), next);
    next += len[i];
  }
  return out;
}

std::vector<IndexSet> partition_features(std::size_t P, std::size_t I) {
  if (I == 0) throw InvalidArgument("partition_features: need at least one client");
  if (I > P) throw InvalidArgument("partition_features: more clients than features");
  return partition_samples(P, I);
}

RowMatrix gather_columns(const RowMatrix& m, const IndexSet& cols) {
  RowMatrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] >= static_cast<std::size_t>(m.cols())) throw ShapeError("gather_columns: index out of range");
    out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(cols[k]));
  }
  return out;
}

RowMatrix gather_rows(const RowMatrix& m, const IndexSet& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= static_cast<std::size_t>(m.rows())) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

}  // namespace ssca
