// SPDX-License-Identifier: Apache-2.0
#pragma once

// Modular-addition samples: (i, j) -> (i + j) mod P with the two operands
// one-hot encoded into a single row of width 2P.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "groklab/error.hpp"
#include "groklab/network.hpp"
#include "groklab/random.hpp"

namespace groklab {

/// Restricts which (i, j) pairs enter the dataset.
struct SymmetryFilter {
  bool require_j_ge_i = false;
  bool require_i_gt_j = false;
  /// Plain (non-modular) values of j - i to drop.
  std::set<int> excluded_differences;

  void validate() const {
    if (require_j_ge_i && require_i_gt_j)
      throw ArgumentError("symmetry filter: require_j_ge_i and require_i_gt_j are mutually exclusive");
  }

  bool accepts(int i, int j) const {
    if (require_j_ge_i && j < i) return false;
    if (require_i_gt_j && !(i > j)) return false;
    return !excluded_differences.contains(j - i);
  }

  bool operator==(const SymmetryFilter&) const = default;
};

struct DatasetSpec {
  int modulus = 2;
  double train_frac = 0.5;
  SymmetryFilter filter;
  std::uint64_t seed = 0;

  void validate() const {
    if (modulus < 2) throw ArgumentError("dataset: modulus must be >= 2, got " + std::to_string(modulus));
    if (!(train_frac > 0.0 && train_frac <= 1.0))
      throw ArgumentError("dataset: train_frac must lie in (0, 1]");
    filter.validate();
  }
};

struct Sample {
  int i;
  int j;
  int label;

  bool operator==(const Sample&) const = default;
};

struct EncodedDataset {
  int modulus = 0;
  Eigen::MatrixXd inputs;  // rows = samples, cols = 2P
  std::vector<int> labels;
  std::vector<std::pair<int, int>> pair_index;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  OneHotPairs pairs() const { return {modulus, pair_index}; }

  /// Same rows as `inputs` in compressed form; the one-hot rows are 2-sparse.
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_inputs() const {
    Eigen::SparseMatrix<double, Eigen::RowMajor> out(static_cast<Eigen::Index>(size()), 2 * modulus);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * size());
    for (std::size_t r = 0; r < size(); ++r) {
      const auto [i, j] = pair_index[r];
      entries.emplace_back(static_cast<int>(r), i, 1.0);
      entries.emplace_back(static_cast<int>(r), modulus + j, 1.0);
    }
    out.setFromTriplets(entries.begin(), entries.end());
    return out;
  }
};

/// All (i, j) in [0, P)^2 passing the filter, row-major by i then j.
inline std::vector<Sample> generate_pairs(const DatasetSpec& spec) {
  spec.validate();
  const int p = spec.modulus;
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(p) * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (spec.filter.accepts(i, j)) out.push_back({i, j, (i + j) % p});
  if (out.empty()) throw DegenerateError("degenerate dataset: filter removed every pair");
  return out;
}

inline Eigen::RowVectorXd encode_one_hot(int i, int j, int p) {
  if (p < 1 || i < 0 || j < 0 || i >= p || j >= p)
    throw ArgumentError("encode_one_hot: operands must lie in [0, " + std::to_string(p) + ")");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * p);
  row(i) = 1.0;
  row(p + j) = 1.0;
  return row;
}

inline EncodedDataset encode(std::span<const Sample> samples, int p) {
  EncodedDataset out;
  out.modulus = p;
  out.inputs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples.size()), 2 * p);
  out.labels.reserve(samples.size());
  out.pair_index.reserve(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& s = samples[r];
    out.inputs.row(static_cast<Eigen::Index>(r)) = encode_one_hot(s.i, s.j, p);
    out.labels.push_back(s.label);
    out.pair_index.emplace_back(s.i, s.j);
  }
  return out;
}

struct SplitDataset {
  EncodedDataset train;
  EncodedDataset test;
};

/// Seeded shuffle, then the first floor(train_frac * n) samples train.
/// Each half keeps the generation order of its members.
inline SplitDataset split(std::span<const Sample> samples, int p, double train_frac, std::uint64_t seed,
                          bool require_both = false) {
  if (samples.empty()) throw DegenerateError("degenerate split: no samples");
  if (!(train_frac > 0.0 && train_frac <= 1.0)) throw ArgumentError("split: train_frac must lie in (0, 1]");

  const std::size_t n = samples.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  if (require_both && (n_train == 0 || n_train == n))
    throw DegenerateError("degenerate split: " + std::to_string(n_train) + " of " + std::to_string(n) +
                          " samples in train");

  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<bool> in_train(n, false);
  for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = true;

  std::vector<Sample> train, test;
  train.reserve(n_train);
  test.reserve(n - n_train);
  for (std::size_t k = 0; k < n; ++k) (in_train[k] ? train : test).push_back(samples[k]);
  return {encode(train, p), encode(test, p)};
}

inline SplitDataset make_dataset(const DatasetSpec& spec, bool require_both = false) {
  const auto pairs = generate_pairs(spec);
  return split(pairs, spec.modulus, spec.train_frac, spec.seed, require_both);
}

}  // namespace groklab
