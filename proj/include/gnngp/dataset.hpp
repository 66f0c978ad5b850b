#pragma once

#include "gnngp/graph.hpp"
#include "gnngp/inference.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace gnngp {

struct Dataset {
  std::string name;
  SparseAdjacency graph;  // raw binary adjacency, no self-loops
  Matrix features;        // N x d0
  Targets targets;
  SplitIndices splits;

  Index n_nodes() const noexcept { return features.rows(); }
  /// Throws InputError when counts disagree or splits are invalid.
  void validate() const;
};

/// Reads edges.txt, features.csv or features.bin, targets.txt and splits.json
/// from `dir`. A missing splits.json leaves the splits empty.
Dataset load_dataset(const std::filesystem::path& dir);

/// Comma-separated reals, one node per line.
Matrix read_features_csv(const std::filesystem::path& path);
/// Two little-endian u64 dims (rows, cols), then row-major f64 values.
Matrix read_features_bin(const std::filesystem::path& path);
void write_features_bin(const std::filesystem::path& path, const Matrix& features);

/// One value per line. An optional first line "# classification" or
/// "# regression" fixes the task; otherwise all-integer files are labels.
Targets read_targets(const std::filesystem::path& path);

SplitIndices read_splits(const std::filesystem::path& path);
void write_splits(const std::filesystem::path& path, const SplitIndices& splits);

/// `per_class` training nodes of each class, then `n_val` and `n_test` nodes
/// from the rest, all in one seeded shuffle order.
SplitIndices make_splits_per_class(const Targets& targets, Index per_class, Index n_val,
                                   Index n_test, std::uint64_t seed);
/// Seeded shuffle cut into train/val/test fractions (remainder unused).
SplitIndices make_splits_ratio(Index n_nodes, double train, double val, double test,
                               std::uint64_t seed);

/// Projection of the (optionally centered) features onto the top `target_dim`
/// principal directions. Each direction's largest-magnitude entry is positive.
Matrix pca_reduce(const Matrix& features, Index target_dim, bool center);

/// Subtracts the column means.
Matrix center_columns(const Matrix& features);

struct SyntheticSpec {
  Index n_nodes = 1000;
  double avg_degree = 8.0;
  Index n_features = 32;
  int n_classes = 4;
  /// Probability that a sampled edge stays inside the class.
  double homophily = 0.8;
  /// Class-mean separation relative to unit feature noise.
  double signal = 1.0;
  std::uint64_t seed = 0;
};

/// Stochastic block graph with class-dependent Gaussian features and a
/// 20-per-class / 500 / 1000 split (smaller when N is small).
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace gnngp
