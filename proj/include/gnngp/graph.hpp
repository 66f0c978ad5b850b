#pragma once

#include "gnngp/common.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace gnngp {

struct Edge {
  Index source = 0;
  Index target = 0;
};

/// Square sparse matrix in compressed sparse row form with sorted, unique
/// column indices per row. Immutable after construction.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;

  /// Validates the CSR invariants and throws InputError on violation.
  SparseAdjacency(Index n_nodes, std::vector<Index> row_offsets, std::vector<Index> col_indices,
                  std::vector<double> values);

  Index n_nodes() const noexcept { return n_nodes_; }
  /// Number of stored nonzeros (directed count).
  Index n_edges() const noexcept { return static_cast<Index>(col_indices_.size()); }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const Index> row_columns(Index row) const;
  std::span<const double> row_values(Index row) const;

  /// Entry (row, col); zero when not stored.
  double coeff(Index row, Index col) const;

  Matrix to_dense() const;

  /// A * X.
  Matrix multiply(const Eigen::Ref<const Matrix>& x) const;
  Vector multiply_vector(const Eigen::Ref<const Vector>& x) const;

  /// A * K * A^T for a symmetric K; the result is symmetrized.
  Matrix sandwich(const Eigen::Ref<const Matrix>& k) const;

  Vector row_sums() const;

  bool is_symmetric(double tol = 0.0) const;
  bool is_nonnegative() const;
  bool has_self_loops() const;
  bool has_positive_diagonal() const;
  /// Strong connectivity of the stored pattern (irreducibility for a symmetric matrix).
  bool is_connected() const;

 private:
  Index n_nodes_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Binary symmetric adjacency. Each undirected edge is stored in both
/// directions, duplicates are merged. Self-loops in the input are dropped; the
/// diagonal is filled iff `add_self_loops`.
SparseAdjacency build_adjacency(std::span<const Edge> edges, Index n_nodes, bool add_self_loops);

/// (I + D)^{-1/2} (I + A) (I + D)^{-1/2} for a raw adjacency without self-loops.
SparseAdjacency normalize_sym(const SparseAdjacency& raw);

/// (I + D)^{-1} (I + A) for a raw adjacency without self-loops.
SparseAdjacency normalize_row(const SparseAdjacency& raw);

struct SpectralInfo {
  double lambda = 0.0;
  Vector v;  // unit 2-norm, elementwise nonnegative
  Index iterations = 0;
  double residual = 0.0;
};

/// Dominant (Perron-Frobenius) eigenpair by power iteration from the all-ones
/// vector. Stops once ||Av - lambda v|| <= tol * |lambda|.
SpectralInfo spectral_radius(const SparseAdjacency& a, double tol = 1e-10, Index max_iter = 10000);

/// Reads a whitespace-separated edge list; '#' starts a comment line.
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

}  // namespace gnngp
