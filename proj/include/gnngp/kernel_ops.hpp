#pragma once

#include "gnngp/common.hpp"
#include "gnngp/graph.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace gnngp {

/// Symmetric N x N covariance matrix.
using DenseKernel = Matrix;

/// N x r factor Q with K ~= Q Q^T.
class LowRankFactor {
 public:
  LowRankFactor() = default;
  explicit LowRankFactor(Matrix q) : q_(std::move(q)) {}

  Index n() const noexcept { return q_.rows(); }
  Index rank() const noexcept { return q_.cols(); }
  const Matrix& q() const noexcept { return q_; }
  DenseKernel gram() const { return q_ * q_.transpose(); }

 private:
  Matrix q_;
};

/// Sorted, distinct node indices indexing the Nystrom columns.
class LandmarkSet {
 public:
  LandmarkSet(std::vector<Index> indices, Index n_nodes);

  static LandmarkSet all(Index n_nodes);
  /// Uniform sample without replacement of `count` indices from `pool`.
  static LandmarkSet sample(std::span<const Index> pool, Index count, std::uint64_t seed,
                            Index n_nodes);

  std::span<const Index> indices() const noexcept { return indices_; }
  Index size() const noexcept { return static_cast<Index>(indices_.size()); }
  Index n_nodes() const noexcept { return n_nodes_; }

 private:
  std::vector<Index> indices_;
  Index n_nodes_ = 0;
};

struct BaseKernel {
  enum class Kind { inner, rbf, poly };
  Kind kind = Kind::inner;
  double gamma = 1.0;  // rbf
  double c = 5.0;      // poly offset
  double d = 3.0;      // poly degree
};

/// X X^T / d0.
DenseKernel base_inner(const Matrix& features);
/// exp(-gamma ||x - x'||^2).
DenseKernel base_rbf(const Matrix& features, double gamma);
/// ||x - x'||^2, symmetric with an exact zero diagonal.
Matrix squared_distances(const Matrix& features);
/// exp(-gamma D) with a unit diagonal.
DenseKernel rbf_from_squared_distances(const Matrix& d2, double gamma);
/// max(x^T x' + c, 0)^d.
DenseKernel base_poly(const Matrix& features, double c, double d);

DenseKernel base_kernel(const BaseKernel& spec, const Matrix& features);
/// Columns K_{:a} of the base kernel at the landmark nodes.
Matrix base_kernel_columns(const BaseKernel& spec, const Matrix& features,
                           const LandmarkSet& landmarks);

/// Correlation map f(cos t) = (sin t + (pi - t) cos t) / pi; rho is clamped to [-1, 1].
double correlation_map(double rho);

/// E_{z ~ N(0, K)}[relu(z) relu(z)^T] in closed form (arc-cosine kernel).
/// Rows whose variance is at most 1e-12 * max diag are treated as the zero
/// function: their off-diagonal entries are zero.
DenseKernel relu_expectation(const DenseKernel& k);

/// Columns C_{:a} of relu_expectation(K) given diag(K) and K_{:a}.
Matrix relu_expectation_columns(const Vector& diag, const Matrix& k_cols,
                                const LandmarkSet& landmarks);

/// Nystrom factor P = C_{:a} C_{aa}^{-1/2}; eigenvalues of C_aa below
/// 1e-10 * lambda_max are raised to that floor.
LowRankFactor chol_factor(const Matrix& c_cols, const Matrix& c_landmark);

struct Block;

struct Bias {
  double sigma_b = 0.0;
};
struct Weight {
  double sigma_w = 1.0;
};
/// X (alpha I + beta W).
struct MixedWeight {
  double alpha = 0.0;
  double beta = 0.0;
  double sigma_w = 1.0;
};
struct GraphConv {
  std::shared_ptr<const SparseAdjacency> a;
};
/// ReLU.
struct Activation {};
/// Replaces the running kernel/factor with a fixed source (the layer-0 kernel
/// for skip connections, or the input kernel itself).
struct Input {
  std::shared_ptr<const DenseKernel> kernel;
  std::shared_ptr<const LowRankFactor> factor;
};
/// K <- left(K) + right(K). The two branches must be statistically
/// independent given their common input (e.g. distinct weight matrices);
/// the rule cannot check this.
struct IndependentAdd {
  std::vector<Block> left;
  std::vector<Block> right;
};

using BlockVariant =
    std::variant<Bias, Weight, MixedWeight, GraphConv, Activation, Input, IndependentAdd>;

/// One building block of a kernel program: a network layer component paired
/// with its kernel rule and its low-rank factor rule.
struct Block : BlockVariant {
  using BlockVariant::BlockVariant;
  const BlockVariant& as_variant() const noexcept { return *this; }
};

DenseKernel apply_block_exact(const DenseKernel& k, const Block& block);
DenseKernel apply_blocks_exact(DenseKernel k, std::span<const Block> blocks);

LowRankFactor apply_block_lowrank(const LowRankFactor& q, const Block& block,
                                  const LandmarkSet& landmarks);
LowRankFactor apply_blocks_lowrank(LowRankFactor q, std::span<const Block> blocks,
                                   const LandmarkSet& landmarks);

}  // namespace gnngp
