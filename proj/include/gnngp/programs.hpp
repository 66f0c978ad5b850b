#pragma once

#include "gnngp/kernel_ops.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gnngp {

enum class Architecture { gcn, gcnii, gin, sage, ggp, mlp, rbf };

std::string_view to_string(Architecture arch);
/// Throws InputError for unknown names.
Architecture parse_architecture(std::string_view name);

enum class Normalization { symmetric, row, none };
/// GraphSAGE and GGP aggregate with the row-normalized operator, the rest with
/// the symmetric one; MLP and RBF ignore the graph.
Normalization graph_normalization(Architecture arch);

struct Hyperparams {
  double sigma_b = 0.0;
  double sigma_w = 1.0;
  // GCNII
  double alpha = 0.1;
  double lambda = 0.5;
  std::vector<double> beta;  // per layer; empty means log(lambda / l + 1)
  // GraphSAGE
  double sigma_w1 = 0.0;
  double sigma_w2 = 1.0;
};

/// GCNII mixing weight for layer `layer` (1-based).
double gcnii_beta(const Hyperparams& hp, int layer);

/// A named composition of building blocks. Layer 1 consumes the base kernel
/// directly; every later layer starts with the ReLU activation.
class KernelProgram {
 public:
  KernelProgram(Architecture arch, int depth, Hyperparams hp = {}, BaseKernel base = {});

  Architecture architecture() const noexcept { return arch_; }
  int depth() const noexcept { return depth_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  const BaseKernel& base() const noexcept { return base_; }

  /// True when layers reference the layer-0 kernel (GCNII skip connection).
  bool needs_skip_source() const noexcept { return arch_ == Architecture::gcnii; }

  /// Blocks for layer `layer` in [1, depth].
  std::vector<Block> layer_blocks(int layer, const std::shared_ptr<const SparseAdjacency>& a,
                                  const Input& skip_source) const;

 private:
  Architecture arch_;
  int depth_;
  Hyperparams hp_;
  BaseKernel base_;
};

using LayerCallback = std::function<void(int layer, const DenseKernel& k)>;

/// Runs the program on the exact path and returns K^(L). `on_layer` sees every
/// K^(l), l = 1..L. For RBF the base kernel is returned unchanged.
DenseKernel run_exact(const KernelProgram& program, const std::shared_ptr<const SparseAdjacency>& a,
                      const DenseKernel& k0, const LayerCallback& on_layer = {});

/// Runs the program through the low-rank rules of every block.
LowRankFactor lowrank_variant(const KernelProgram& program,
                              const std::shared_ptr<const SparseAdjacency>& a,
                              const LowRankFactor& q0, const LandmarkSet& landmarks);

/// Nystrom factor of the base kernel: chol(C^(0)) over the landmarks.
LowRankFactor input_factor(const BaseKernel& base, const Matrix& features,
                           const LandmarkSet& landmarks);

// Closed-form recursions, written out independently of the block machinery.

/// K^(l+1) = sigma_b^2 11^T + sigma_w^2 A C^(l) A^T, C^(0) = K^(0), C^(l) = g(K^(l)).
std::vector<DenseKernel> gcn_exact(const SparseAdjacency& a, const DenseKernel& k0, double sigma_b,
                                   double sigma_w, int layers);

/// Layerwise Nystrom recursion for GCN. The bias column is omitted when sigma_b == 0.
LowRankFactor gcn_lowrank(const SparseAdjacency& a, const LowRankFactor& q0,
                          const LandmarkSet& landmarks, double sigma_b, double sigma_w, int layers);

DenseKernel gcnii_exact(const SparseAdjacency& a, const DenseKernel& k0, double sigma_w,
                        double alpha, std::span<const double> beta, int layers);

DenseKernel gin_exact(const SparseAdjacency& a, const DenseKernel& k0, double sigma_b,
                      double sigma_w, int layers);

/// Mean-aggregation GraphSAGE; `a_row` should be row-normalized.
DenseKernel sage_exact(const SparseAdjacency& a_row, const DenseKernel& k0, double sigma_w1,
                       double sigma_w2, int layers);

/// A K0 A^T with the polynomial base kernel K0.
DenseKernel ggp_kernel(const SparseAdjacency& a_row, const Matrix& features, double c, double d);

}  // namespace gnngp
