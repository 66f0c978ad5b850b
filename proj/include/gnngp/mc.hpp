#pragma once

#include "gnngp/programs.hpp"

#include <cstdint>
#include <memory>

namespace gnngp {

enum class McSampler {
  /// Given the layer input H, H W has iid columns N(0, s^2/d_in H H^T); draw
  /// them through a factor of that N x N Gram matrix.
  conditional,
  /// Draw the d_in x d_out weight matrix itself.
  explicit_weights,
};

struct McConfig {
  Architecture architecture = Architecture::gcn;
  int layers = 2;
  int width = 1024;
  int n_samples = 100;
  std::uint64_t seed = 0;
  Hyperparams hp;
  McSampler sampler = McSampler::conditional;

  void validate() const;
};

/// Output Z^(L) (N x width) of one randomly initialised finite network. Sample
/// `index` draws from its own streams, one per layer.
Matrix sample_outputs(const McConfig& cfg, const SparseAdjacency& a, const Matrix& x0,
                      std::uint64_t index);

/// Mean of z(x) z(x')^T over all samples and all output coordinates.
DenseKernel sample_covariance(const McConfig& cfg, const SparseAdjacency& a, const Matrix& x0);

/// Infinite-width kernel of the same network with the inner-product base.
DenseKernel analytic_covariance(const McConfig& cfg, const std::shared_ptr<const SparseAdjacency>& a,
                                const Matrix& x0);

/// ||empirical - analytic||_F / ||analytic||_F.
double compare_covariance(const DenseKernel& empirical, const DenseKernel& analytic);

}  // namespace gnngp
