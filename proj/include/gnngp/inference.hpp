#pragma once

#include "gnngp/kernel_ops.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gnngp {

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;

  /// Throws InputError unless the three sets are in range and pairwise disjoint.
  void validate(Index n_nodes) const;
};

enum class Task { classification, regression };

/// Node targets: integer labels for classification, reals for regression.
struct Targets {
  Task task = Task::regression;
  std::vector<int> labels;
  Vector values;
  int n_classes = 0;

  static Targets classification(std::vector<int> labels);
  static Targets regression(Vector values);

  Index size() const;
  /// Plain {0,1} one-hot rows (classification) or a single value column.
  Matrix encode(std::span<const Index> rows) const;
  /// Micro-F1 of the argmax prediction, or R^2.
  double score(const Matrix& mean, std::span<const Index> rows) const;
};

struct PosteriorResult {
  Matrix mean;                            // N_* x C
  std::optional<Vector> variance_diag;    // N_*
  double nugget = 0.0;
  std::vector<std::string> channel_names;
};

/// K_{*b} (K_{bb} + eps I)^{-1} y_b by Cholesky. One retry with 1e-10 trace/N
/// jitter; NumericalError carries a condition estimate if that fails too.
PosteriorResult posterior_mean_exact(const DenseKernel& k, std::span<const Index> train,
                                     std::span<const Index> predict, const Matrix& y_train,
                                     double eps);

/// diag(K_{**} - K_{*b} (K_{bb} + eps I)^{-1} K_{b*}), unclamped.
Vector posterior_variance_exact(const DenseKernel& k, std::span<const Index> train,
                                std::span<const Index> predict, double eps);

/// Q_* (Q_b^T Q_b + eps I)^{-1} Q_b^T y_b. Requires eps > 0.
PosteriorResult posterior_mean_lowrank(const LowRankFactor& q, std::span<const Index> train,
                                       std::span<const Index> predict, const Matrix& y_train,
                                       double eps);

/// eps diag(Q_* (Q_b^T Q_b + eps I)^{-1} Q_*^T), unclamped.
Vector posterior_variance_lowrank(const LowRankFactor& q, std::span<const Index> train,
                                  std::span<const Index> predict, double eps);

/// Row-wise argmax, ties to the lowest channel.
std::vector<int> classify_onehot(const Matrix& mean);

/// `points` log-spaced values from lo to hi inclusive.
std::vector<double> nugget_grid(double lo = 1e-3, double hi = 1e1, int points = 13);

struct NuggetSearch {
  double nugget = 0.0;
  double score = 0.0;
  std::vector<double> grid;    // ascending
  std::vector<double> scores;  // validation score per grid point
  std::optional<std::string> warning;
};

/// Grid point with the best validation score; ties go to the smaller nugget.
NuggetSearch select_nugget(const DenseKernel& k, const SplitIndices& split, const Targets& targets,
                           std::span<const double> grid);
NuggetSearch select_nugget(const LowRankFactor& q, const SplitIndices& split,
                           const Targets& targets, std::span<const double> grid);

double micro_f1(std::span<const int> pred, std::span<const int> truth);
/// 1 - SS_res / SS_tot; NaN when the truth is constant.
double r2(std::span<const double> pred, std::span<const double> truth);

}  // namespace gnngp
