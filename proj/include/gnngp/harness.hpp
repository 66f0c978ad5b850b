#pragma once

#include "gnngp/dataset.hpp"
#include "gnngp/mc.hpp"
#include "gnngp/programs.hpp"
#include "gnngp/report.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace gnngp {

/// Normalized operator for the architecture (nullptr for graph-free ones).
std::shared_ptr<const SparseAdjacency> graph_operator(const SparseAdjacency& raw, Architecture arch);

std::vector<double> default_rbf_gammas();

struct InferConfig {
  Architecture arch = Architecture::gcn;
  int layers = 2;
  Hyperparams hp;
  BaseKernel base;
  bool lowrank = false;
  std::optional<Index> landmarks;
  std::optional<double> landmark_frac;
  /// Sample landmarks from every node instead of the training set.
  bool landmarks_from_all = false;
  std::uint64_t seed = 0;
  std::optional<double> nugget;
  double grid_lo = 1e-3;
  double grid_hi = 1e1;
  int grid_points = 13;
  /// Searched alongside the nugget for the RBF baseline.
  std::vector<double> rbf_gammas = default_rbf_gammas();
  std::optional<Index> pca;
  bool center = false;
};

struct InferResult {
  Report report;
  double train_score = 0.0;
  double val_score = 0.0;
  double test_score = 0.0;
  double nugget = 0.0;
  double gamma = 0.0;
  Matrix test_mean;
  Vector test_variance;
};

InferResult run_infer(const Dataset& data, const InferConfig& cfg);

struct DepthScanConfig {
  Architecture arch = Architecture::gcn;
  Hyperparams hp;
  BaseKernel base;
  int l_max = 60;
  /// When positive, also run inference for every depth 1..metrics_depth.
  int metrics_depth = 0;
  InferConfig infer;  // template for the metric sweep
};

Report run_depth_scan(const Dataset& data, const DepthScanConfig& cfg);

struct McVerifyConfig {
  McConfig mc;
  std::vector<int> widths{64, 256, 1024, 4096};
  int seeds = 1;
};

struct McVerifyResult {
  Report report;
  std::vector<double> mean_errors;  // per width, averaged over seeds
  double slope = 0.0;               // log error against log width
};

McVerifyResult run_mc_verify(const Dataset& data, const McVerifyConfig& cfg);

struct BenchmarkConfig {
  std::vector<Index> sizes{1000, 2000, 4000, 8000};
  Index landmarks = 128;
  double avg_degree = 8.0;
  Index n_features = 64;
  Architecture arch = Architecture::gcn;
  int layers = 2;
  Hyperparams hp;
  int repeats = 3;
  std::uint64_t seed = 0;
  /// Optional landmark counts timed at the largest size.
  std::vector<Index> landmark_sweep;
};

struct BenchmarkResult {
  Report report;
  std::vector<double> m_plus_n;
  std::vector<double> seconds;  // median per size
  double slope = 0.0;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gnngp
