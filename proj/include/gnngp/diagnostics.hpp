#pragma once

#include "gnngp/programs.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace gnngp {

inline constexpr Index kDiagnosticsMaxNodes = 200;

struct DepthRecord {
  int layer = 0;
  double rho_min = 0.0;
  double trace = 0.0;
  /// sigma_2 / sigma_1 of K^(l).
  double top2_singular_ratio = 0.0;
  /// ||K - c v v^T||_F / ||K||_F with c = v^T K v fitted by least squares.
  double scaled_gap = 0.0;
  /// Angle between the top eigenvector of K^(l) and the Perron vector v.
  double perron_angle = 0.0;
  /// ||K^(l) - K^(l-10)||_F; NaN for l <= 10. Telemetry only.
  double cauchy_gap = std::numeric_limits<double>::quiet_NaN();
};

struct DepthTrace {
  std::vector<DepthRecord> records;
  SpectralInfo spectral;
  /// sigma_w^2 lambda^2 / 2.
  double delta = 0.0;
  /// N sigma_b^2 / (1 - delta) + 1 when delta < 1.
  std::optional<double> trace_bound;
};

/// Minimum pairwise correlation K_xy / sqrt(K_xx K_yy) over nodes with
/// positive variance.
double min_correlation(const DenseKernel& k);

/// Least-squares rank-1 residual ||K - c v v^T||_F / ||K||_F for unit v.
double rank1_gap(const DenseKernel& k, const Vector& v);

/// Per-layer telemetry of the exact recursion for l = 1..l_max. Requires a
/// symmetric, nonnegative, connected A with positive diagonal and N <= 200;
/// throws PreconditionError otherwise.
DepthTrace depth_scan(const KernelProgram& program, const std::shared_ptr<const SparseAdjacency>& a,
                      const DenseKernel& k0, int l_max);

enum class MlpRegime { contracting, expanding };

struct MlpLimit {
  MlpRegime regime = MlpRegime::contracting;
  std::vector<DepthRecord> records;
  /// contracting: q = sigma_b^2 / (1 - sigma_w^2 / 2).
  double q = 0.0;
  /// expanding: v_x = sqrt(sigma_b^2 / (sigma_w^2 / 2 - 1) + K0(x, x)).
  Vector v;
  /// Per layer: max |K^(l) - q 1 1^T| or max |K^(l) / c_l - v v^T|.
  std::vector<double> errors;
};

/// Iterates K <- sigma_b^2 + sigma_w^2 g(K) from K^(0) (A = I) and measures the
/// distance to the predicted limit. Throws PreconditionError at sigma_w^2 = 2.
MlpLimit mlp_fixed_point(double sigma_b, double sigma_w, const DenseKernel& k0, int l_max);

}  // namespace gnngp
