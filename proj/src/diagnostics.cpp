#include "gnngp/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace gnngp {

namespace {

struct Spectrum {
  double ratio = 0.0;
  Vector top;
};

Spectrum top_spectrum(const DenseKernel& k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  const Vector& ev = es.eigenvalues();
  const Index n = ev.size();
  Spectrum s;
  if (n == 0) return s;
  std::vector<double> mags(ev.data(), ev.data() + n);
  for (double& m : mags) m = std::abs(m);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return mags[static_cast<std::size_t>(a)] > mags[static_cast<std::size_t>(b)]; });
  const double s1 = mags[static_cast<std::size_t>(order[0])];
  const double s2 = n > 1 ? mags[static_cast<std::size_t>(order[1])] : 0.0;
  s.ratio = s1 > 0.0 ? s2 / s1 : 0.0;
  s.top = es.eigenvectors().col(order[0]);
  return s;
}

double angle_between(const Vector& a, const Vector& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, 0.0, 1.0));
}

void check_graph(const SparseAdjacency& a) {
  if (a.n_nodes() > kDiagnosticsMaxNodes)
    throw PreconditionError("depth_scan: N = " + std::to_string(a.n_nodes()) +
                            " exceeds the diagnostics guard of " +
                            std::to_string(kDiagnosticsMaxNodes) + " nodes");
  if (!a.is_symmetric(1e-12)) throw PreconditionError("depth_scan: A must be symmetric");
  if (!a.is_nonnegative()) throw PreconditionError("depth_scan: A must be nonnegative");
  if (!a.has_positive_diagonal())
    throw PreconditionError("depth_scan: A needs a positive diagonal (aperiodicity)");
  if (!a.is_connected())
    throw PreconditionError("depth_scan: A is reducible; the depth limits assume a connected graph");
}

}  // namespace

double min_correlation(const DenseKernel& k) {
  const Index n = k.rows();
  const double floor = 1e-12 * (n > 0 ? k.diagonal().maxCoeff() : 0.0);
  double best = 1.0;
  for (Index j = 0; j < n; ++j) {
    if (k(j, j) <= floor) continue;
    for (Index i = j + 1; i < n; ++i) {
      if (k(i, i) <= floor) continue;
      best = std::min(best, k(i, j) / std::sqrt(k(i, i) * k(j, j)));
    }
  }
  return std::clamp(best, -1.0, 1.0);
}

double rank1_gap(const DenseKernel& k, const Vector& v) {
  const double norm = k.norm();
  if (norm == 0.0) return 0.0;
  const Vector u = v.normalized();
  const double c = u.dot(k * u);
  return (k - c * u * u.transpose()).norm() / norm;
}

DepthTrace depth_scan(const KernelProgram& program, const std::shared_ptr<const SparseAdjacency>& a,
                      const DenseKernel& k0, int l_max) {
  if (!a) throw InputError("depth_scan: adjacency required");
  if (l_max < 1) throw InputError("depth_scan: l_max must be at least 1");
  check_graph(*a);
  if (k0.rows() != a->n_nodes() || k0.cols() != a->n_nodes())
    throw InputError("depth_scan: kernel and adjacency dimensions differ");

  DepthTrace out;
  out.spectral = spectral_radius(*a);
  const auto& hp = program.hyperparams();
  const double lambda = out.spectral.lambda;
  out.delta = hp.sigma_w * hp.sigma_w * lambda * lambda / 2.0;
  if (out.delta < 1.0)
    out.trace_bound =
        static_cast<double>(a->n_nodes()) * hp.sigma_b * hp.sigma_b / (1.0 - out.delta) + 1.0;

  KernelProgram scan(program.architecture(), l_max, hp, program.base());
  std::deque<DenseKernel> history;
  run_exact(scan, a, k0, [&](int layer, const DenseKernel& k) {
    DepthRecord r;
    r.layer = layer;
    r.rho_min = min_correlation(k);
    r.trace = k.trace();
    const Spectrum s = top_spectrum(k);
    r.top2_singular_ratio = s.ratio;
    r.perron_angle = angle_between(s.top, out.spectral.v);
    r.scaled_gap = rank1_gap(k, out.spectral.v);
    if (history.size() == 10) {
      r.cauchy_gap = (k - history.front()).norm();
      history.pop_front();
    }
    history.push_back(k);
    out.records.push_back(r);
  });
  return out;
}

MlpLimit mlp_fixed_point(double sigma_b, double sigma_w, const DenseKernel& k0, int l_max) {
  if (k0.rows() != k0.cols()) throw InputError("mlp_fixed_point: K0 must be square");
  if (l_max < 1) throw InputError("mlp_fixed_point: l_max must be at least 1");
  if (sigma_b < 0.0 || sigma_w < 0.0) throw InputError("mlp_fixed_point: negative hyperparameter");
  const double sb2 = sigma_b * sigma_b;
  const double s = sigma_w * sigma_w / 2.0;
  if (std::abs(s - 1.0) <= 1e-12) throw PreconditionError("mlp_fixed_point: sigma_w^2 = 2 has no limit result");

  MlpLimit out;
  out.regime = s < 1.0 ? MlpRegime::contracting : MlpRegime::expanding;
  const Index n = k0.rows();
  if (out.regime == MlpRegime::contracting) {
    out.q = sb2 / (1.0 - s);
  } else {
    out.v = (k0.diagonal().array() + sb2 / (s - 1.0)).sqrt();
  }
  const Matrix target = out.regime == MlpRegime::contracting
                            ? Matrix(Matrix::Constant(n, n, out.q))
                            : Matrix(out.v * out.v.transpose());

  DenseKernel k = k0;
  double c = 1.0;
  for (int l = 1; l <= l_max; ++l) {
    k = (sigma_w * sigma_w * relu_expectation(k)).array() + sb2;
    DepthRecord r;
    r.layer = l;
    r.rho_min = min_correlation(k);
    r.trace = k.trace();
    if (out.regime == MlpRegime::contracting) {
      out.errors.push_back((k - target).cwiseAbs().maxCoeff());
    } else {
      c *= s;
      out.errors.push_back((k / c - target).cwiseAbs().maxCoeff());
    }
    r.top2_singular_ratio = top_spectrum(k).ratio;
    r.scaled_gap = rank1_gap(k, out.regime == MlpRegime::contracting ? Vector(Vector::Ones(n)) : out.v);
    out.records.push_back(r);
  }
  return out;
}

}  // namespace gnngp
