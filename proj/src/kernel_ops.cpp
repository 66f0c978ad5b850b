#include "gnngp/kernel_ops.hpp"

#include "gnngp/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gnngp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kZeroVarianceFraction = 1e-12;
constexpr double kEigenFloorFraction = 1e-10;
constexpr double kIndefiniteFraction = 1e-6;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

// sin t + (pi - t) cos t with cos t = rho.
double arccos_term(double rho) {
  rho = std::clamp(rho, -1.0, 1.0);
  const double theta = std::acos(rho);
  return std::sin(theta) + (kPi - theta) * rho;
}

// C(x, y) for x != y; zero when either variance is degenerate.
double relu_entry(double kxx, double kyy, double kxy, double var_floor) {
  if (kxx <= var_floor || kyy <= var_floor) return 0.0;
  const double scale = std::sqrt(kxx * kyy);
  return scale / (2.0 * kPi) * arccos_term(kxy / scale);
}

Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

void check_square(const DenseKernel& k, const char* where) {
  if (k.rows() != k.cols())
    throw InputError(std::string(where) + ": kernel must be square");
}

}  // namespace

LandmarkSet::LandmarkSet(std::vector<Index> indices, Index n_nodes)
    : indices_(std::move(indices)), n_nodes_(n_nodes) {
  if (indices_.empty()) throw InputError("LandmarkSet: at least one landmark is required");
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
    throw InputError("LandmarkSet: landmark indices must be distinct");
  if (indices_.front() < 0 || indices_.back() >= n_nodes_)
    throw InputError("LandmarkSet: landmark index out of range");
}

LandmarkSet LandmarkSet::all(Index n_nodes) {
  std::vector<Index> idx(static_cast<std::size_t>(n_nodes));
  for (Index i = 0; i < n_nodes; ++i) idx[i] = i;
  return LandmarkSet(std::move(idx), n_nodes);
}

LandmarkSet LandmarkSet::sample(std::span<const Index> pool, Index count, std::uint64_t seed,
                                Index n_nodes) {
  if (count < 1 || count > static_cast<Index>(pool.size()))
    throw InputError("LandmarkSet::sample: count must be in [1, pool size]");
  std::vector<Index> items(pool.begin(), pool.end());
  auto rng = make_stream({seed, 0x6c616e64ULL});
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
  for (Index i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(uniform_index(rng, items.size() - static_cast<std::size_t>(i)));
    std::swap(items[static_cast<std::size_t>(i)], items[j]);
  }
  items.resize(static_cast<std::size_t>(count));
  return LandmarkSet(std::move(items), n_nodes);
}

DenseKernel base_inner(const Matrix& features) {
  if (features.cols() < 1) throw InputError("base_inner: need at least one feature column");
  DenseKernel k = (features * features.transpose()) / static_cast<double>(features.cols());
  return 0.5 * (k + k.transpose());
}

Matrix squared_distances(const Matrix& features) {
  const Vector sq = features.rowwise().squaredNorm();
  Matrix d2 = features * features.transpose();
  const Index n = d2.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) d2(i, j) = i == j ? 0.0 : std::max(0.0, sq[i] + sq[j] - 2.0 * d2(i, j));
  return 0.5 * (d2 + d2.transpose());
}

DenseKernel rbf_from_squared_distances(const Matrix& d2, double gamma) {
  if (!(gamma > 0.0)) throw InputError("base_rbf: gamma must be positive");
  DenseKernel k = (-gamma * d2.array()).exp().matrix();
  k.diagonal().setOnes();
  return k;
}

DenseKernel base_rbf(const Matrix& features, double gamma) {
  if (!(gamma > 0.0)) throw InputError("base_rbf: gamma must be positive");
  return rbf_from_squared_distances(squared_distances(features), gamma);
}

DenseKernel base_poly(const Matrix& features, double c, double d) {
  if (!(c >= 0.0)) throw InputError("base_poly: c must be nonnegative");
  DenseKernel k = features * features.transpose();
  k = k.unaryExpr([c, d](double v) { return std::pow(std::max(v + c, 0.0), d); });
  return 0.5 * (k + k.transpose());
}

DenseKernel base_kernel(const BaseKernel& spec, const Matrix& features) {
  switch (spec.kind) {
    case BaseKernel::Kind::inner:
      return base_inner(features);
    case BaseKernel::Kind::rbf:
      return base_rbf(features, spec.gamma);
    case BaseKernel::Kind::poly:
      return base_poly(features, spec.c, spec.d);
  }
  throw InputError("base_kernel: unknown kind");
}

Matrix base_kernel_columns(const BaseKernel& spec, const Matrix& features,
                           const LandmarkSet& landmarks) {
  if (landmarks.n_nodes() != features.rows())
    throw InputError("base_kernel_columns: landmark set does not match feature rows");
  const Matrix xa = gather_rows(features, landmarks.indices());
  Matrix cols = features * xa.transpose();
  switch (spec.kind) {
    case BaseKernel::Kind::inner:
      if (features.cols() < 1) throw InputError("base_inner: need at least one feature column");
      return cols / static_cast<double>(features.cols());
    case BaseKernel::Kind::rbf: {
      if (!(spec.gamma > 0.0)) throw InputError("base_rbf: gamma must be positive");
      const Vector sq = features.rowwise().squaredNorm();
      const auto idx = landmarks.indices();
      for (Index j = 0; j < cols.cols(); ++j) {
        const Index a = idx[static_cast<std::size_t>(j)];
        for (Index i = 0; i < cols.rows(); ++i) {
          const double dist = std::max(0.0, sq[i] + sq[a] - 2.0 * cols(i, j));
          cols(i, j) = i == a ? 1.0 : std::exp(-spec.gamma * dist);
        }
      }
      return cols;
    }
    case BaseKernel::Kind::poly:
      if (!(spec.c >= 0.0)) throw InputError("base_poly: c must be nonnegative");
      return cols.unaryExpr(
          [&spec](double v) { return std::pow(std::max(v + spec.c, 0.0), spec.d); });
  }
  throw InputError("base_kernel_columns: unknown kind");
}

double correlation_map(double rho) { return arccos_term(rho) / kPi; }

DenseKernel relu_expectation(const DenseKernel& k) {
  check_square(k, "relu_expectation");
  const Index n = k.rows();
  const Vector diag = k.diagonal();
  const double var_floor = kZeroVarianceFraction * std::max(0.0, diag.maxCoeff());
  DenseKernel c(n, n);
  for (Index j = 0; j < n; ++j) {
    c(j, j) = diag[j] / 2.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = relu_entry(diag[i], diag[j], k(i, j), var_floor);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Matrix relu_expectation_columns(const Vector& diag, const Matrix& k_cols,
                                const LandmarkSet& landmarks) {
  if (k_cols.rows() != diag.size() || k_cols.cols() != landmarks.size())
    throw InputError("relu_expectation_columns: dimension mismatch");
  const double var_floor = kZeroVarianceFraction * std::max(0.0, diag.maxCoeff());
  const auto idx = landmarks.indices();
  Matrix c(k_cols.rows(), k_cols.cols());
  for (Index j = 0; j < k_cols.cols(); ++j) {
    const Index a = idx[static_cast<std::size_t>(j)];
    for (Index i = 0; i < k_cols.rows(); ++i) {
      c(i, j) = i == a ? diag[i] / 2.0 : relu_entry(diag[i], diag[a], k_cols(i, j), var_floor);
    }
  }
  return c;
}

LowRankFactor chol_factor(const Matrix& c_cols, const Matrix& c_landmark) {
  if (c_landmark.rows() != c_landmark.cols() || c_cols.cols() != c_landmark.rows())
    throw InputError("chol_factor: dimension mismatch");
  const Matrix sym = 0.5 * (c_landmark + c_landmark.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success)
    throw NumericalError("chol_factor: eigendecomposition of landmark block failed", 0.0);
  const Vector& lambda = eig.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  if (!std::isfinite(lambda_max) || !(lambda_max > 0.0)) {
    throw NumericalError("chol_factor: landmark block has no positive eigenvalue (largest " +
                             std::to_string(lambda_max) + ")",
                         lambda_max);
  }
  const double lambda_min = lambda.minCoeff();
  if (lambda_min < -kIndefiniteFraction * lambda_max) {
    throw NumericalError("chol_factor: landmark block is indefinite (eigenvalue " +
                             std::to_string(lambda_min) + ")",
                         lambda_min);
  }
  const double floor = kEigenFloorFraction * lambda_max;
  const Vector inv_sqrt = lambda.unaryExpr([floor](double l) { return 1.0 / std::sqrt(std::max(l, floor)); });
  const Matrix& u = eig.eigenvectors();
  const Matrix c_inv_sqrt = u * inv_sqrt.asDiagonal() * u.transpose();
  return LowRankFactor(c_cols * c_inv_sqrt);
}

DenseKernel apply_block_exact(const DenseKernel& k, const Block& block) {
  check_square(k, "apply_block_exact");
  return std::visit(
      overloaded{
          [&](const Bias& b) -> DenseKernel {
            if (b.sigma_b < 0.0) throw InputError("Bias: sigma_b must be nonnegative");
            return k.array() + b.sigma_b * b.sigma_b;
          },
          [&](const Weight& w) -> DenseKernel {
            if (w.sigma_w < 0.0) throw InputError("Weight: sigma_w must be nonnegative");
            return w.sigma_w * w.sigma_w * k;
          },
          [&](const MixedWeight& m) -> DenseKernel {
            if (m.sigma_w < 0.0) throw InputError("MixedWeight: sigma_w must be nonnegative");
            return (m.alpha * m.alpha + m.beta * m.beta * m.sigma_w * m.sigma_w) * k;
          },
          [&](const GraphConv& g) -> DenseKernel {
            if (!g.a) throw InputError("GraphConv: missing adjacency");
            if (g.a->n_nodes() != k.rows())
              throw InputError("GraphConv: adjacency dimension does not match kernel");
            return g.a->sandwich(k);
          },
          [&](const Activation&) -> DenseKernel { return relu_expectation(k); },
          [&](const Input& in) -> DenseKernel {
            if (!in.kernel) throw InputError("Input: no dense kernel attached");
            if (in.kernel->rows() != k.rows())
              throw InputError("Input: kernel dimension mismatch");
            return *in.kernel;
          },
          [&](const IndependentAdd& add) -> DenseKernel {
            return apply_blocks_exact(k, add.left) + apply_blocks_exact(k, add.right);
          },
      },
      block.as_variant());
}

DenseKernel apply_blocks_exact(DenseKernel k, std::span<const Block> blocks) {
  for (const Block& b : blocks) k = apply_block_exact(k, b);
  return k;
}

LowRankFactor apply_block_lowrank(const LowRankFactor& q, const Block& block,
                                  const LandmarkSet& landmarks) {
  const Matrix& m = q.q();
  return std::visit(
      overloaded{
          [&](const Bias& b) -> LowRankFactor {
            if (b.sigma_b < 0.0) throw InputError("Bias: sigma_b must be nonnegative");
            if (b.sigma_b == 0.0) return q;
            Matrix out(m.rows(), m.cols() + 1);
            out.leftCols(m.cols()) = m;
            out.col(m.cols()).setConstant(b.sigma_b);
            return LowRankFactor(std::move(out));
          },
          [&](const Weight& w) -> LowRankFactor {
            if (w.sigma_w < 0.0) throw InputError("Weight: sigma_w must be nonnegative");
            return LowRankFactor(w.sigma_w * m);
          },
          [&](const MixedWeight& mw) -> LowRankFactor {
            if (mw.sigma_w < 0.0) throw InputError("MixedWeight: sigma_w must be nonnegative");
            return LowRankFactor(
                std::sqrt(mw.alpha * mw.alpha + mw.beta * mw.beta * mw.sigma_w * mw.sigma_w) * m);
          },
          [&](const GraphConv& g) -> LowRankFactor {
            if (!g.a) throw InputError("GraphConv: missing adjacency");
            if (g.a->n_nodes() != m.rows())
              throw InputError("GraphConv: adjacency dimension does not match factor");
            return LowRankFactor(g.a->multiply(m));
          },
          [&](const Activation&) -> LowRankFactor {
            if (landmarks.n_nodes() != m.rows())
              throw InputError("Activation: landmark set does not match factor rows");
            const Vector diag = m.rowwise().squaredNorm();
            const Matrix qa = gather_rows(m, landmarks.indices());
            const Matrix k_cols = m * qa.transpose();
            const Matrix c_cols = relu_expectation_columns(diag, k_cols, landmarks);
            return chol_factor(c_cols, gather_rows(c_cols, landmarks.indices()));
          },
          [&](const Input& in) -> LowRankFactor {
            if (!in.factor) throw InputError("Input: no low-rank factor attached");
            if (in.factor->n() != m.rows()) throw InputError("Input: factor dimension mismatch");
            return *in.factor;
          },
          [&](const IndependentAdd& add) -> LowRankFactor {
            const LowRankFactor l = apply_blocks_lowrank(q, add.left, landmarks);
            const LowRankFactor r = apply_blocks_lowrank(q, add.right, landmarks);
            const bool l_zero = l.q().isZero(0.0);
            const bool r_zero = r.q().isZero(0.0);
            if (l_zero && !r_zero) return r;
            if (r_zero && !l_zero) return l;
            Matrix out(m.rows(), l.rank() + r.rank());
            out << l.q(), r.q();
            return LowRankFactor(std::move(out));
          },
      },
      block.as_variant());
}

LowRankFactor apply_blocks_lowrank(LowRankFactor q, std::span<const Block> blocks,
                                   const LandmarkSet& landmarks) {
  for (const Block& b : blocks) q = apply_block_lowrank(q, b, landmarks);
  return q;
}

}  // namespace gnngp
