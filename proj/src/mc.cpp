#include "gnngp/mc.hpp"

#include "gnngp/random.hpp"

#include <Eigen/Eigenvalues>

#include <random>
#include <string>

namespace gnngp {

namespace {

enum Purpose : std::uint64_t { kMain = 1, kSecond = 2, kSkip = 3, kEmbed = 4, kBias = 5, kBias2 = 6 };

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = z(rng);
  return g;
}

struct LayerDraw {
  const McConfig& cfg;
  std::uint64_t sample;
  int layer;

  std::mt19937_64 stream(Purpose p) const {
    return make_stream({cfg.seed, sample, static_cast<std::uint64_t>(layer), p});
  }

  /// H W with W_ij ~ N(0, scale^2 / d_in), W of shape d_in x width.
  Matrix times_weights(const Matrix& h, double scale, Purpose p) const {
    auto rng = stream(p);
    const double var = scale * scale / static_cast<double>(h.cols());
    if (cfg.sampler == McSampler::explicit_weights)
      return std::sqrt(var) * (h * standard_normal(h.cols(), cfg.width, rng));
    const Matrix gram = var * (h * h.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Matrix f = es.eigenvectors() * root.asDiagonal();
    return f * standard_normal(h.rows(), cfg.width, rng);
  }

  /// Adds a bias row b ~ N(0, sigma_b^2) to every node.
  void add_bias(Matrix& z, double sigma_b, Purpose p) const {
    if (sigma_b == 0.0) return;
    auto rng = stream(p);
    const Vector b = sigma_b * standard_normal(cfg.width, 1, rng).col(0);
    z.rowwise() += b.transpose();
  }
};

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

}  // namespace

void McConfig::validate() const {
  if (width < 1) throw InputError("McConfig: width must be at least 1");
  if (n_samples < 2) throw InputError("McConfig: need at least 2 samples");
  if (layers < 1) throw InputError("McConfig: layers must be at least 1");
  switch (architecture) {
    case Architecture::gcn:
    case Architecture::gcnii:
    case Architecture::gin:
    case Architecture::sage:
    case Architecture::mlp:
      break;
    default:
      throw InputError("McConfig: no finite network for architecture '" +
                       std::string(to_string(architecture)) + "'");
  }
}

Matrix sample_outputs(const McConfig& cfg, const SparseAdjacency& a, const Matrix& x0,
                      std::uint64_t index) {
  cfg.validate();
  if (x0.rows() != a.n_nodes()) throw InputError("sample_outputs: feature rows do not match graph");
  if (x0.cols() < 1) throw InputError("sample_outputs: features need at least one column");
  const auto& hp = cfg.hp;
  Matrix z;
  for (int layer = 1; layer <= cfg.layers; ++layer) {
    const LayerDraw draw{cfg, index, layer};
    const bool first = layer == 1;
    switch (cfg.architecture) {
      case Architecture::gcn: {
        const Matrix h = first ? x0 : relu(z);
        z = a.multiply(draw.times_weights(h, hp.sigma_w, kMain));
        draw.add_bias(z, hp.sigma_b, kBias);
        break;
      }
      case Architecture::mlp: {
        const Matrix h = first ? x0 : relu(z);
        z = draw.times_weights(h, hp.sigma_w, kMain);
        draw.add_bias(z, hp.sigma_b, kBias);
        break;
      }
      case Architecture::gin: {
        const Matrix h = first ? x0 : relu(z);
        Matrix b = a.multiply(draw.times_weights(h, hp.sigma_w, kMain));
        draw.add_bias(b, hp.sigma_b, kBias);
        z = draw.times_weights(relu(b), hp.sigma_w, kSecond);
        draw.add_bias(z, hp.sigma_b, kBias2);
        break;
      }
      case Architecture::sage: {
        const Matrix h = first ? x0 : relu(z);
        z = a.multiply(draw.times_weights(h, hp.sigma_w2, kSecond));
        if (hp.sigma_w1 != 0.0) z += draw.times_weights(h, hp.sigma_w1, kMain);
        break;
      }
      case Architecture::gcnii: {
        // Both branches get their own embedding of X0 so that they are
        // independent, as the kernel rule for the residual sum requires.
        const Matrix h = first ? draw.times_weights(x0, 1.0, kEmbed) : relu(z);
        const Matrix skip = draw.times_weights(x0, 1.0, kSkip);
        const Matrix s = (1.0 - hp.alpha) * a.multiply(h) + hp.alpha * skip;
        const double beta = gcnii_beta(hp, layer);
        z = (1.0 - beta) * s + beta * draw.times_weights(s, hp.sigma_w, kMain);
        break;
      }
      default:
        throw InputError("sample_outputs: unsupported architecture");
    }
  }
  return z;
}

DenseKernel sample_covariance(const McConfig& cfg, const SparseAdjacency& a, const Matrix& x0) {
  cfg.validate();
  const Index n = a.n_nodes();
  DenseKernel sum = DenseKernel::Zero(n, n);
  for (int s = 0; s < cfg.n_samples; ++s) {
    const Matrix z = sample_outputs(cfg, a, x0, static_cast<std::uint64_t>(s));
    sum.noalias() += z * z.transpose();
  }
  sum /= static_cast<double>(cfg.n_samples) * cfg.width;
  return 0.5 * (sum + sum.transpose());
}

DenseKernel analytic_covariance(const McConfig& cfg, const std::shared_ptr<const SparseAdjacency>& a,
                                const Matrix& x0) {
  cfg.validate();
  const KernelProgram program(cfg.architecture, cfg.layers, cfg.hp, BaseKernel{});
  return run_exact(program, a, base_inner(x0));
}

double compare_covariance(const DenseKernel& empirical, const DenseKernel& analytic) {
  if (empirical.rows() != analytic.rows() || empirical.cols() != analytic.cols())
    throw InputError("compare_covariance: dimension mismatch");
  const double norm = analytic.norm();
  if (norm == 0.0) throw InputError("compare_covariance: analytic kernel has zero norm");
  return (empirical - analytic).norm() / norm;
}

}  // namespace gnngp
