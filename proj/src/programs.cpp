#include "gnngp/programs.hpp"

#include <cmath>
#include <string>

namespace gnngp {

namespace {

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0)) throw InputError(std::string("hyperparameter ") + name + " must be nonnegative");
}

void require_square_match(const SparseAdjacency& a, const DenseKernel& k, const char* where) {
  if (k.rows() != k.cols() || k.rows() != a.n_nodes())
    throw InputError(std::string(where) + ": kernel and adjacency dimensions differ");
}

Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

LowRankFactor activate_lowrank(const Matrix& q, const LandmarkSet& landmarks) {
  const Vector diag = q.rowwise().squaredNorm();
  const Matrix k_cols = q * gather_rows(q, landmarks.indices()).transpose();
  const Matrix c_cols = relu_expectation_columns(diag, k_cols, landmarks);
  return chol_factor(c_cols, gather_rows(c_cols, landmarks.indices()));
}

}  // namespace

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::gcn: return "gcn";
    case Architecture::gcnii: return "gcnii";
    case Architecture::gin: return "gin";
    case Architecture::sage: return "sage";
    case Architecture::ggp: return "ggp";
    case Architecture::mlp: return "mlp";
    case Architecture::rbf: return "rbf";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view name) {
  for (Architecture a : {Architecture::gcn, Architecture::gcnii, Architecture::gin, Architecture::sage,
                         Architecture::ggp, Architecture::mlp, Architecture::rbf}) {
    if (to_string(a) == name) return a;
  }
  throw InputError("unknown architecture '" + std::string(name) + "'");
}

Normalization graph_normalization(Architecture arch) {
  switch (arch) {
    case Architecture::sage:
    case Architecture::ggp:
      return Normalization::row;
    case Architecture::mlp:
    case Architecture::rbf:
      return Normalization::none;
    default:
      return Normalization::symmetric;
  }
}

double gcnii_beta(const Hyperparams& hp, int layer) {
  if (layer < 1) throw InputError("gcnii_beta: layers are numbered from 1");
  if (!hp.beta.empty()) {
    if (static_cast<std::size_t>(layer) > hp.beta.size())
      throw InputError("gcnii_beta: beta schedule shorter than the network");
    return hp.beta[static_cast<std::size_t>(layer) - 1];
  }
  return std::log(hp.lambda / layer + 1.0);
}

KernelProgram::KernelProgram(Architecture arch, int depth, Hyperparams hp, BaseKernel base)
    : arch_(arch), depth_(depth), hp_(std::move(hp)), base_(base) {
  if (arch_ == Architecture::ggp) {
    base_.kind = BaseKernel::Kind::poly;
    depth_ = 1;
  } else if (arch_ == Architecture::rbf) {
    base_.kind = BaseKernel::Kind::rbf;
    depth_ = 0;
  } else if (depth_ < 1) {
    throw InputError("KernelProgram: depth must be at least 1");
  }
  require_nonnegative(hp_.sigma_b, "sigma_b");
  require_nonnegative(hp_.sigma_w, "sigma_w");
  require_nonnegative(hp_.sigma_w1, "sigma_w1");
  require_nonnegative(hp_.sigma_w2, "sigma_w2");
  require_nonnegative(hp_.alpha, "alpha");
  require_nonnegative(hp_.lambda, "lambda");
  for (double b : hp_.beta) require_nonnegative(b, "beta");
  if (arch_ == Architecture::gcnii && !hp_.beta.empty() &&
      hp_.beta.size() < static_cast<std::size_t>(depth_))
    throw InputError("KernelProgram: beta schedule shorter than depth");
}

std::vector<Block> KernelProgram::layer_blocks(int layer,
                                               const std::shared_ptr<const SparseAdjacency>& a,
                                               const Input& skip_source) const {
  if (layer < 1 || layer > depth_) throw InputError("layer_blocks: layer out of range");
  std::vector<Block> blocks;
  const bool activate = layer > 1;
  auto push_activation = [&](std::vector<Block>& into) {
    if (activate) into.emplace_back(Activation{});
  };
  switch (arch_) {
    case Architecture::gcn:
      push_activation(blocks);
      blocks.emplace_back(GraphConv{a});
      blocks.emplace_back(Weight{hp_.sigma_w});
      blocks.emplace_back(Bias{hp_.sigma_b});
      break;
    case Architecture::mlp:
      push_activation(blocks);
      blocks.emplace_back(Weight{hp_.sigma_w});
      blocks.emplace_back(Bias{hp_.sigma_b});
      break;
    case Architecture::gcnii: {
      IndependentAdd add;
      push_activation(add.left);
      add.left.emplace_back(GraphConv{a});
      add.left.emplace_back(Weight{1.0 - hp_.alpha});
      add.right.emplace_back(skip_source);
      add.right.emplace_back(Weight{hp_.alpha});
      blocks.emplace_back(std::move(add));
      const double beta = gcnii_beta(hp_, layer);
      blocks.emplace_back(MixedWeight{1.0 - beta, beta, hp_.sigma_w});
      break;
    }
    case Architecture::gin:
      push_activation(blocks);
      blocks.emplace_back(GraphConv{a});
      blocks.emplace_back(Weight{hp_.sigma_w});
      blocks.emplace_back(Bias{hp_.sigma_b});
      blocks.emplace_back(Activation{});
      blocks.emplace_back(Weight{hp_.sigma_w});
      blocks.emplace_back(Bias{hp_.sigma_b});
      break;
    case Architecture::sage: {
      push_activation(blocks);
      IndependentAdd add;
      add.left.emplace_back(Weight{hp_.sigma_w1});
      add.right.emplace_back(GraphConv{a});
      add.right.emplace_back(Weight{hp_.sigma_w2});
      blocks.emplace_back(std::move(add));
      break;
    }
    case Architecture::ggp:
      blocks.emplace_back(GraphConv{a});
      break;
    case Architecture::rbf:
      break;
  }
  return blocks;
}

DenseKernel run_exact(const KernelProgram& program, const std::shared_ptr<const SparseAdjacency>& a,
                      const DenseKernel& k0, const LayerCallback& on_layer) {
  if (k0.rows() != k0.cols()) throw InputError("run_exact: base kernel must be square");
  if (graph_normalization(program.architecture()) != Normalization::none) {
    if (!a) throw InputError("run_exact: architecture needs an adjacency");
    require_square_match(*a, k0, "run_exact");
  }
  Input skip;
  if (program.needs_skip_source()) skip.kernel = std::make_shared<const DenseKernel>(k0);
  DenseKernel k = k0;
  for (int layer = 1; layer <= program.depth(); ++layer) {
    const auto blocks = program.layer_blocks(layer, a, skip);
    k = apply_blocks_exact(std::move(k), blocks);
    if (on_layer) on_layer(layer, k);
  }
  return k;
}

LowRankFactor lowrank_variant(const KernelProgram& program,
                              const std::shared_ptr<const SparseAdjacency>& a,
                              const LowRankFactor& q0, const LandmarkSet& landmarks) {
  if (landmarks.n_nodes() != q0.n()) throw InputError("lowrank_variant: landmark set size mismatch");
  Input skip;
  if (program.needs_skip_source()) skip.factor = std::make_shared<const LowRankFactor>(q0);
  LowRankFactor q = q0;
  for (int layer = 1; layer <= program.depth(); ++layer) {
    const auto blocks = program.layer_blocks(layer, a, skip);
    try {
      q = apply_blocks_lowrank(std::move(q), blocks, landmarks);
    } catch (const NumericalError& e) {
      throw NumericalError("layer " + std::to_string(layer) + ": " + e.what(), e.value());
    }
  }
  return q;
}

LowRankFactor input_factor(const BaseKernel& base, const Matrix& features,
                           const LandmarkSet& landmarks) {
  const Matrix cols = base_kernel_columns(base, features, landmarks);
  try {
    return chol_factor(cols, gather_rows(cols, landmarks.indices()));
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("layer 0: ") + e.what(), e.value());
  }
}

std::vector<DenseKernel> gcn_exact(const SparseAdjacency& a, const DenseKernel& k0, double sigma_b,
                                   double sigma_w, int layers) {
  require_square_match(a, k0, "gcn_exact");
  require_nonnegative(sigma_b, "sigma_b");
  require_nonnegative(sigma_w, "sigma_w");
  if (layers < 1) throw InputError("gcn_exact: layers must be at least 1");
  std::vector<DenseKernel> out;
  out.reserve(static_cast<std::size_t>(layers));
  DenseKernel k = k0;
  for (int l = 0; l < layers; ++l) {
    const DenseKernel c = l == 0 ? k : relu_expectation(k);
    k = (sigma_w * sigma_w * a.sandwich(c)).array() + sigma_b * sigma_b;
    out.push_back(k);
  }
  return out;
}

LowRankFactor gcn_lowrank(const SparseAdjacency& a, const LowRankFactor& q0,
                          const LandmarkSet& landmarks, double sigma_b, double sigma_w, int layers) {
  if (q0.n() != a.n_nodes() || landmarks.n_nodes() != a.n_nodes())
    throw InputError("gcn_lowrank: dimension mismatch");
  require_nonnegative(sigma_b, "sigma_b");
  require_nonnegative(sigma_w, "sigma_w");
  if (layers < 1) throw InputError("gcn_lowrank: layers must be at least 1");
  Matrix q = q0.q();
  const Index n = a.n_nodes();
  for (int l = 0; l < layers; ++l) {
    Matrix p;
    if (l == 0) {
      p = q;
    } else {
      try {
        p = activate_lowrank(q, landmarks).q();
      } catch (const NumericalError& e) {
        throw NumericalError("layer " + std::to_string(l + 1) + ": " + e.what(), e.value());
      }
    }
    const Index extra = sigma_b > 0.0 ? 1 : 0;
    Matrix next(n, p.cols() + extra);
    next.leftCols(p.cols()) = sigma_w * a.multiply(p);
    if (extra) next.col(p.cols()).setConstant(sigma_b);
    q = std::move(next);
  }
  return LowRankFactor(std::move(q));
}

DenseKernel gcnii_exact(const SparseAdjacency& a, const DenseKernel& k0, double sigma_w,
                        double alpha, std::span<const double> beta, int layers) {
  require_square_match(a, k0, "gcnii_exact");
  if (layers < 1) throw InputError("gcnii_exact: layers must be at least 1");
  if (beta.size() < static_cast<std::size_t>(layers))
    throw InputError("gcnii_exact: beta schedule shorter than depth");
  DenseKernel k = k0;
  for (int l = 0; l < layers; ++l) {
    const DenseKernel c = l == 0 ? k : relu_expectation(k);
    const double b = beta[static_cast<std::size_t>(l)];
    const double scale = (1.0 - b) * (1.0 - b) + b * b * sigma_w * sigma_w;
    k = ((1.0 - alpha) * (1.0 - alpha) * a.sandwich(c) + alpha * alpha * k0) * scale;
  }
  return k;
}

DenseKernel gin_exact(const SparseAdjacency& a, const DenseKernel& k0, double sigma_b,
                      double sigma_w, int layers) {
  require_square_match(a, k0, "gin_exact");
  if (layers < 1) throw InputError("gin_exact: layers must be at least 1");
  const double sb2 = sigma_b * sigma_b;
  const double sw2 = sigma_w * sigma_w;
  DenseKernel k = k0;
  for (int l = 0; l < layers; ++l) {
    const DenseKernel c = l == 0 ? k : relu_expectation(k);
    const DenseKernel b = (sw2 * a.sandwich(c)).array() + sb2;
    k = (sw2 * relu_expectation(b)).array() + sb2;
  }
  return k;
}

DenseKernel sage_exact(const SparseAdjacency& a_row, const DenseKernel& k0, double sigma_w1,
                       double sigma_w2, int layers) {
  require_square_match(a_row, k0, "sage_exact");
  if (layers < 1) throw InputError("sage_exact: layers must be at least 1");
  DenseKernel k = k0;
  for (int l = 0; l < layers; ++l) {
    const DenseKernel c = l == 0 ? k : relu_expectation(k);
    k = sigma_w1 * sigma_w1 * c + sigma_w2 * sigma_w2 * a_row.sandwich(c);
  }
  return k;
}

DenseKernel ggp_kernel(const SparseAdjacency& a_row, const Matrix& features, double c, double d) {
  if (features.rows() != a_row.n_nodes())
    throw InputError("ggp_kernel: feature rows do not match adjacency");
  return a_row.sandwich(base_poly(features, c, d));
}

}  // namespace gnngp
