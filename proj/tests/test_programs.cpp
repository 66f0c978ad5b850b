#include "gnngp/programs.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gnngp;

namespace {

using AdjPtr = std::shared_ptr<const SparseAdjacency>;

AdjPtr sym_graph(Index n, double p, std::mt19937_64& rng) {
  return std::make_shared<const SparseAdjacency>(
      normalize_sym(build_adjacency(oracle::random_connected_edges(n, p, rng), n, false)));
}

AdjPtr row_graph(Index n, double p, std::mt19937_64& rng) {
  return std::make_shared<const SparseAdjacency>(
      normalize_row(build_adjacency(oracle::random_connected_edges(n, p, rng), n, false)));
}

AdjPtr identity(Index n) {
  return std::make_shared<const SparseAdjacency>(normalize_sym(build_adjacency(std::vector<Edge>{}, n, false)));
}

AdjPtr two_node_half() {
  return std::make_shared<const SparseAdjacency>(normalize_sym(build_adjacency(std::vector<Edge>{{0, 1}}, 2, false)));
}

// Dense re-statement of the recursions, one step at a time.
Matrix g(const Matrix& k) { return oracle::relu_expectation_quadrature(k); }

}  // namespace

TEST_CASE("architecture names round-trip") {
  for (auto a : {Architecture::gcn, Architecture::gcnii, Architecture::gin, Architecture::sage,
                 Architecture::ggp, Architecture::mlp, Architecture::rbf})
    CHECK(parse_architecture(to_string(a)) == a);
  CHECK_THROWS_AS(parse_architecture("gat"), InputError);
  CHECK(graph_normalization(Architecture::sage) == Normalization::row);
  CHECK(graph_normalization(Architecture::gcn) == Normalization::symmetric);
}

TEST_CASE("KernelProgram validation") {
  CHECK_THROWS_AS(KernelProgram(Architecture::gcn, 0), InputError);
  Hyperparams hp;
  hp.sigma_b = -1.0;
  CHECK_THROWS_AS(KernelProgram(Architecture::gcn, 2, hp), InputError);
  Hyperparams beta;
  beta.beta = {0.1};
  CHECK_THROWS_AS(KernelProgram(Architecture::gcnii, 2, beta), InputError);
  CHECK(gcnii_beta(Hyperparams{}, 1) == doctest::Approx(std::log(1.5)));
  CHECK(gcnii_beta(Hyperparams{}, 2) == doctest::Approx(std::log(1.25)));
}

TEST_CASE("gcn_exact small cases") {
  const auto id = identity(3);
  const auto k = gcn_exact(*id, Matrix::Identity(3, 3), 0.0, std::sqrt(2.0), 1);
  REQUIRE(k.size() == 1);
  CHECK(k[0].isApprox(2.0 * Matrix::Identity(3, 3), 1e-15));

  const auto half = two_node_half();
  CHECK(gcn_exact(*half, Matrix::Identity(2, 2), 0.0, 1.0, 1)[0].isApprox(Matrix::Constant(2, 2, 0.5)));
}

TEST_CASE("gcn_exact follows the dense recursion with no activation before layer one") {
  std::mt19937_64 rng(1);
  const auto a = sym_graph(9, 0.3, rng);
  const Matrix ad = a->to_dense();
  const Matrix k0 = oracle::random_psd(9, rng);
  const double sb = 0.3;
  const double sw = 1.2;
  const auto ks = gcn_exact(*a, k0, sb, sw, 3);
  Matrix k = (sw * sw * ad * k0 * ad.transpose()).array() + sb * sb;
  CHECK((ks[0] - k).norm() <= 1e-12 * k.norm());
  for (int l = 1; l < 3; ++l) {
    k = (sw * sw * ad * g(k) * ad.transpose()).array() + sb * sb;
    CHECK((ks[static_cast<std::size_t>(l)] - k).norm() <= 1e-8 * k.norm());
  }
}

TEST_CASE("block programs reproduce the closed-form recursions") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 6 + static_cast<Index>(rng() % 10);
    const auto a = sym_graph(n, 0.3, rng);
    const auto ar = row_graph(n, 0.3, rng);
    const Matrix k0 = oracle::random_psd(n, rng);
    Hyperparams hp;
    hp.sigma_b = 0.4;
    hp.sigma_w = 1.1;
    const int layers = 3;

    const Matrix gcn = run_exact(KernelProgram(Architecture::gcn, layers, hp), a, k0);
    CHECK((gcn - gcn_exact(*a, k0, hp.sigma_b, hp.sigma_w, layers).back()).norm() <= 1e-12 * gcn.norm());

    const Matrix gin = run_exact(KernelProgram(Architecture::gin, layers, hp), a, k0);
    CHECK((gin - gin_exact(*a, k0, hp.sigma_b, hp.sigma_w, layers)).norm() <= 1e-12 * gin.norm());

    std::vector<double> beta;
    for (int l = 1; l <= layers; ++l) beta.push_back(gcnii_beta(hp, l));
    const Matrix gcnii = run_exact(KernelProgram(Architecture::gcnii, layers, hp), a, k0);
    CHECK((gcnii - gcnii_exact(*a, k0, hp.sigma_w, hp.alpha, beta, layers)).norm() <= 1e-12 * gcnii.norm());

    Hyperparams sage_hp;
    sage_hp.sigma_w1 = 0.5;
    sage_hp.sigma_w2 = 1.3;
    const Matrix sage = run_exact(KernelProgram(Architecture::sage, layers, sage_hp), ar, k0);
    CHECK((sage - sage_exact(*ar, k0, 0.5, 1.3, layers)).norm() <= 1e-12 * sage.norm());
  }
}

TEST_CASE("GCNII limiting cases") {
  std::mt19937_64 rng(3);
  const auto a = sym_graph(8, 0.3, rng);
  const Matrix k0 = oracle::random_psd(8, rng);
  const std::vector<double> beta{0.3, 0.2};
  const double sw = 1.4;
  const double scale1 = 0.7 * 0.7 + 0.3 * 0.3 * sw * sw;
  const double scale2 = 0.8 * 0.8 + 0.2 * 0.2 * sw * sw;

  const Matrix pure_conv = gcnii_exact(*a, k0, sw, 0.0, beta, 2);
  const Matrix k1 = scale1 * a->sandwich(k0);
  CHECK((pure_conv - scale2 * a->sandwich(relu_expectation(k1))).norm() <= 1e-12 * pure_conv.norm());

  const Matrix pure_skip = gcnii_exact(*a, k0, sw, 1.0, beta, 2);
  CHECK((pure_skip - scale2 * k0).norm() <= 1e-12 * k0.norm());
}

TEST_CASE("GIN limiting cases") {
  std::mt19937_64 rng(4);
  const auto a = sym_graph(7, 0.3, rng);
  const Matrix k0 = oracle::random_psd(7, rng);
  CHECK(gin_exact(*a, k0, 0.5, 0.0, 2).isApprox(Matrix::Constant(7, 7, 0.25)));

  const auto id = identity(7);
  std::vector<Block> mlp_twice;
  mlp_twice.emplace_back(Weight{1.2});
  mlp_twice.emplace_back(Bias{0.3});
  mlp_twice.emplace_back(Activation{});
  mlp_twice.emplace_back(Weight{1.2});
  mlp_twice.emplace_back(Bias{0.3});
  CHECK(gin_exact(*id, k0, 0.3, 1.2, 1).isApprox(apply_blocks_exact(k0, mlp_twice), 1e-12));
}

TEST_CASE("GraphSAGE limiting cases") {
  std::mt19937_64 rng(5);
  const auto ar = row_graph(8, 0.3, rng);
  const Matrix k0 = oracle::random_psd(8, rng);
  const Matrix mlp_like = sage_exact(*ar, k0, 1.1, 0.0, 3);
  Matrix k = 1.21 * k0;
  for (int l = 1; l < 3; ++l) k = 1.21 * relu_expectation(k);
  CHECK(mlp_like.isApprox(k, 1e-12));

  const Matrix gcn_like = sage_exact(*ar, k0, 0.0, 1.0, 3);
  CHECK(gcn_like.isApprox(gcn_exact(*ar, k0, 0.0, 1.0, 3).back(), 1e-12));
}

TEST_CASE("GGP kernel") {
  std::mt19937_64 rng(6);
  const Matrix x = oracle::gaussian(5, 3, rng);
  const auto id = identity(5);
  CHECK(ggp_kernel(*id, x, 5.0, 3.0).isApprox(base_poly(x, 5.0, 3.0)));
  const auto ar = row_graph(5, 0.4, rng);
  CHECK(ggp_kernel(*ar, Matrix::Zero(5, 2), 5.0, 3.0).isApprox(Matrix::Constant(5, 5, 125.0), 1e-12));
  const Matrix ad = ar->to_dense();
  CHECK(ggp_kernel(*ar, x, 5.0, 3.0).isApprox(ad * base_poly(x, 5.0, 3.0) * ad.transpose(), 1e-12));
  const Matrix via_program = run_exact(KernelProgram(Architecture::ggp, 1), ar, base_poly(x, 5.0, 3.0));
  CHECK(via_program.isApprox(ggp_kernel(*ar, x, 5.0, 3.0), 1e-12));
}

TEST_CASE("GCN on the identity graph is the MLP recursion") {
  std::mt19937_64 rng(7);
  const Matrix k0 = oracle::random_psd(6, rng);
  Hyperparams hp;
  hp.sigma_b = 0.2;
  hp.sigma_w = 1.3;
  const Matrix gcn = run_exact(KernelProgram(Architecture::gcn, 4, hp), identity(6), k0);
  const Matrix mlp = run_exact(KernelProgram(Architecture::mlp, 4, hp), nullptr, k0);
  CHECK(gcn.isApprox(mlp, 1e-13));
}

TEST_CASE("gcn_lowrank with all landmarks matches the exact path") {
  std::mt19937_64 rng(8);
  const Index n = 10;
  const auto a = sym_graph(n, 0.3, rng);
  const Matrix x = oracle::gaussian(n, n + 2, rng);
  const Matrix k0 = base_inner(x);
  const auto lm = LandmarkSet::all(n);
  const LowRankFactor q0 = input_factor(BaseKernel{}, x, lm);
  const auto q = gcn_lowrank(*a, q0, lm, 0.0, 1.0, 2);
  const Matrix exact = gcn_exact(*a, k0, 0.0, 1.0, 2).back();
  CHECK(oracle::rel_frobenius(q.gram(), exact) <= 1e-6);
  CHECK(q.rank() == n);

  const auto qb = gcn_lowrank(*a, q0, lm, 0.5, 1.0, 2);
  CHECK(qb.rank() == n + 1);
  CHECK(oracle::rel_frobenius(qb.gram(), gcn_exact(*a, k0, 0.5, 1.0, 2).back()) <= 1e-6);

  const auto via_program = lowrank_variant(KernelProgram(Architecture::gcn, 2), a, q0, lm);
  CHECK((via_program.q() - q.q()).norm() <= 1e-12 * q.q().norm());
}

TEST_CASE("gcn_lowrank with a single landmark stays usable") {
  std::mt19937_64 rng(9);
  const Index n = 12;
  const auto a = sym_graph(n, 0.3, rng);
  const Matrix x = oracle::gaussian(n, 4, rng);
  const LandmarkSet lm({3}, n);
  const auto q = gcn_lowrank(*a, input_factor(BaseKernel{}, x, lm), lm, 0.3, 1.0, 2);
  CHECK(q.rank() <= 2);
  CHECK(q.q().allFinite());
}

TEST_CASE("lowrank_variant coherence for every architecture") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 4; ++trial) {
    const Index n = 8 + static_cast<Index>(rng() % 20);
    const Matrix x = oracle::gaussian(n, n + 3, rng);
    const Matrix k0 = base_inner(x);
    const auto lm = LandmarkSet::all(n);
    const LowRankFactor q0 = input_factor(BaseKernel{}, x, lm);
    Hyperparams hp;
    hp.sigma_b = 0.1;
    const auto a = sym_graph(n, 0.25, rng);
    const auto ar = row_graph(n, 0.25, rng);
    for (auto arch : {Architecture::gcn, Architecture::gcnii, Architecture::gin, Architecture::sage}) {
      CAPTURE(to_string(arch));
      const auto& op = arch == Architecture::sage ? ar : a;
      const KernelProgram p(arch, 3, hp);
      const Matrix exact = run_exact(p, op, k0);
      const LowRankFactor q = lowrank_variant(p, op, q0, lm);
      CHECK(oracle::rel_frobenius(q.gram(), exact) <= 1e-6);
      if (arch == Architecture::gcnii) CHECK(q.rank() <= n + q0.rank() + 1);
      if (arch == Architecture::sage) CHECK(q.rank() == n);
    }
  }
}

TEST_CASE("K^(3) is positive definite for distinct non-proportional features and nonsingular A") {
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 20) {
    const Index n = 10 + static_cast<Index>(rng() % 21);
    const auto a = sym_graph(n, 0.2, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a->to_dense(), Eigen::EigenvaluesOnly);
    if (ea.eigenvalues().cwiseAbs().minCoeff() < 1e-8) continue;
    const Matrix x = oracle::gaussian(n, 5, rng);
    const Matrix k3 = run_exact(KernelProgram(Architecture::gcn, 3), a, base_inner(x));
    Eigen::SelfAdjointEigenSolver<Matrix> es(k3, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 1e-10 * k3.trace() / static_cast<double>(n));
    ++checked;
  }
}

TEST_CASE("twin nodes give identical rows of A and a singular K^(3)") {
  // Nodes 1 and 2 share the closed neighbourhood {0, 1, 2}.
  const std::vector<Edge> edges{{0, 1}, {0, 2}, {1, 2}, {0, 3}};
  const auto a = std::make_shared<const SparseAdjacency>(normalize_sym(build_adjacency(edges, 4, false)));
  std::mt19937_64 rng(12);
  const Matrix x = oracle::gaussian(4, 6, rng);
  const Matrix k3 = run_exact(KernelProgram(Architecture::gcn, 3), a, base_inner(x));
  CHECK((k3.row(1) - k3.row(2)).norm() <= 1e-14 * k3.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> es(k3, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() <= 1e-12 * k3.trace());
}

TEST_CASE("low-rank errors name the layer") {
  const Index n = 4;
  const auto a = identity(n);
  Matrix bad = Matrix::Zero(n, 2);
  bad(0, 0) = 1.0;
  const LandmarkSet lm({1, 2}, n);
  try {
    gcn_lowrank(*a, LowRankFactor(bad), lm, 0.0, 1.0, 2);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
  }
}
