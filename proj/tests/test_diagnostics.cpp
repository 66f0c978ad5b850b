#include "gnngp/diagnostics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gnngp;

namespace {

std::shared_ptr<const SparseAdjacency> sym_graph(Index n, double p, std::mt19937_64& rng) {
  return std::make_shared<const SparseAdjacency>(
      normalize_sym(build_adjacency(oracle::random_connected_edges(n, p, rng), n, false)));
}

KernelProgram gcn(double sigma_b, double sigma_w, int depth = 60) {
  Hyperparams hp;
  hp.sigma_b = sigma_b;
  hp.sigma_w = sigma_w;
  return KernelProgram(Architecture::gcn, depth, hp);
}

}  // namespace

TEST_CASE("min_correlation and rank1_gap") {
  const Matrix k = (Matrix(3, 3) << 4, 2, -1, 2, 1, 0, -1, 0, 1).finished();
  CHECK(min_correlation(k) == doctest::Approx(-0.5));
  CHECK(min_correlation(Matrix::Ones(4, 4)) == doctest::Approx(1.0));

  const Vector v = Vector::Constant(4, 0.5);
  CHECK(rank1_gap(3.0 * v * v.transpose(), v) <= 1e-15);
  // Best c for I against v v^T is 1; residual I - v v^T has norm sqrt(3).
  CHECK(rank1_gap(Matrix::Identity(4, 4), v) == doctest::Approx(std::sqrt(3.0) / 2.0));
}

TEST_CASE("depth_scan checks its graph preconditions") {
  const Matrix k0 = Matrix::Identity(3, 3);
  const auto split = std::make_shared<const SparseAdjacency>(
      normalize_sym(build_adjacency(std::vector<Edge>{{0, 1}}, 3, false)));
  CHECK_THROWS_AS(depth_scan(gcn(0.0, 1.0), split, k0, 5), PreconditionError);

  const auto no_loops = std::make_shared<const SparseAdjacency>(
      build_adjacency(std::vector<Edge>{{0, 1}, {1, 2}}, 3, false));
  CHECK_THROWS_AS(depth_scan(gcn(0.0, 1.0), no_loops, k0, 5), PreconditionError);

  std::mt19937_64 rng(30);
  const auto row = std::make_shared<const SparseAdjacency>(
      normalize_row(build_adjacency(oracle::random_connected_edges(6, 0.3, rng), 6, false)));
  CHECK_THROWS_AS(depth_scan(gcn(0.0, 1.0), row, Matrix::Identity(6, 6), 5), PreconditionError);

  const auto big = sym_graph(kDiagnosticsMaxNodes + 1, 0.0, rng);
  CHECK_THROWS_AS(depth_scan(gcn(0.0, 1.0), big, Matrix::Identity(big->n_nodes(), big->n_nodes()), 2),
                  PreconditionError);
}

TEST_CASE("sigma_b = 0: minimum correlation climbs monotonically to one") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 10;
    const auto a = sym_graph(n, 0.2, rng);
    const Matrix k0 = base_inner(oracle::gaussian(n, 4, rng));
    const auto trace = depth_scan(gcn(0.0, 1.0), a, k0, 60);
    REQUIRE(trace.records.size() == 60);
    for (std::size_t l = 1; l < trace.records.size(); ++l)
      CHECK(trace.records[l].rho_min >= trace.records[l - 1].rho_min - 1e-12);
    CHECK(trace.records.back().rho_min >= 1.0 - 1e-3);
    for (const auto& r : trace.records) {
      CHECK(r.rho_min >= -1.0);
      CHECK(r.rho_min <= 1.0 + 1e-12);
      CHECK(r.top2_singular_ratio >= 0.0);
    }
  }
}

TEST_CASE("sigma_w^2 < 2 / lambda^2: trace bound from layer 50 on") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 12 + static_cast<Index>(rng() % 30);
    const auto a = sym_graph(n, 0.15, rng);
    const Matrix k0 = base_inner(oracle::gaussian(n, 6, rng));
    const auto trace = depth_scan(gcn(0.1, 1.0), a, k0, 60);
    CHECK(trace.spectral.lambda == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(trace.delta == doctest::Approx(0.5).epsilon(1e-9));
    REQUIRE(trace.trace_bound.has_value());
    CHECK(*trace.trace_bound == doctest::Approx(static_cast<double>(n) * 0.01 / 0.5 + 1.0).epsilon(1e-9));
    for (const auto& r : trace.records)
      if (r.layer >= 50) CHECK(r.trace <= *trace.trace_bound);
    CHECK(std::isnan(trace.records[9].cauchy_gap));
    CHECK(std::isfinite(trace.records[10].cauchy_gap));
  }
}

TEST_CASE("sigma_w^2 > 2 / lambda^2: scaled kernel approaches the Perron rank-one limit") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 10 + static_cast<Index>(rng() % 30);
    const auto a = sym_graph(n, 0.2, rng);
    const Matrix k0 = base_inner(oracle::gaussian(n, 5, rng));
    const auto trace = depth_scan(gcn(0.1, 2.0), a, k0, 60);
    CHECK_FALSE(trace.trace_bound.has_value());
    const auto& last = trace.records.back();
    CHECK(last.scaled_gap <= 1e-3);
    CHECK(last.top2_singular_ratio <= 1e-3);
    CHECK(last.perron_angle <= 1e-4);
  }
}

TEST_CASE("MLP fixed point: contracting regime") {
  const Matrix k0 = (Matrix(3, 3) << 1.0, 0.3, -0.2, 0.3, 2.0, 0.5, -0.2, 0.5, 0.7).finished();
  const auto limit = mlp_fixed_point(std::sqrt(0.1), 1.0, k0, 60);
  CHECK(limit.regime == MlpRegime::contracting);
  CHECK(limit.q == doctest::Approx(0.2));
  REQUIRE(limit.errors.size() == 60);
  CHECK(limit.errors.back() <= 1e-6);
  // Above the roundoff floor relative to q.
  for (std::size_t l = 1; l < limit.errors.size(); ++l) {
    if (limit.errors[l] < 1e-10) break;
    CHECK(limit.errors[l] / limit.errors[l - 1] <= 0.5 + 1e-6);
  }
}

TEST_CASE("MLP fixed point: expanding regime converges toward v v^T") {
  const auto limit = mlp_fixed_point(std::sqrt(0.1), 2.0, Matrix::Identity(4, 4), 60);
  CHECK(limit.regime == MlpRegime::expanding);
  CHECK(limit.v.isApprox(Vector::Constant(4, std::sqrt(1.1)), 1e-14));
  for (std::size_t l = 1; l < limit.errors.size(); ++l) CHECK(limit.errors[l] <= limit.errors[l - 1] + 1e-12);
  CHECK(limit.errors.back() < 0.1 * limit.errors.front());
}

TEST_CASE("MLP fixed point guards the threshold") {
  CHECK_THROWS_AS(mlp_fixed_point(0.0, std::sqrt(2.0), Matrix::Identity(2, 2), 5), PreconditionError);
  // At sigma_w^2 = 2, sigma_b = 0 the diagonal recursion is the identity map.
  Matrix k = 1.7 * Matrix::Identity(3, 3);
  for (int l = 0; l < 20; ++l) {
    k = 2.0 * relu_expectation(k);
    CHECK(k.diagonal().isApprox(Vector::Constant(3, 1.7), 1e-14));
  }
}
