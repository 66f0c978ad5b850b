// Acceptance runner: one PASS/FAIL line per criterion. Tolerances and
// protocols are fixed here; nothing is read from the environment except the
// optional Cora directory.

#include "gnngp/diagnostics.hpp"
#include "gnngp/harness.hpp"
#include "gnngp/inference.hpp"
#include "gnngp/mc.hpp"

#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace gnngp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::shared_ptr<const SparseAdjacency> sym_graph(const std::vector<Edge>& edges, Index n) {
  return std::make_shared<const SparseAdjacency>(normalize_sym(build_adjacency(edges, n, false)));
}

std::vector<Index> shuffled(Index n, std::mt19937_64& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Outcome width_limit() {
  std::mt19937_64 rng(1001);
  const Index n = 8;
  const auto a = sym_graph(oracle::random_connected_edges(n, 0.3, rng), n);
  const Matrix x = oracle::gaussian(n, 4, rng);
  McConfig cfg;
  cfg.layers = 2;
  cfg.n_samples = 200;
  cfg.hp.sigma_b = 0.1;
  cfg.hp.sigma_w = 1.0;
  const Matrix exact = gcn_exact(*a, base_inner(x), 0.1, 1.0, 2).back();
  const std::vector<int> widths{64, 256, 1024, 4096};
  std::vector<double> mean;
  double worst_at_max = 0.0;
  for (int w : widths) {
    cfg.width = w;
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      cfg.seed = seed;
      const double err = compare_covariance(sample_covariance(cfg, *a, x), exact);
      acc += err;
      if (w == widths.back()) worst_at_max = std::max(worst_at_max, err);
    }
    mean.push_back(acc / 5.0);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < mean.size(); ++i) decreasing = decreasing && mean[i] < mean[i - 1];
  std::string detail = "seed-mean errors";
  for (double m : mean) detail += " " + fmt(m);
  detail += "; worst seed at 4096 " + fmt(worst_at_max) + " (limit 0.05)";
  return {decreasing && worst_at_max <= 0.05, detail};
}

Outcome nystrom_coherence() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  std::string worst_arch;
  for (int inst = 0; inst < 10; ++inst) {
    const Index n = 8 + static_cast<Index>(rng() % 23);
    const auto raw = build_adjacency(oracle::random_connected_edges(n, 0.2, rng), n, false);
    const Matrix x = oracle::gaussian(n, n + 3, rng);
    const auto landmarks = LandmarkSet::all(n);
    const BaseKernel base;
    const auto q0 = input_factor(base, x, landmarks);
    for (auto arch : {Architecture::gcn, Architecture::gcnii, Architecture::gin, Architecture::sage}) {
      Hyperparams hp;
      hp.sigma_b = 0.1;
      const KernelProgram program(arch, 3, hp, base);
      const auto a = graph_operator(raw, arch);
      const Matrix exact = run_exact(program, a, base_kernel(base, x));
      const Matrix approx = lowrank_variant(program, a, q0, landmarks).gram();
      const double err = oracle::rel_frobenius(approx, exact);
      if (err > worst) {
        worst = err;
        worst_arch = std::string(to_string(arch));
      }
    }
  }
  return {worst <= 1e-6, "worst relative Frobenius " + fmt(worst) + " (" + worst_arch + ", limit 1e-6)"};
}

Outcome woodbury() {
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 5 + static_cast<Index>(rng() % 36);
    const Index r = 1 + static_cast<Index>(rng() % 10);
    const LowRankFactor q(oracle::gaussian(n, r, rng));
    const Matrix k = q.gram();
    const auto order = shuffled(n, rng);
    const Index n_train = std::max<Index>(1, n / 3);
    const std::vector<Index> train(order.begin(), order.begin() + n_train);
    const std::vector<Index> test(order.begin() + n_train, order.end());
    const Matrix y = oracle::gaussian(n_train, 2, rng);
    for (double eps : {1e-3, 1.0, 10.0}) {
      const Matrix lm = posterior_mean_lowrank(q, train, test, y, eps).mean;
      const Matrix em = oracle::posterior_mean_dense(k, train, test, y, eps);
      const Vector lv = posterior_variance_lowrank(q, train, test, eps);
      const Vector ev = oracle::posterior_variance_dense(k, train, test, eps);
      worst = std::max(worst, (lm - em).norm() / std::max(1.0, em.norm()));
      worst = std::max(worst, (lv - ev).norm() / std::max(1.0, ev.norm()));
    }
  }
  return {worst <= 1e-8, "50 instances x 3 nuggets, worst scaled error " + fmt(worst) + " (limit 1e-8)"};
}

Outcome universality() {
  std::mt19937_64 rng(1004);
  int failures = 0;
  double worst_ratio = INFINITY;
  for (int g = 0; g < 20; ++g) {
    const Index n = 10 + static_cast<Index>(rng() % 21);
    const auto a = sym_graph(oracle::random_connected_edges(n, 0.2, rng), n);
    const Matrix x = oracle::gaussian(n, 5, rng);
    const Matrix k3 = gcn_exact(*a, base_inner(x), 0.0, 1.0, 3).back();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(k3, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double floor = 1e-10 * k3.trace() / static_cast<double>(n);
    worst_ratio = std::min(worst_ratio, min_eig / floor);
    if (!(min_eig > floor)) ++failures;
  }
  return {failures == 0, std::to_string(20 - failures) + "/20 graphs with lambda_min(K^(3)) > 1e-10 trace/N; "
                             "smallest lambda_min / threshold " + fmt(worst_ratio)};
}

Outcome depth_limits() {
  std::mt19937_64 rng(1005);
  bool a_ok = true, b_ok = true, c_ok = true;
  double a_rho = 1.0, a_drop = 0.0, b_slack = INFINITY, c_gap = 0.0;
  for (int g = 0; g < 5; ++g) {
    const Index n = 20 + static_cast<Index>(rng() % 31);
    const auto a = sym_graph(oracle::random_connected_edges(n, 0.15, rng), n);
    const Matrix k0 = base_inner(oracle::gaussian(n, 6, rng));

    Hyperparams hp;
    hp.sigma_b = 0.0;
    hp.sigma_w = 1.0;
    const auto ta = depth_scan(KernelProgram(Architecture::gcn, 60, hp), a, k0, 60);
    // Nondecreasing up to rounding: once rho_min reaches 1 it jitters in the last ulp.
    for (std::size_t i = 1; i < ta.records.size(); ++i)
      a_drop = std::max(a_drop, ta.records[i - 1].rho_min - ta.records[i].rho_min);
    a_rho = std::min(a_rho, ta.records.back().rho_min);
    a_ok = a_ok && ta.records.back().rho_min >= 1.0 - 1e-3;

    hp.sigma_b = 0.1;
    const auto tb = depth_scan(KernelProgram(Architecture::gcn, 60, hp), a, k0, 60);
    if (!tb.trace_bound) {
      b_ok = false;
    } else {
      for (const auto& r : tb.records)
        if (r.layer >= 50) {
          b_slack = std::min(b_slack, *tb.trace_bound - r.trace);
          b_ok = b_ok && r.trace <= *tb.trace_bound;
        }
    }

    hp.sigma_w = 2.0;
    const auto tc = depth_scan(KernelProgram(Architecture::gcn, 60, hp), a, k0, 60);
    c_ok = c_ok && tc.delta > 1.0 && tc.records.back().scaled_gap <= 1e-3;
    c_gap = std::max(c_gap, tc.records.back().scaled_gap);
  }
  a_ok = a_ok && a_drop <= 1e-12;
  return {a_ok && b_ok && c_ok, std::string("(a) ") + (a_ok ? "ok" : "fail") + " min rho at 60 " + fmt(a_rho) +
                                    ", largest layer-to-layer drop " + fmt(a_drop) +
                                    "; (b) " + (b_ok ? "ok" : "fail") + " min bound slack " + fmt(b_slack) +
                                    "; (c) " + (c_ok ? "ok" : "fail") + " max rank-1 gap " + fmt(c_gap) +
                                    " (limit 1e-3)"};
}

Outcome mlp_limits() {
  std::mt19937_64 rng(1006);
  const Index n = 6;
  const Matrix k0 = base_inner(oracle::gaussian(n, 4, rng));
  const auto contracting = mlp_fixed_point(std::sqrt(0.1), 1.0, k0, 60);
  const double err_a = contracting.errors.back();
  const auto expanding = mlp_fixed_point(std::sqrt(0.1), 2.0, Matrix::Identity(n, n), 60);
  const double err_b = expanding.errors.back();
  const bool a_ok = contracting.regime == MlpRegime::contracting && err_a <= 1e-6;
  const bool b_ok = expanding.regime == MlpRegime::expanding && err_b <= 1e-4;
  return {a_ok && b_ok, std::string("(a) ") + (a_ok ? "ok" : "fail") + " max |K^(60) - 0.2| = " + fmt(err_a) +
                            " (limit 1e-6); (b) " + (b_ok ? "ok" : "fail") + " max |kappa^(60) - v v^T| = " +
                            fmt(err_b) + " (limit 1e-4)"};
}

Outcome cora(const std::string& dir) {
  if (dir.empty() || !fs::exists(fs::path(dir) / "targets.txt"))
    return {false, "Cora dataset not found (configure with GNNGP_FETCH_CORA=ON or pass --cora DIR)"};
  auto data = load_dataset(dir);
  double gcn = 0.0, rbf = 0.0;
  const int n_seeds = 5;
  std::string per_seed;
  for (int seed = 0; seed < n_seeds; ++seed) {
    data.splits = make_splits_per_class(data.targets, 20, 500, 1000, static_cast<std::uint64_t>(seed));
    InferConfig cfg;
    const double g = run_infer(data, cfg).test_score;
    cfg.arch = Architecture::rbf;
    const double r = run_infer(data, cfg).test_score;
    gcn += g / n_seeds;
    rbf += r / n_seeds;
    per_seed += " " + fmt(g) + "/" + fmt(r);
  }
  const bool ok = std::abs(gcn - 0.828) <= 0.01 && std::abs(rbf - 0.586) <= 0.02;
  return {ok, "5-split mean micro-F1 GCNGP " + fmt(gcn) + " (target 0.828 +- 0.01), RBF " + fmt(rbf) +
                  " (target 0.586 +- 0.02); per split gcn/rbf" + per_seed};
}

Outcome scaling() {
  BenchmarkConfig cfg;
  cfg.sizes = {1000, 2000, 4000, 8000};
  cfg.landmarks = 128;
  const auto res = run_benchmark(cfg);
  std::string detail = "median build seconds";
  for (double s : res.seconds) detail += " " + fmt(s);
  detail += "; log-log slope " + fmt(res.slope) + " (range [0.7, 1.3])";
  return {res.slope >= 0.7 && res.slope <= 1.3, detail};
}

Outcome map_properties() {
  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int failed = 0;
  std::string first_failure;
  auto fail = [&](const std::string& what) {
    if (failed++ == 0) first_failure = what;
  };

  std::vector<double> grid(1000);
  for (int i = 0; i < 1000; ++i) grid[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / 999.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (std::abs(correlation_map(grid[i + 1]) - correlation_map(grid[i])) > grid[i + 1] - grid[i] + 1e-15)
      fail("grid contraction at " + fmt(grid[i]));

  for (int c = 0; c < 1000; ++c) {
    const double x = unit(rng), y = unit(rng);
    if (std::abs(correlation_map(x) - correlation_map(y)) > std::abs(x - y) + 1e-15) fail("contraction");
    const double rho = std::min(x, 1.0 - 1e-6);
    if (!(correlation_map(rho) - rho > 0.0)) fail("f(rho) > rho at " + fmt(rho));

    const Index n = 2 + static_cast<Index>(rng() % 11);
    const Matrix k = oracle::random_psd(n, rng, static_cast<Index>(rng() % 3));
    const Matrix g = relu_expectation(k);
    for (Index i = 0; i < n; ++i)
      if (g(i, i) != k(i, i) / 2.0) fail("diagonal halving");
    if ((g - 0.5 * k).minCoeff() < -1e-12) fail("elementwise dominance");

    const Matrix a_dense =
        oracle::normalize_sym_dense(oracle::dense_adjacency(oracle::random_connected_edges(n, 0.3, rng), n));
    const double norm2 = Eigen::JacobiSVD<Matrix>(a_dense).singularValues()(0);
    const double lhs = (a_dense * g * a_dense.transpose()).trace();
    const double rhs = 0.5 * norm2 * norm2 * k.trace();
    if (lhs > rhs * (1.0 + 1e-12)) fail("trace contraction");
  }
  return {failed == 0, "1000 randomized cases plus a 1000-point grid, " + std::to_string(failed) + " violations" +
                           (failed ? " (first: " + first_failure + ")" : "")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gnngp acceptance criteria"};
  int only = 0;
  std::string cora_dir;
  app.add_option("--criterion", only, "run one criterion (1-9); 0 runs all")->check(CLI::Range(0, 9));
  app.add_option("--cora", cora_dir, "converted Cora dataset directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::vector<Criterion> criteria{
      {1, "width-limit convergence", 120.0, width_limit},
      {2, "Nystrom coherence", 30.0, nystrom_coherence},
      {3, "Woodbury equivalence", 10.0, woodbury},
      {4, "universality", 30.0, universality},
      {5, "depth limits", 60.0, depth_limits},
      {6, "MLP fixed point", 10.0, mlp_limits},
      {7, "Cora reproduction", 300.0, [&] { return cora(cora_dir); }},
      {8, "low-rank scaling", 300.0, scaling},
      {9, "correlation-map and ReLU-expectation properties", 10.0, map_properties},
  };

  bool all_pass = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = out.pass && in_budget;
    all_pass = all_pass && pass;
    std::printf("%s criterion %d (%s): %s; %.2f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs, c.budget_s, in_budget ? "" : " over budget");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
