#include "gnngp/harness.hpp"

#include "gnngp/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gnngp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) { return format_double(v); }

std::string_view base_name(BaseKernel::Kind kind) {
  switch (kind) {
    case BaseKernel::Kind::inner: return "inner";
    case BaseKernel::Kind::rbf: return "rbf";
    case BaseKernel::Kind::poly: return "poly";
  }
  return "unknown";
}

void describe_hyperparams(Report& r, Architecture arch, const Hyperparams& hp) {
  switch (arch) {
    case Architecture::gcnii:
      r.set("run", "sigma_w", hp.sigma_w);
      r.set("run", "alpha", hp.alpha);
      r.set("run", "lambda", hp.lambda);
      break;
    case Architecture::sage:
      r.set("run", "sigma_w1", hp.sigma_w1);
      r.set("run", "sigma_w2", hp.sigma_w2);
      break;
    case Architecture::ggp:
    case Architecture::rbf:
      break;
    default:
      r.set("run", "sigma_b", hp.sigma_b);
      r.set("run", "sigma_w", hp.sigma_w);
  }
}

std::string truth_string(const Targets& t, Index node) {
  return t.task == Task::classification ? std::to_string(t.labels[static_cast<std::size_t>(node)])
                                        : fmt(t.values(node));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Matrix preprocess(const Matrix& features, const InferConfig& cfg) {
  Matrix x = cfg.center ? center_columns(features) : features;
  if (cfg.pca) x = pca_reduce(x, *cfg.pca, false);
  return x;
}

Index landmark_count(const InferConfig& cfg, Index n_pool) {
  if (cfg.landmarks && cfg.landmark_frac)
    throw InputError("give either a landmark count or a landmark fraction, not both");
  Index count = n_pool;
  if (cfg.landmarks) count = *cfg.landmarks;
  if (cfg.landmark_frac) {
    if (!(*cfg.landmark_frac > 0.0 && *cfg.landmark_frac <= 1.0))
      throw InputError("landmark fraction must lie in (0, 1]");
    count = std::max<Index>(1, static_cast<Index>(std::llround(*cfg.landmark_frac * n_pool)));
  }
  if (count < 1 || count > n_pool)
    throw InputError("landmark count " + std::to_string(count) + " must lie in [1, " +
                     std::to_string(n_pool) + "] (size of the landmark pool)");
  return count;
}

}  // namespace

std::shared_ptr<const SparseAdjacency> graph_operator(const SparseAdjacency& raw, Architecture arch) {
  switch (graph_normalization(arch)) {
    case Normalization::symmetric: return std::make_shared<const SparseAdjacency>(normalize_sym(raw));
    case Normalization::row: return std::make_shared<const SparseAdjacency>(normalize_row(raw));
    case Normalization::none: return nullptr;
  }
  return nullptr;
}

std::vector<double> default_rbf_gammas() { return nugget_grid(1e-2, 1e2, 9); }

InferResult run_infer(const Dataset& data, const InferConfig& cfg) {
  data.validate();
  const auto& split = data.splits;
  if (split.train.empty()) throw InputError("run_infer: training split is empty");
  if (!cfg.nugget && split.val.empty())
    throw InputError("run_infer: nugget search needs a validation split");
  const auto total_start = Clock::now();

  InferResult res;
  Report& r = res.report;
  r.set("run", "command", "infer");
  r.set("run", "dataset", data.name);
  r.set("run", "arch", std::string(to_string(cfg.arch)));
  r.set("run", "path", cfg.lowrank ? "lowrank" : "exact");
  const KernelProgram program(cfg.arch, cfg.layers, cfg.hp, cfg.base);
  r.set("run", "layers", program.depth());
  describe_hyperparams(r, cfg.arch, cfg.hp);
  r.set("run", "base", std::string(base_name(program.base().kind)));
  r.set("run", "task", data.targets.task == Task::classification ? "classification" : "regression");
  r.set("run", "n_nodes", static_cast<long long>(data.n_nodes()));
  r.set("run", "n_edges", static_cast<long long>(data.graph.n_edges() / 2));

  std::vector<Index> pool = split.train;
  if (cfg.landmarks_from_all) {
    pool.resize(static_cast<std::size_t>(data.n_nodes()));
    std::iota(pool.begin(), pool.end(), Index{0});
  }
  Index n_landmarks = 0;
  if (cfg.lowrank) {
    n_landmarks = landmark_count(cfg, static_cast<Index>(pool.size()));
    if (cfg.pca && *cfg.pca >= n_landmarks)
      throw InputError("PCA dimension " + std::to_string(*cfg.pca) +
                       " must be smaller than the landmark count " + std::to_string(n_landmarks));
  }
  const Matrix x = preprocess(data.features, cfg);
  r.set("run", "n_features", static_cast<long long>(x.cols()));
  r.set("run", "n_train", static_cast<long long>(split.train.size()));
  r.set("run", "n_val", static_cast<long long>(split.val.size()));
  r.set("run", "n_test", static_cast<long long>(split.test.size()));
  r.set("run", "seed", static_cast<long long>(cfg.seed));

  const auto grid =
      cfg.nugget ? std::vector<double>{*cfg.nugget} : nugget_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);
  const bool is_rbf = cfg.arch == Architecture::rbf;
  const std::vector<double> gammas = is_rbf ? cfg.rbf_gammas : std::vector<double>{program.base().gamma};
  if (gammas.empty()) throw InputError("run_infer: empty gamma grid");

  const auto a = graph_operator(data.graph, cfg.arch);
  std::optional<LandmarkSet> landmarks;
  if (cfg.lowrank) {
    landmarks = LandmarkSet::sample(pool, n_landmarks, cfg.seed, data.n_nodes());
    r.set("run", "landmarks", static_cast<long long>(n_landmarks));
    r.set("run", "landmark_pool", cfg.landmarks_from_all ? "all" : "train");
  }

  double build_s = 0.0;
  double search_s = 0.0;
  std::optional<DenseKernel> best_k;
  std::optional<LowRankFactor> best_q;
  NuggetSearch best;
  best.score = -std::numeric_limits<double>::infinity();
  double best_gamma = gammas.front();
  std::vector<std::vector<std::string>> search_rows;
  std::optional<Matrix> d2;

  for (double gamma : gammas) {
    BaseKernel base = program.base();
    base.gamma = gamma;
    const KernelProgram prog(cfg.arch, cfg.layers, cfg.hp, base);
    auto t0 = Clock::now();
    std::optional<DenseKernel> k;
    std::optional<LowRankFactor> q;
    if (cfg.lowrank) {
      q = lowrank_variant(prog, a, input_factor(prog.base(), x, *landmarks), *landmarks);
    } else if (is_rbf) {
      if (!d2) d2 = squared_distances(x);
      k = rbf_from_squared_distances(*d2, gamma);
    } else {
      k = run_exact(prog, a, base_kernel(prog.base(), x));
    }
    build_s += seconds_since(t0);

    t0 = Clock::now();
    NuggetSearch s;
    if (cfg.nugget && split.val.empty()) {
      s.nugget = *cfg.nugget;
      s.grid = grid;
      s.score = std::numeric_limits<double>::quiet_NaN();
    } else {
      s = k ? select_nugget(*k, split, data.targets, grid) : select_nugget(*q, split, data.targets, grid);
    }
    search_s += seconds_since(t0);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      std::vector<std::string> row;
      if (is_rbf) row.push_back(fmt(gamma));
      row.push_back(fmt(s.grid[i]));
      row.push_back(i < s.scores.size() ? fmt(s.scores[i]) : "nan");
      search_rows.push_back(std::move(row));
    }
    const bool first = !best_k && !best_q;
    if (first || s.score > best.score) {
      best = s;
      best_gamma = gamma;
      best_k = std::move(k);
      best_q = std::move(q);
    }
  }
  if (best_q) r.set("run", "rank", static_cast<long long>(best_q->rank()));

  const Matrix y = data.targets.encode(split.train);
  auto t0 = Clock::now();
  auto predict = [&](std::span<const Index> rows) {
    return best_k ? posterior_mean_exact(*best_k, split.train, rows, y, best.nugget).mean
                  : posterior_mean_lowrank(*best_q, split.train, rows, y, best.nugget).mean;
  };
  res.test_mean = predict(split.test);
  const double solve_s = seconds_since(t0);

  t0 = Clock::now();
  res.test_variance = best_k ? posterior_variance_exact(*best_k, split.train, split.test, best.nugget)
                             : posterior_variance_lowrank(*best_q, split.train, split.test, best.nugget);
  const Matrix train_mean = predict(split.train);
  const Matrix val_mean = split.val.empty() ? Matrix() : predict(split.val);
  const double predict_s = seconds_since(t0);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.nugget = best.nugget;
  res.gamma = best_gamma;
  res.train_score = data.targets.score(train_mean, split.train);
  res.val_score = split.val.empty() ? nan : data.targets.score(val_mean, split.val);
  res.test_score = split.test.empty() ? nan : data.targets.score(res.test_mean, split.test);

  r.set("selection", "nugget", best.nugget);
  if (is_rbf) r.set("selection", "gamma", best_gamma);
  r.set("selection", "val_score", best.score);
  if (best.warning) r.set("selection", "warning", *best.warning);

  r.set("metrics", "metric", data.targets.task == Task::classification ? "micro_f1" : "r2");
  r.set("metrics", "train", res.train_score);
  r.set("metrics", "val", res.val_score);
  r.set("metrics", "test", res.test_score);

  r.set("timing", "kernel_build_s", build_s);
  r.set("timing", "nugget_search_s", search_s);
  r.set("timing", "solve_s", solve_s);
  r.set("timing", "predict_s", predict_s);
  r.set("timing", "total_s", seconds_since(total_start));

  if (is_rbf) r.add_table("nugget_search", {"gamma", "nugget", "val_score"});
  else r.add_table("nugget_search", {"nugget", "val_score"});
  for (auto& row : search_rows) r.add_row("nugget_search", std::move(row));

  const bool cls = data.targets.task == Task::classification;
  const std::vector<int> labels = cls && res.test_mean.rows() > 0 ? classify_onehot(res.test_mean)
                                                                  : std::vector<int>{};
  r.add_table("predictions", {"node", "truth", "prediction", "variance"});
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const Index node = split.test[i];
    const auto ii = static_cast<Index>(i);
    r.add_row("predictions", {std::to_string(node), truth_string(data.targets, node),
                              cls ? std::to_string(labels[i]) : fmt(res.test_mean(ii, 0)),
                              fmt(std::max(0.0, res.test_variance(ii)))});
  }
  return res;
}

Report run_depth_scan(const Dataset& data, const DepthScanConfig& cfg) {
  data.validate();
  Report r;
  r.set("run", "command", "depth-scan");
  r.set("run", "dataset", data.name);
  r.set("run", "arch", std::string(to_string(cfg.arch)));
  r.set("run", "l_max", cfg.l_max);
  describe_hyperparams(r, cfg.arch, cfg.hp);
  r.set("run", "n_nodes", static_cast<long long>(data.n_nodes()));

  const DenseKernel k0 = base_kernel(cfg.base, data.features);
  if (cfg.arch == Architecture::mlp) {
    const MlpLimit lim = mlp_fixed_point(cfg.hp.sigma_b, cfg.hp.sigma_w, k0, cfg.l_max);
    r.set("limit", "regime", lim.regime == MlpRegime::contracting ? "contracting" : "expanding");
    if (lim.regime == MlpRegime::contracting) r.set("limit", "q", lim.q);
    r.set("limit", "final_error", lim.errors.back());
    r.add_table("mlp_limit", {"layer", "error", "rho_min", "trace"});
    for (std::size_t i = 0; i < lim.records.size(); ++i) {
      const auto& rec = lim.records[i];
      r.add_row("mlp_limit", {std::to_string(rec.layer), fmt(lim.errors[i]), fmt(rec.rho_min), fmt(rec.trace)});
    }
  } else if (data.n_nodes() > kDiagnosticsMaxNodes) {
    r.set("diagnostics", "skipped",
          "N exceeds the " + std::to_string(kDiagnosticsMaxNodes) + "-node diagnostics guard");
  } else {
    const auto a = graph_operator(data.graph, cfg.arch);
    const KernelProgram program(cfg.arch, cfg.l_max, cfg.hp, cfg.base);
    const DepthTrace trace = depth_scan(program, a, k0, cfg.l_max);
    r.set("spectral", "lambda", trace.spectral.lambda);
    r.set("spectral", "iterations", static_cast<long long>(trace.spectral.iterations));
    r.set("spectral", "delta", trace.delta);
    if (trace.trace_bound) r.set("spectral", "trace_bound", *trace.trace_bound);
    r.add_table("depth", {"layer", "rho_min", "trace", "top2_singular_ratio", "scaled_gap",
                          "perron_angle", "cauchy_gap"});
    for (const auto& rec : trace.records)
      r.add_row("depth", {std::to_string(rec.layer), fmt(rec.rho_min), fmt(rec.trace),
                          fmt(rec.top2_singular_ratio), fmt(rec.scaled_gap), fmt(rec.perron_angle),
                          fmt(rec.cauchy_gap)});
  }

  if (cfg.metrics_depth > 0) {
    r.add_table("depth_metrics", {"layers", "nugget", "val", "test"});
    for (int l = 1; l <= cfg.metrics_depth; ++l) {
      InferConfig ic = cfg.infer;
      ic.arch = cfg.arch;
      ic.hp = cfg.hp;
      ic.base = cfg.base;
      ic.layers = l;
      const InferResult ir = run_infer(data, ic);
      r.add_row("depth_metrics", {std::to_string(l), fmt(ir.nugget), fmt(ir.val_score), fmt(ir.test_score)});
    }
  }
  return r;
}

McVerifyResult run_mc_verify(const Dataset& data, const McVerifyConfig& cfg) {
  data.validate();
  if (cfg.widths.empty()) throw InputError("run_mc_verify: no widths");
  if (cfg.seeds < 1) throw InputError("run_mc_verify: need at least one seed");
  McVerifyResult res;
  Report& r = res.report;
  r.set("run", "command", "mc-verify");
  r.set("run", "dataset", data.name);
  r.set("run", "arch", std::string(to_string(cfg.mc.architecture)));
  r.set("run", "layers", cfg.mc.layers);
  describe_hyperparams(r, cfg.mc.architecture, cfg.mc.hp);
  r.set("run", "n_samples", cfg.mc.n_samples);
  r.set("run", "seeds", cfg.seeds);
  r.set("run", "seed", static_cast<long long>(cfg.mc.seed));
  r.set("run", "sampler", cfg.mc.sampler == McSampler::conditional ? "conditional" : "explicit");
  if (cfg.mc.architecture == Architecture::gcnii && cfg.mc.layers > 2)
    r.set("run", "warning",
          "gcnii beyond two layers: the identity path carries non-Gaussian coordinates, so the "
          "finite network does not converge to the gcnii kernel");

  const auto a = graph_operator(data.graph, cfg.mc.architecture);
  const auto identity = std::make_shared<const SparseAdjacency>(
      normalize_sym(build_adjacency({}, data.n_nodes(), false)));
  const auto& op = a ? a : identity;
  const DenseKernel analytic = analytic_covariance(cfg.mc, op, data.features);

  r.add_table("width_sweep", {"width", "mean_error", "min_error", "max_error"});
  const auto start = Clock::now();
  for (int w : cfg.widths) {
    std::vector<double> errs;
    for (int s = 0; s < cfg.seeds; ++s) {
      McConfig mc = cfg.mc;
      mc.width = w;
      mc.seed = cfg.mc.seed + static_cast<std::uint64_t>(s);
      errs.push_back(compare_covariance(sample_covariance(mc, *op, data.features), analytic));
    }
    const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
    res.mean_errors.push_back(mean);
    r.add_row("width_sweep", {std::to_string(w), fmt(mean), fmt(*std::min_element(errs.begin(), errs.end())),
                              fmt(*std::max_element(errs.begin(), errs.end()))});
  }
  std::vector<double> widths(cfg.widths.begin(), cfg.widths.end());
  res.slope = cfg.widths.size() > 1 ? loglog_slope(widths, res.mean_errors)
                                    : std::numeric_limits<double>::quiet_NaN();
  bool decreasing = true;
  for (std::size_t i = 1; i < res.mean_errors.size(); ++i)
    decreasing = decreasing && res.mean_errors[i] < res.mean_errors[i - 1];
  r.set("result", "error_at_max_width", res.mean_errors.back());
  r.set("result", "loglog_slope", res.slope);
  r.set("result", "strictly_decreasing", decreasing ? "true" : "false");
  r.set("timing", "sampling_s", seconds_since(start));
  return res;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("loglog_slope: need matching series of length >= 2");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InputError("loglog_slope: x values are all equal");
  return sxy / sxx;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.sizes.size() < 2) throw InputError("run_benchmark: need at least two sizes");
  if (cfg.repeats < 1) throw InputError("run_benchmark: repeats must be positive");
  BenchmarkResult res;
  Report& r = res.report;
  r.set("run", "command", "benchmark");
  r.set("run", "arch", std::string(to_string(cfg.arch)));
  r.set("run", "layers", cfg.layers);
  describe_hyperparams(r, cfg.arch, cfg.hp);
  r.set("run", "landmarks", static_cast<long long>(cfg.landmarks));
  r.set("run", "avg_degree", cfg.avg_degree);
  r.set("run", "n_features", static_cast<long long>(cfg.n_features));
  r.set("run", "repeats", cfg.repeats);
  r.set("run", "seed", static_cast<long long>(cfg.seed));

  const KernelProgram program(cfg.arch, cfg.layers, cfg.hp);
  auto time_build = [&](const Dataset& d, Index n_landmarks, Index& rank) {
    const auto a = graph_operator(d.graph, cfg.arch);
    std::vector<Index> pool(static_cast<std::size_t>(d.n_nodes()));
    std::iota(pool.begin(), pool.end(), Index{0});
    const LandmarkSet lm = LandmarkSet::sample(pool, n_landmarks, cfg.seed, d.n_nodes());
    std::vector<double> times;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      const auto t0 = Clock::now();
      const LowRankFactor q = lowrank_variant(program, a, input_factor(program.base(), d.features, lm), lm);
      times.push_back(seconds_since(t0));
      rank = q.rank();
    }
    return median(times);
  };

  r.add_table("scaling", {"n_nodes", "stored_nonzeros", "m_plus_n", "build_s", "rank"});
  for (Index n : cfg.sizes) {
    SyntheticSpec spec;
    spec.n_nodes = n;
    spec.avg_degree = cfg.avg_degree;
    spec.n_features = cfg.n_features;
    spec.seed = cfg.seed;
    const Dataset d = make_synthetic(spec);
    Index rank = 0;
    const double t = time_build(d, std::min(cfg.landmarks, n), rank);
    // M counts the stored nonzeros of the normalized operator (edges both ways plus self-loops).
    const Index m = d.graph.n_edges() + n;
    res.m_plus_n.push_back(static_cast<double>(m + n));
    res.seconds.push_back(t);
    r.add_row("scaling", {std::to_string(n), std::to_string(m), std::to_string(m + n), fmt(t),
                          std::to_string(rank)});
  }
  res.slope = loglog_slope(res.m_plus_n, res.seconds);
  r.set("fit", "loglog_slope", res.slope);

  if (!cfg.landmark_sweep.empty()) {
    SyntheticSpec spec;
    spec.n_nodes = cfg.sizes.back();
    spec.avg_degree = cfg.avg_degree;
    spec.n_features = cfg.n_features;
    spec.seed = cfg.seed;
    const Dataset d = make_synthetic(spec);
    r.add_table("landmark_sweep", {"landmarks", "build_s", "rank"});
    for (Index na : cfg.landmark_sweep) {
      Index rank = 0;
      const double t = time_build(d, na, rank);
      r.add_row("landmark_sweep", {std::to_string(na), fmt(t), std::to_string(rank)});
    }
  }
  return res;
}

}  // namespace gnngp
