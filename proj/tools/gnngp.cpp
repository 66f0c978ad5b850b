// gnngp command-line front end: infer, depth-scan, mc-verify, benchmark, make-splits.

#include "gnngp/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace gnngp;

struct ModelFlags {
  std::string arch = "gcn";
  int layers = 2;
  double sigma_b = 0.0;
  double sigma_w = 1.0;
  double sigma_w1 = 0.0;
  double sigma_w2 = 1.0;
  double alpha = 0.1;
  double lambda = 0.5;
  std::string base = "inner";
  double gamma = 1.0;

  void add(CLI::App* app) {
    app->add_option("--arch", arch, "gcn|gcnii|gin|sage|ggp|mlp|rbf")
        ->check(CLI::IsMember({"gcn", "gcnii", "gin", "sage", "ggp", "mlp", "rbf"}))
        ->capture_default_str();
    app->add_option("--layers", layers, "Number of layers L")->capture_default_str();
    app->add_option("--sigma-b", sigma_b, "Bias standard deviation")->capture_default_str();
    app->add_option("--sigma-w", sigma_w, "Weight standard deviation")->capture_default_str();
    app->add_option("--sigma-w1", sigma_w1, "GraphSAGE self weight")->capture_default_str();
    app->add_option("--sigma-w2", sigma_w2, "GraphSAGE neighbour weight")->capture_default_str();
    app->add_option("--alpha", alpha, "GCNII skip weight")->capture_default_str();
    app->add_option("--lambda", lambda, "GCNII beta schedule parameter")->capture_default_str();
    app->add_option("--base", base, "Base kernel inner|rbf|poly")
        ->check(CLI::IsMember({"inner", "rbf", "poly"}))
        ->capture_default_str();
    app->add_option("--gamma", gamma, "RBF base kernel width")->capture_default_str();
  }

  Hyperparams hyperparams() const {
    Hyperparams hp;
    hp.sigma_b = sigma_b;
    hp.sigma_w = sigma_w;
    hp.sigma_w1 = sigma_w1;
    hp.sigma_w2 = sigma_w2;
    hp.alpha = alpha;
    hp.lambda = lambda;
    return hp;
  }

  BaseKernel base_kernel() const {
    BaseKernel b;
    b.kind = base == "rbf" ? BaseKernel::Kind::rbf
             : base == "poly" ? BaseKernel::Kind::poly
                              : BaseKernel::Kind::inner;
    b.gamma = gamma;
    return b;
  }
};

struct InferFlags {
  std::string path = "exact";
  std::optional<Index> landmarks;
  std::optional<double> landmark_frac;
  std::string landmark_pool = "train";
  std::uint64_t seed = 0;
  std::optional<double> nugget;
  std::vector<double> grid;
  std::optional<Index> pca;
  bool center = false;

  void add(CLI::App* app) {
    app->add_option("--path", path, "exact|lowrank")
        ->check(CLI::IsMember({"exact", "lowrank"}))
        ->capture_default_str();
    auto* lm = app->add_option("--landmarks", landmarks, "Landmark count (default: all training nodes)");
    auto* lf = app->add_option("--landmark-frac", landmark_frac, "Landmarks as a fraction of the training set");
    lm->excludes(lf);
    app->add_option("--landmark-pool", landmark_pool, "Sample landmarks from train|all nodes")
        ->check(CLI::IsMember({"train", "all"}))
        ->capture_default_str();
    app->add_option("--seed", seed, "Seed for landmark sampling")->capture_default_str();
    auto* ng = app->add_option("--nugget", nugget, "Fixed nugget");
    auto* gr = app->add_option("--nugget-grid", grid, "LO,HI,POINTS log grid (default 1e-3,1e1,13)")
                   ->delimiter(',')
                   ->expected(3);
    ng->excludes(gr);
    app->add_option("--pca", pca, "Reduce features to D principal components");
    app->add_flag("--center", center, "Center feature columns");
  }

  void apply(InferConfig& cfg) const {
    cfg.lowrank = path == "lowrank";
    cfg.landmarks = landmarks;
    cfg.landmark_frac = landmark_frac;
    cfg.landmarks_from_all = landmark_pool == "all";
    cfg.seed = seed;
    cfg.nugget = nugget;
    if (!grid.empty()) {
      cfg.grid_lo = grid[0];
      cfg.grid_hi = grid[1];
      cfg.grid_points = static_cast<int>(grid[2]);
      if (static_cast<double>(cfg.grid_points) != grid[2])
        throw InputError("--nugget-grid POINTS must be an integer");
    }
    cfg.pca = pca;
    cfg.center = center;
  }
};

void emit(const Report& report, const std::string& out) {
  if (out.empty()) {
    report.write(std::cout);
  } else {
    report.write(out);
    std::cerr << "report written to " << out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infinite-width graph neural network kernels and GP inference"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file with one [section] per command");

  std::string dataset;
  std::string out;

  ModelFlags model;
  InferFlags infer_flags;
  auto* infer = app.add_subcommand("infer", "GP posterior inference on a dataset");
  infer->add_option("--dataset", dataset, "Dataset directory")->required();
  model.add(infer);
  infer_flags.add(infer);
  infer->add_option("--out", out, "Report file (default: stdout)");

  ModelFlags scan_model;
  scan_model.layers = 60;
  int metrics_depth = 0;
  InferFlags scan_infer;
  auto* scan = app.add_subcommand("depth-scan", "Per-layer depth-limit diagnostics");
  scan->add_option("--dataset", dataset, "Dataset directory")->required();
  scan_model.add(scan);
  scan_infer.add(scan);
  scan->add_option("--metrics-depth", metrics_depth, "Also run inference for depths 1..D")
      ->capture_default_str();
  scan->add_option("--out", out, "Report file (default: stdout)");

  ModelFlags mc_model;
  std::vector<int> widths{64, 256, 1024, 4096};
  int samples = 200;
  int seeds = 1;
  std::uint64_t mc_seed = 0;
  std::string sampler = "conditional";
  auto* mc = app.add_subcommand("mc-verify", "Compare finite-width networks to the analytic kernel");
  mc->add_option("--dataset", dataset, "Dataset directory")->required();
  mc_model.add(mc);
  mc->add_option("--widths", widths, "Comma-separated hidden widths")->delimiter(',')->capture_default_str();
  mc->add_option("--samples", samples, "Weight draws per width")->capture_default_str();
  mc->add_option("--seeds", seeds, "Independent repetitions averaged per width")->capture_default_str();
  mc->add_option("--seed", mc_seed, "Base seed")->capture_default_str();
  mc->add_option("--sampler", sampler, "conditional|explicit")
      ->check(CLI::IsMember({"conditional", "explicit"}))
      ->capture_default_str();
  mc->add_option("--out", out, "Report file (default: stdout)");

  ModelFlags bench_model;
  BenchmarkConfig bench_cfg;
  std::vector<Index> sizes{1000, 2000, 4000, 8000};
  auto* bench = app.add_subcommand("benchmark", "Low-rank kernel build time against graph size");
  bench_model.add(bench);
  bench->add_option("--sizes", sizes, "Comma-separated node counts")->delimiter(',')->capture_default_str();
  bench->add_option("--landmarks", bench_cfg.landmarks, "Landmark count N_a")->capture_default_str();
  bench->add_option("--avg-degree", bench_cfg.avg_degree, "Mean degree of the synthetic graphs")
      ->capture_default_str();
  bench->add_option("--features", bench_cfg.n_features, "Feature dimension")->capture_default_str();
  bench->add_option("--repeats", bench_cfg.repeats, "Timed repetitions (median reported)")
      ->capture_default_str();
  bench->add_option("--seed", bench_cfg.seed, "Seed")->capture_default_str();
  bench->add_option("--landmark-sweep", bench_cfg.landmark_sweep,
                    "Landmark counts timed at the largest size")
      ->delimiter(',');
  bench->add_option("--out", out, "Report file (default: stdout)");

  std::string mode = "per-class";
  Index per_class = 20;
  Index n_val = 500;
  Index n_test = 1000;
  std::vector<double> ratios{0.48, 0.32, 0.20};
  std::uint64_t split_seed = 0;
  auto* splits = app.add_subcommand("make-splits", "Write a seeded splits.json");
  splits->add_option("--dataset", dataset, "Dataset directory")->required();
  splits->add_option("--mode", mode, "per-class|ratio")
      ->check(CLI::IsMember({"per-class", "ratio"}))
      ->capture_default_str();
  splits->add_option("--per-class", per_class, "Training nodes per class")->capture_default_str();
  splits->add_option("--val", n_val, "Validation nodes")->capture_default_str();
  splits->add_option("--test", n_test, "Test nodes")->capture_default_str();
  splits->add_option("--ratios", ratios, "TRAIN,VAL,TEST fractions")->delimiter(',')->expected(3);
  splits->add_option("--seed", split_seed, "Seed")->capture_default_str();
  splits->add_option("--out", out, "Output file (default: DATASET/splits.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the input-error exit code; --help still exits 0.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*infer) {
      const Dataset data = load_dataset(dataset);
      InferConfig cfg;
      cfg.arch = parse_architecture(model.arch);
      cfg.layers = model.layers;
      cfg.hp = model.hyperparams();
      cfg.base = model.base_kernel();
      infer_flags.apply(cfg);
      const InferResult res = run_infer(data, cfg);
      emit(res.report, out);
      std::cerr << res.report.get("metrics", "metric") << " test=" << res.report.get("metrics", "test")
                << " nugget=" << res.report.get("selection", "nugget") << '\n';
    } else if (*scan) {
      const Dataset data = load_dataset(dataset);
      DepthScanConfig cfg;
      cfg.arch = parse_architecture(scan_model.arch);
      cfg.hp = scan_model.hyperparams();
      cfg.base = scan_model.base_kernel();
      cfg.l_max = scan_model.layers;
      cfg.metrics_depth = metrics_depth;
      scan_infer.apply(cfg.infer);
      emit(run_depth_scan(data, cfg), out);
    } else if (*mc) {
      const Dataset data = load_dataset(dataset);
      McVerifyConfig cfg;
      cfg.mc.architecture = parse_architecture(mc_model.arch);
      cfg.mc.layers = mc_model.layers;
      cfg.mc.hp = mc_model.hyperparams();
      cfg.mc.n_samples = samples;
      cfg.mc.seed = mc_seed;
      cfg.mc.sampler = sampler == "explicit" ? McSampler::explicit_weights : McSampler::conditional;
      cfg.widths = widths;
      cfg.seeds = seeds;
      const McVerifyResult res = run_mc_verify(data, cfg);
      emit(res.report, out);
      std::cerr << "error_at_max_width=" << res.report.get("result", "error_at_max_width") << '\n';
    } else if (*bench) {
      bench_cfg.arch = parse_architecture(bench_model.arch);
      bench_cfg.layers = bench_model.layers;
      bench_cfg.hp = bench_model.hyperparams();
      bench_cfg.sizes = sizes;
      const BenchmarkResult res = run_benchmark(bench_cfg);
      emit(res.report, out);
      std::cerr << "loglog_slope=" << res.report.get("fit", "loglog_slope") << '\n';
    } else if (*splits) {
      const Dataset data = load_dataset(dataset);
      SplitIndices s;
      if (mode == "ratio") {
        s = make_splits_ratio(data.n_nodes(), ratios[0], ratios[1], ratios[2], split_seed);
      } else {
        s = make_splits_per_class(data.targets, per_class, n_val, n_test, split_seed);
      }
      const std::string target = out.empty() ? (std::filesystem::path(dataset) / "splits.json").string() : out;
      write_splits(target, s);
      std::cerr << "wrote " << target << " (train " << s.train.size() << ", val " << s.val.size()
                << ", test " << s.test.size() << ")\n";
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}
