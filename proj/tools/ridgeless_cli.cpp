#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "output.hpp"
#include "ridgeless/ridgeless.hpp"

namespace {

using namespace ridgeless;
using ridgeless::cli::fmt;
using ridgeless::cli::RunWriter;
using json = nlohmann::json;

struct Options {
  Index n = 64;
  std::optional<Index> p;
  double rho = 0.1;
  double alpha = 10.0;
  double sigma2 = 1.0;
  Index n_rep = 100;
  std::optional<std::uint64_t> seed;
  double lambda_min = 1e-2;
  double lambda_max = 1e5;
  std::size_t lambda_steps = 61;
  std::optional<double> neg_lambda;
  std::optional<std::size_t> neg_steps;
  std::string out_dir;
  unsigned threads = default_threads();
  bool check = false;

  std::vector<Index> n_grid{10, 25, 50, 75, 100};
  std::vector<Index> p_grid;
  Index q_max = 400;
  Index q_step = 20;
  std::string variance_mode = "both";
  double variance = 1.0;

  std::string mnist_images, mnist_labels, mnist_train_images, mnist_train_labels;
  Index rff_features = 1000;
  double rff_sigma = 0.1;
  double smin_threshold = 100.0;

  std::string csv_path, response;
  Index k = 10;
  bool no_standardize = false;
  double lambda = 0.0;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("RIDGELESS_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidInputError("RIDGELESS_SEED is not a non-negative integer: '" + std::string(env) + "'");
  }
  return 1;
}

SpikedSpec spec_of(const Options& o, Index p) {
  SpikedSpec s{p, o.rho, o.alpha, o.sigma2};
  s.validate();
  return s;
}

std::vector<double> positive_grid(const Options& o) {
  std::vector<double> g{0.0};
  const auto pos = log_grid(o.lambda_min, o.lambda_max, o.lambda_steps);
  g.insert(g.end(), pos.begin(), pos.end());
  return g;
}

/// Zero and the positive grid, preceded by linear negatives when a lower end is given.
std::vector<double> curve_grid(const Options& o, std::optional<double> lower, std::size_t default_steps = 40) {
  std::vector<double> g;
  if (lower) {
    if (!(*lower < 0.0)) throw InvalidInputError("--neg-lambda must be negative");
    const std::size_t steps = o.neg_steps.value_or(default_steps);
    for (std::size_t i = 0; i < steps; ++i)
      g.push_back(*lower * (1.0 - static_cast<double>(i) / static_cast<double>(steps)));
  }
  const auto pos = positive_grid(o);
  g.insert(g.end(), pos.begin(), pos.end());
  return g;
}

LambdaSearch search_of(const Options& o) {
  LambdaSearch s;
  s.lower = o.neg_lambda;
  s.negative_points = o.neg_steps.value_or(40);
  s.positive_min = o.lambda_min;
  s.upper = o.lambda_max;
  s.positive_points = o.lambda_steps;
  return s;
}

json common_params(const Options& o) {
  return {{"n", o.n},
          {"rho", o.rho},
          {"alpha", o.alpha},
          {"sigma2", o.sigma2},
          {"n_rep", o.n_rep},
          {"lambda_min", o.lambda_min},
          {"lambda_max", o.lambda_max},
          {"lambda_steps", o.lambda_steps},
          {"neg_lambda", o.neg_lambda ? json(*o.neg_lambda) : json(nullptr)},
          {"neg_steps", o.neg_steps ? json(*o.neg_steps) : json(nullptr)},
          {"threads", o.threads}};
}

void warn_boundary(const std::string& what, Index count) {
  if (count > 0) std::cerr << "warning: " << what << ": " << count << " lambda_opt value(s) at the search boundary\n";
}

std::string tag(double v) {
  std::string s = fmt(v);
  for (auto& c : s)
    if (c == '.') c = 'p';
  return s;
}

// ---------------------------------------------------------------------------

json run_fig2(const Options& o, RunWriter& w, std::uint64_t seed) {
  json params = common_params(o);
  if (o.p) {
    const auto reps = spiked_replicates(spec_of(o, *o.p), o.n, o.n_rep, seed, o.threads);
    w.write_curve("fig2_p" + std::to_string(*o.p) + ".csv", "curve", reps.curve(curve_grid(o, o.neg_lambda)));
    params["p"] = *o.p;
    return params;
  }

  const std::vector<std::pair<Index, std::string>> panels{{50, "a"}, {75, "b"}, {150, "c"}, {1000, "d"}};
  for (const auto& [p, panel] : panels) {
    const auto reps = spiked_replicates(spec_of(o, p), o.n, o.n_rep, seed, o.threads);
    w.write_curve("fig2" + panel + "_p" + std::to_string(p) + ".csv", panel, reps.curve(curve_grid(o, o.neg_lambda)));
  }

  const auto p_grid = o.p_grid.empty()
                          ? std::vector<Index>{10,  20,  30,  40,  50,  55,  59,  60,  62,  64,  66,  68,  69,  70, 75,
                                               80,  90,  100, 125, 150, 200, 300, 400, 500, 600, 700, 800, 900, 1000}
                          : o.p_grid;
  const auto rows = dimensionality_sweep(spec_of(o, 1), p_grid, o.n, o.n_rep, seed, search_of(o), o.threads);
  std::vector<std::vector<std::string>> cells;
  Index hits = 0;
  for (const auto& r : rows) {
    cells.push_back({fmt(r.p), fmt(r.risk_min_norm), fmt(r.std_err), fmt(r.risk_opt), fmt(r.lambda_opt),
                     fmt(r.boundary_hit)});
    hits += r.boundary_hit;
  }
  w.write_csv("fig2ef_dimensionality.csv", "dimensionality", "ef",
              {"p", "risk_min_norm", "std_err", "risk_opt", "lambda_opt", "boundary_hit"}, cells);
  warn_boundary("fig2 dimensionality sweep", hits);

  const auto reps = spiked_replicates(spec_of(o, 1000), o.n, o.n_rep, seed, o.threads);
  w.write_curve("fig2g_p1000_negative.csv", "g", reps.curve(search_grid(reps, search_of(o))));
  params["p_grid"] = p_grid;
  return params;
}

json run_fig3(const Options& o, RunWriter& w, std::uint64_t seed) {
  const auto p_grid =
      o.p_grid.empty() ? std::vector<Index>{20, 50, 100, 200, 300, 500, 700, 1000, 1500, 2000} : o.p_grid;
  const auto search = search_of(o);
  auto write = [&](const std::string& name, const std::string& panel, double rho) {
    SpikedSpec base = spec_of(o, 1);
    base.rho = rho;
    const auto cells = heatmap_lambda_opt(o.n_grid, p_grid, base, o.n_rep, seed, search, o.threads);
    std::vector<std::vector<std::string>> rows;
    Index hits = 0;
    for (const auto& c : cells) {
      rows.push_back({fmt(c.n), fmt(c.p), fmt(c.lambda_opt), fmt(c.boundary_hit)});
      hits += c.boundary_hit;
    }
    w.write_csv(name, "heatmap", panel, {"n", "p", "lambda_opt", "boundary_hit"}, rows);
    warn_boundary("fig3 panel " + panel, hits);
  };
  write("fig3a_rho0.csv", "a", 0.0);
  write("fig3b_rho" + tag(o.rho) + ".csv", "b", o.rho);
  json params = common_params(o);
  params["n_grid"] = o.n_grid;
  params["p_grid"] = p_grid;
  return params;
}

json run_fig4(const Options& o, RunWriter& w, std::uint64_t seed) {
  if (o.variance_mode != "both" && o.variance_mode != "adaptive" && o.variance_mode != "fixed")
    throw InvalidInputError("--variance-mode must be adaptive, fixed or both");
  if (o.q_step < 1 || o.q_max < 0) throw InvalidInputError("--q-step must be >= 1 and --q-max >= 0");
  const Index p = o.p.value_or(50);
  const auto reps = spiked_replicates(spec_of(o, p), o.n, o.n_rep, seed, o.threads);
  w.write_curve("fig4a_p" + std::to_string(p) + ".csv", "a", reps.curve(curve_grid(o, o.neg_lambda)));

  AugmentationSweepConfig cfg;
  cfg.spec = spec_of(o, p);
  cfg.n = o.n;
  cfg.n_rep = o.n_rep;
  cfg.seed = seed;
  cfg.search = search_of(o);
  cfg.variance = o.variance;
  for (Index q = 0; q <= o.q_max; q += o.q_step) cfg.q_grid.push_back(q);

  json params = common_params(o);
  auto write = [&](VarianceMode mode, const std::string& name, const std::string& panel) {
    cfg.mode = mode;
    const auto sweep = augmentation_sweep(cfg, o.threads);
    std::vector<std::vector<std::string>> rows;
    Index hits = 0, excluded = 0;
    for (const auto& r : sweep.rows) {
      rows.push_back({fmt(r.q), fmt(r.risk_trunc), fmt(r.risk_full), fmt(r.lambda_opt)});
      hits += r.boundary_hit;
      excluded += r.excluded > 0;
    }
    w.write_csv(name, "sweep", panel, {"q", "risk_trunc", "risk_full", "lambda_opt"}, rows);
    warn_boundary("fig4 panel " + panel, hits);
    if (excluded > 0) std::cerr << "warning: fig4 panel " << panel << ": q = n - p excluded (rank boundary)\n";
    if (mode == VarianceMode::Adaptive) params["adaptive_total_lambda"] = sweep.total_lambda;
  };
  if (o.variance_mode != "fixed") write(VarianceMode::Adaptive, "fig4bd_adaptive.csv", "bd");
  if (o.variance_mode != "adaptive") write(VarianceMode::Fixed, "fig4ce_fixed.csv", "ce");
  params["p"] = p;
  params["q_max"] = o.q_max;
  params["q_step"] = o.q_step;
  params["variance_mode"] = o.variance_mode;
  params["variance"] = o.variance;
  return params;
}

json run_fig5(const Options& o, RunWriter& w, std::uint64_t seed) {
  std::vector<Index> p_grid = o.p_grid;
  if (p_grid.empty())
    for (Index p = 100; p <= 1000; p += 100) p_grid.push_back(p);
  const auto scan = sign_change_scan(spec_of(o, p_grid.front()), p_grid, o.n, o.n_rep, seed, o.threads);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : scan.rows) {
    const auto fd =
        derivative_fd_oracle(spec_of(o, r.p), o.n, o.n_rep, std::nullopt, scan_seed(seed, r.p), o.threads);
    rows.push_back({fmt(r.p), fmt(r.derivative), fmt(r.std_err), fmt(fd.value), fmt(fd.std_err)});
  }
  w.write_csv("fig5_derivative.csv", "derivative", "ab", {"p", "derivative", "std_err", "fd_derivative", "fd_std_err"},
              rows);
  json params = common_params(o);
  params["p_grid"] = p_grid;
  params["crossing_p"] = scan.crossing_p ? json(*scan.crossing_p) : json(nullptr);
  return params;
}

json run_fig6(const Options& o, RunWriter& w, std::uint64_t seed) {
  if (o.mnist_images.empty() || o.mnist_labels.empty())
    throw InvalidInputError(
        "fig6 needs MNIST in IDX format: --mnist-images t10k-images-idx3-ubyte --mnist-labels t10k-labels-idx1-ubyte "
        "(optional training pool: --mnist-train-images train-images-idx3-ubyte --mnist-train-labels "
        "train-labels-idx1-ubyte)");
  for (const auto& f : {o.mnist_images, o.mnist_labels, o.mnist_train_images, o.mnist_train_labels})
    if (!f.empty() && !std::filesystem::exists(f))
      throw InvalidInputError("fig6: MNIST file not found: '" + f + "'");
  if (o.mnist_train_images.empty() != o.mnist_train_labels.empty())
    throw InvalidInputError("fig6: give both --mnist-train-images and --mnist-train-labels, or neither");

  const auto test = normalize_pixels(load_idx(o.mnist_images, o.mnist_labels));
  const bool shared = o.mnist_train_images.empty();
  const auto pool = shared ? test : normalize_pixels(load_idx(o.mnist_train_images, o.mnist_train_labels));

  RffExperimentConfig cfg;
  cfg.train_n = o.n;
  cfg.rff = RffConfig{test.pixels.cols(), o.rff_features, o.rff_sigma, seed};
  cfg.n_rep = o.n_rep;
  cfg.smin_sq_threshold = o.smin_threshold;
  cfg.seed = seed;
  cfg.lambdas = curve_grid(o, o.neg_lambda.value_or(-o.smin_threshold), 100);
  const auto res = rff_mnist_experiment(pool, test, cfg, shared, o.threads);

  w.write_curve("fig6_above.csv", "b", res.above);
  w.write_curve("fig6_below.csv", "b", res.below);
  w.write_curve("fig6_all.csv", "a", res.all);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < res.smin_sq.size(); ++i)
    rows.push_back({fmt(static_cast<Index>(i)), fmt(res.smin_sq[i]), fmt(res.smin_sq[i] > o.smin_threshold)});
  w.write_csv("fig6_smin_sq.csv", "replicates", "b", {"replicate", "smin_sq", "above_threshold"}, rows);

  json params = common_params(o);
  params["mnist_images"] = o.mnist_images;
  params["mnist_labels"] = o.mnist_labels;
  params["mnist_train_images"] = o.mnist_train_images;
  params["mnist_train_labels"] = o.mnist_train_labels;
  params["shared_pool"] = shared;
  params["test_size"] = res.test_size;
  params["rff_features"] = o.rff_features;
  params["rff_sigma"] = o.rff_sigma;
  params["smin_threshold"] = o.smin_threshold;
  return params;
}

Dataset load_or_simulate(const Options& o, std::uint64_t seed, json& params) {
  if (o.csv_path.empty()) {
    const Index p = o.p.value_or(50);
    params["data"] = "spiked";
    params["p"] = p;
    return sample_training(spec_of(o, p), o.n, substream(seed, StreamTag::Training, 0));
  }
  if (o.response.empty()) throw InvalidInputError("--response is required with --csv");
  params["data"] = o.csv_path;
  params["response"] = o.response;
  const auto table = load_csv(o.csv_path, o.response);
  if (o.no_standardize) return table.data;
  const auto st = standardize(table.data);
  for (Index j : st.constant_columns)
    std::cerr << "warning: column '" << table.predictor_names[static_cast<std::size_t>(j)]
              << "' is constant; centered only\n";
  if (st.constant_response) std::cerr << "warning: response is constant; centered only\n";
  return st.data;
}

json run_cv(const Options& o, RunWriter& w, std::uint64_t seed) {
  json params = common_params(o);
  const Dataset data = load_or_simulate(o, seed, params);
  const auto curve = kfold_cv(data, curve_grid(o, o.neg_lambda), o.k, seed, o.threads);
  w.write_curve("cv_curve.csv", "cv", curve);
  params["k"] = o.k;
  params["standardize"] = !o.no_standardize;
  return params;
}

json run_fit(const Options& o, RunWriter& w, std::uint64_t seed) {
  json params = common_params(o);
  const Dataset data = load_or_simulate(o, seed, params);
  const auto fit = fit_with_intercept(data, o.lambda);
  std::vector<std::vector<std::string>> rows{{"intercept", fmt(fit.intercept)}};
  std::vector<std::string> names;
  if (!o.csv_path.empty()) names = load_csv(o.csv_path, o.response).predictor_names;
  for (Index j = 0; j < fit.coefficients.size(); ++j)
    rows.push_back({names.empty() ? "x" + std::to_string(j + 1) : names[static_cast<std::size_t>(j)],
                    fmt(fit.coefficients(j))});
  w.write_csv("fit_coefficients.csv", "coefficients", "fit", {"term", "coefficient"}, rows);
  std::cout << "smin_sq " << fmt(fit.smin_sq) << "\n";
  params["lambda"] = o.lambda;
  params["standardize"] = !o.no_standardize;
  params["smin_sq"] = fit.smin_sq;
  return params;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--n", o.n, "Training sample size")->check(CLI::PositiveNumber);
  sub->add_option("--rho", o.rho, "Off-diagonal predictor covariance")->check(CLI::NonNegativeNumber);
  sub->add_option("--alpha", o.alpha, "Signal-to-noise ratio")->check(CLI::PositiveNumber);
  sub->add_option("--sigma2", o.sigma2, "Noise variance")->check(CLI::PositiveNumber);
  sub->add_option("--n-rep", o.n_rep, "Replicates")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Master seed (falls back to RIDGELESS_SEED, then 1)");
  sub->add_option("--lambda-min", o.lambda_min, "Smallest positive penalty")->check(CLI::PositiveNumber);
  sub->add_option("--lambda-max", o.lambda_max, "Largest penalty")->check(CLI::PositiveNumber);
  sub->add_option("--lambda-steps", o.lambda_steps, "Log-spaced positive penalties")->check(CLI::Range(2, 100000));
  sub->add_option("--neg-lambda", o.neg_lambda, "Most negative penalty of the grid");
  sub->add_option("--neg-steps", o.neg_steps, "Linear negative penalties")->check(CLI::Range(1, 100000));
  sub->add_option("--out-dir", o.out_dir, "Output directory");
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 4096u));
  sub->add_flag("--check", o.check, "Verify the manifest hashes in --out-dir instead of running");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ridge, minimum-norm and negative-penalty experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ridgeless::cli::kToolVersion);

  Options o;
  using Runner = std::function<json(const Options&, RunWriter&, std::uint64_t)>;
  std::string command;
  Runner runner;
  auto add = [&](const std::string& name, const std::string& help, Runner fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    sub->callback([&, name, fn] {
      command = name;
      runner = fn;
    });
    return sub;
  };

  auto* fig2 = add("fig2", "Risk curves, double descent and negative lambda_opt", run_fig2);
  fig2->add_option("--p", o.p, "Single dimensionality (writes one curve)")->check(CLI::PositiveNumber);
  fig2->add_option("--p-grid", o.p_grid, "Dimensionalities of the double-descent sweep")->delimiter(',');

  auto* fig3 = add("fig3", "lambda_opt heatmaps over (n, p)", run_fig3);
  fig3->add_option("--n-grid", o.n_grid, "Sample sizes")->delimiter(',');
  fig3->add_option("--p-grid", o.p_grid, "Dimensionalities")->delimiter(',');

  auto* fig4 = add("fig4", "Augmentation with random predictors", run_fig4);
  fig4->add_option("--p", o.p, "Dimensionality")->check(CLI::PositiveNumber);
  fig4->add_option("--q-max", o.q_max, "Largest number of random predictors");
  fig4->add_option("--q-step", o.q_step, "Spacing of the q grid");
  fig4->add_option("--variance-mode", o.variance_mode, "adaptive, fixed or both");
  fig4->add_option("--variance", o.variance, "Per-column variance in fixed mode")->check(CLI::PositiveNumber);

  auto* fig5 = add("fig5", "Risk derivative at lambda = 0 versus p", run_fig5);
  fig5->add_option("--p-grid", o.p_grid, "Dimensionalities (ascending)")->delimiter(',');

  auto* fig6 = add("fig6", "Random Fourier features on MNIST", run_fig6);
  fig6->add_option("--mnist-images", o.mnist_images, "Test images (t10k-images-idx3-ubyte)");
  fig6->add_option("--mnist-labels", o.mnist_labels, "Test labels (t10k-labels-idx1-ubyte)");
  fig6->add_option("--mnist-train-images", o.mnist_train_images, "Training pool images (train-images-idx3-ubyte)");
  fig6->add_option("--mnist-train-labels", o.mnist_train_labels, "Training pool labels (train-labels-idx1-ubyte)");
  fig6->add_option("--rff-features", o.rff_features, "Random frequencies (features = 2x)")->check(CLI::PositiveNumber);
  fig6->add_option("--rff-sigma", o.rff_sigma, "Standard deviation of the projection entries")
      ->check(CLI::PositiveNumber);
  fig6->add_option("--smin-threshold", o.smin_threshold, "s_min^2 split point")->check(CLI::PositiveNumber);

  auto* cv = add("cv", "k-fold cross-validation curve", run_cv);
  cv->add_option("--csv", o.csv_path, "CSV file with a header row (default: simulated spiked data)");
  cv->add_option("--response", o.response, "Response column name");
  cv->add_option("--p", o.p, "Dimensionality of simulated data")->check(CLI::PositiveNumber);
  cv->add_option("--k", o.k, "Folds")->check(CLI::Range(2, 1000000));
  cv->add_flag("--no-standardize", o.no_standardize, "Use CSV columns as given");

  auto* fit = add("fit", "Fit ridge with an unpenalized intercept", run_fit);
  fit->add_option("--csv", o.csv_path, "CSV file with a header row (default: simulated spiked data)");
  fit->add_option("--response", o.response, "Response column name");
  fit->add_option("--p", o.p, "Dimensionality of simulated data")->check(CLI::PositiveNumber);
  fit->add_option("--lambda", o.lambda, "Ridge penalty (may be negative)");
  fit->add_flag("--no-standardize", o.no_standardize, "Use CSV columns as given");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::filesystem::path dir = o.out_dir.empty() ? std::filesystem::path("out") / command : std::filesystem::path(o.out_dir);
  try {
    if (o.check) {
      const auto res = ridgeless::cli::check_manifest(dir, command);
      for (const auto& p : res.problems) std::cerr << "check: " << p << "\n";
      std::cout << (res.ok ? "manifest OK" : "manifest FAILED") << "\n";
      return res.ok ? 0 : 1;
    }
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = resolve_seed(o);
    RunWriter writer(dir);
    json params = runner(o, writer, seed);
    params["seed"] = seed;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    writer.write_manifest(command, params, seed, wall);
    for (const auto& f : writer.files()) std::cout << (dir / f.name).string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
