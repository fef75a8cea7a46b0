#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ridgeless/augmentation.hpp"
#include "ridgeless/datasets.hpp"
#include "ridgeless/derivative.hpp"
#include "ridgeless/linalg.hpp"
#include "ridgeless/parallel.hpp"
#include "ridgeless/random.hpp"
#include "ridgeless/risk_path.hpp"
#include "ridgeless/spiked.hpp"

namespace ridgeless {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Replicate-averaged risk over a penalty grid. For spiked-model sweeps the
/// values are normalized MSE; for cross-validation and image experiments they
/// are plain test MSE.
struct RiskCurve {
  std::vector<double> lambdas;
  std::vector<double> mean_normalized_mse;
  std::vector<double> std_err;
  Index n_rep = 0;
  std::vector<Index> excluded;  // replicates outside (-s_min^2, inf) at each lambda

  std::size_t size() const noexcept { return lambdas.size(); }

  /// Index of the smallest finite mean, or nothing if every point is NaN.
  std::optional<std::size_t> argmin() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < size(); ++i)
      if (std::isfinite(mean_normalized_mse[i]) && (!best || mean_normalized_mse[i] < mean_normalized_mse[*best]))
        best = i;
    return best;
  }
};

inline void validate_grid(const std::vector<double>& grid, const char* who) {
  if (grid.empty()) throw InvalidInputError(std::string(who) + ": lambda grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw InvalidInputError(std::string(who) + ": lambda grid has a non-finite value");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw InvalidInputError(std::string(who) + ": lambda grid must be strictly increasing");
  }
}

/// n points spaced evenly in log10 between lo and hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidInputError("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// n points spaced evenly between lo and hi inclusive.
inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (!(hi > lo) || n < 2) throw InvalidInputError("linear_grid: need lo < hi and n >= 2");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

struct RiskPoint {
  double mean = kNaN;
  double std_err = kNaN;
  Index used = 0;
  Index excluded = 0;
};

struct PairedDifference {
  double mean = kNaN;  // risk(a) - risk(b)
  double std_err = kNaN;
  Index used = 0;
};

/// The risk paths of a fixed set of replicates. Every query reuses the same
/// training sets, so comparisons across penalties use common random numbers
/// and the averaged risk is a deterministic function of lambda.
class ReplicateRisks {
 public:
  ReplicateRisks() = default;
  explicit ReplicateRisks(std::vector<QuadraticRiskPath> paths) : paths_(std::move(paths)) {}

  Index size() const noexcept { return static_cast<Index>(paths_.size()); }
  const std::vector<QuadraticRiskPath>& paths() const noexcept { return paths_; }

  std::vector<double> smin_sq() const {
    std::vector<double> out;
    out.reserve(paths_.size());
    for (const auto& p : paths_) out.push_back(p.smin_sq());
    return out;
  }

  RiskPoint at(double lambda) const {
    std::vector<double> vals;
    vals.reserve(paths_.size());
    for (const auto& p : paths_)
      if (auto v = p.at(lambda)) vals.push_back(*v);
    const auto ms = detail::mean_se(vals);
    return {ms.mean, ms.se, static_cast<Index>(vals.size()), size() - static_cast<Index>(vals.size())};
  }

  /// Paired comparison over replicates admissible at both penalties.
  PairedDifference difference(double a, double b) const {
    std::vector<double> diffs;
    for (const auto& p : paths_) {
      const auto ra = p.at(a), rb = p.at(b);
      if (ra && rb) diffs.push_back(*ra - *rb);
    }
    const auto ms = detail::mean_se(diffs);
    return {ms.mean, ms.se, static_cast<Index>(diffs.size())};
  }

  RiskCurve curve(const std::vector<double>& grid) const {
    validate_grid(grid, "risk curve");
    RiskCurve c;
    c.lambdas = grid;
    c.n_rep = size();
    for (double l : grid) {
      const auto pt = at(l);
      c.mean_normalized_mse.push_back(pt.mean);
      c.std_err.push_back(pt.std_err);
      c.excluded.push_back(pt.excluded);
    }
    return c;
  }

 private:
  std::vector<QuadraticRiskPath> paths_;
};

/// Risk paths of n_rep spiked-model training sets. Replicate r uses the
/// training substream (seed, r) shared by every spiked experiment.
inline ReplicateRisks spiked_replicates(const SpikedSpec& spec, Index n, Index n_rep, std::uint64_t seed,
                                        unsigned threads = 1) {
  spec.validate();
  if (n_rep < 1) throw InvalidInputError("spiked_replicates: n_rep must be >= 1");
  auto paths = parallel_map(static_cast<std::size_t>(n_rep), threads, [&](std::size_t r) {
    const Dataset data = sample_training(spec, n, substream(seed, StreamTag::Training, r));
    return spiked_risk_path(RidgePath(thin_svd(data.x()), data.y()), spec);
  });
  return ReplicateRisks(std::move(paths));
}

inline RiskCurve lambda_sweep(const SpikedSpec& spec, Index n, const std::vector<double>& grid, Index n_rep,
                              std::uint64_t seed, unsigned threads = 1) {
  validate_grid(grid, "lambda_sweep");
  return spiked_replicates(spec, n, n_rep, seed, threads).curve(grid);
}

// ---------------------------------------------------------------------------
// Optimal penalty search
// ---------------------------------------------------------------------------

struct LambdaSearch {
  /// Lower end of the search. Defaults to -0.95 times the 5th percentile of
  /// the replicate s_min^2 values.
  std::optional<double> lower;
  double upper = 1e5;
  bool allow_negative = true;
  std::size_t negative_points = 40;
  double positive_min = 1e-2;
  std::size_t positive_points = 61;
  bool refine = true;
  double tolerance = 1e-6;
};

struct LambdaOptResult {
  double lambda_opt = kNaN;
  double min_risk = kNaN;
  double std_err = kNaN;
  double lo = kNaN;  // bracket handed to refinement
  double hi = kNaN;
  std::string method;
  bool boundary_hit = false;
};

inline double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return kNaN;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// Coarse grid used by find_lambda_opt: linear negatives from the lower bound,
/// zero, then log-spaced positives up to `upper`.
inline std::vector<double> search_grid(const ReplicateRisks& reps, const LambdaSearch& search) {
  std::vector<double> grid;
  double lower = 0.0;
  if (search.allow_negative) lower = search.lower.value_or(-0.95 * percentile(reps.smin_sq(), 0.05));
  if (lower < 0.0 && search.negative_points > 0)
    for (std::size_t i = 0; i < search.negative_points; ++i)
      grid.push_back(lower * (1.0 - static_cast<double>(i) / static_cast<double>(search.negative_points)));
  grid.push_back(0.0);
  if (search.upper > search.positive_min) {
    const auto pos = log_grid(search.positive_min, search.upper, std::max<std::size_t>(search.positive_points, 2));
    grid.insert(grid.end(), pos.begin(), pos.end());
  }
  return grid;
}

/// Smallest replicate-averaged risk over the coarse grid, then golden-section
/// refinement between the neighbours of the grid minimum. Grid points whose
/// means agree to rounding are resolved toward the smallest |lambda|.
inline LambdaOptResult find_lambda_opt(const ReplicateRisks& reps, const LambdaSearch& search = {}) {
  const auto grid = search_grid(reps, search);
  validate_grid(grid, "find_lambda_opt");
  auto objective = [&](double l) {
    const double m = reps.at(l).mean;
    return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
  };
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = objective(grid[i]);
  const double best = *std::min_element(vals.begin(), vals.end());
  if (!std::isfinite(best)) throw InvalidInputError("find_lambda_opt: risk undefined on the whole grid");
  std::size_t k = 0;
  bool found = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool tie = vals[i] <= best + 1e-12 * std::abs(best);
    if (tie && (!found || std::abs(grid[i]) < std::abs(grid[k]))) {
      k = i;
      found = true;
    }
  }

  LambdaOptResult res;
  res.boundary_hit = (k == 0) || (k + 1 == grid.size());
  res.lo = grid[k == 0 ? 0 : k - 1];
  res.hi = grid[k + 1 == grid.size() ? k : k + 1];
  res.lambda_opt = grid[k];
  res.min_risk = vals[k];
  res.method = "grid";

  if (search.refine && res.hi > res.lo) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = res.lo, b = res.hi;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 200 && (b - a) > search.tolerance * (1.0 + std::abs(a) + std::abs(b)); ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = objective(x2);
      }
    }
    const double x = f1 <= f2 ? x1 : x2;
    const double fx = std::min(f1, f2);
    if (fx < res.min_risk) {
      res.lambda_opt = x;
      res.min_risk = fx;
    }
    res.method = "grid+golden";
  }
  res.std_err = reps.at(res.lambda_opt).std_err;
  return res;
}

inline LambdaOptResult find_lambda_opt(const SpikedSpec& spec, Index n, Index n_rep, std::uint64_t seed,
                                       const LambdaSearch& search = {}, unsigned threads = 1) {
  return find_lambda_opt(spiked_replicates(spec, n, n_rep, seed, threads), search);
}

// ---------------------------------------------------------------------------
// Sweeps over dimensionality and sample size
// ---------------------------------------------------------------------------

struct DimensionalityRow {
  Index p = 0;
  double risk_min_norm = kNaN;  // lambda = 0
  double std_err = kNaN;
  double risk_opt = kNaN;
  double lambda_opt = kNaN;
  bool boundary_hit = false;
};

/// Minimum-norm risk and optimal ridge risk for each p. Grid point p uses the
/// seed scan_seed(seed, p), shared with the derivative scan.
inline std::vector<DimensionalityRow> dimensionality_sweep(const SpikedSpec& base, const std::vector<Index>& p_grid,
                                                           Index n, Index n_rep, std::uint64_t seed,
                                                           const LambdaSearch& search = {}, unsigned threads = 1) {
  std::vector<DimensionalityRow> rows;
  for (Index p : p_grid) {
    SpikedSpec spec = base;
    spec.p = p;
    const auto reps = spiked_replicates(spec, n, n_rep, scan_seed(seed, p), threads);
    const auto zero = reps.at(0.0);
    const auto opt = find_lambda_opt(reps, search);
    rows.push_back({p, zero.mean, zero.std_err, opt.min_risk, opt.lambda_opt, opt.boundary_hit});
  }
  return rows;
}

struct HeatmapCell {
  Index n = 0;
  Index p = 0;
  double lambda_opt = kNaN;
  bool boundary_hit = false;
};

inline std::uint64_t cell_seed(std::uint64_t seed, Index n, Index p) {
  return substream(seed, {0x4ea7ULL, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p)});
}

/// lambda_opt over the (n, p) grid, rows ordered by n then p.
inline std::vector<HeatmapCell> heatmap_lambda_opt(const std::vector<Index>& n_grid, const std::vector<Index>& p_grid,
                                                   const SpikedSpec& base, Index n_rep, std::uint64_t seed,
                                                   const LambdaSearch& search = {}, unsigned threads = 1) {
  std::vector<HeatmapCell> cells;
  for (Index n : n_grid)
    for (Index p : p_grid) {
      SpikedSpec spec = base;
      spec.p = p;
      const auto res = find_lambda_opt(spec, n, n_rep, cell_seed(seed, n, p), search, threads);
      cells.push_back({n, p, res.lambda_opt, res.boundary_hit});
    }
  return cells;
}

/// Smallest p in row n whose lambda_opt is negative.
inline std::optional<Index> negative_region_boundary(const std::vector<HeatmapCell>& cells, Index n) {
  std::optional<Index> best;
  for (const auto& c : cells)
    if (c.n == n && c.lambda_opt < 0.0 && (!best || c.p < *best)) best = c.p;
  return best;
}

// ---------------------------------------------------------------------------
// Augmentation with random predictors
// ---------------------------------------------------------------------------

enum class VarianceMode { Adaptive, Fixed };

struct AugmentationSweepConfig {
  SpikedSpec spec = SpikedSpec::defaults(50);
  Index n = 64;
  std::vector<Index> q_grid;
  VarianceMode mode = VarianceMode::Adaptive;
  /// Adaptive: total penalty spread over the q columns (variance lambda / q).
  /// Unset means the lambda_opt of the unaugmented model on the same replicates.
  std::optional<double> total_lambda;
  /// Fixed: per-column variance.
  double variance = 1.0;
  Index n_rep = 100;
  std::uint64_t seed = 0;
  LambdaSearch search;
};

struct AugmentationRow {
  Index q = 0;
  double risk_trunc = kNaN;
  double risk_full = kNaN;
  double lambda_opt = kNaN;
  double std_err_trunc = kNaN;
  double std_err_full = kNaN;
  bool boundary_hit = false;
  Index excluded = 0;  // replicates dropped because p + q = n
};

struct AugmentationSweep {
  std::vector<AugmentationRow> rows;
  double total_lambda = kNaN;  // adaptive mode only
};

/// Risk of the truncated and full minimum-norm estimators on [X | X_q] for
/// each q, plus lambda_opt of the truncated ridge path. Replicate r reuses the
/// spiked training set of lambda_sweep and one n x q_max block of random
/// columns, so larger q extends smaller q.
inline AugmentationSweep augmentation_sweep(const AugmentationSweepConfig& cfg, unsigned threads = 1) {
  cfg.spec.validate();
  if (cfg.q_grid.empty()) throw InvalidInputError("augmentation_sweep: q grid is empty");
  for (std::size_t i = 0; i < cfg.q_grid.size(); ++i)
    if (cfg.q_grid[i] < 0 || (i > 0 && cfg.q_grid[i] <= cfg.q_grid[i - 1]))
      throw InvalidInputError("augmentation_sweep: q grid must be non-negative and strictly increasing");
  if (cfg.mode == VarianceMode::Fixed && !(cfg.variance > 0.0))
    throw InvalidInputError("augmentation_sweep: variance must be > 0");
  const Index q_max = cfg.q_grid.back();

  AugmentationSweep out;
  if (cfg.mode == VarianceMode::Adaptive) {
    out.total_lambda = cfg.total_lambda
                           ? *cfg.total_lambda
                           : find_lambda_opt(spiked_replicates(cfg.spec, cfg.n, cfg.n_rep, cfg.seed, threads), cfg.search)
                                 .lambda_opt;
    if (!(out.total_lambda > 0.0))
      throw InvalidInputError("augmentation_sweep: adaptive mode needs a positive total penalty");
  }

  for (Index q : cfg.q_grid) {
    AugmentationRow row;
    row.q = q;
    if (cfg.spec.p + q == cfg.n) {
      row.excluded = cfg.n_rep;
      out.rows.push_back(row);
      continue;
    }
    const double var = q == 0 ? 0.0
                              : (cfg.mode == VarianceMode::Fixed ? cfg.variance
                                                                 : out.total_lambda / static_cast<double>(q));
    struct Pair {
      QuadraticRiskPath trunc, full;
    };
    auto pairs = parallel_map(static_cast<std::size_t>(cfg.n_rep), threads, [&](std::size_t r) {
      const Dataset data = sample_training(cfg.spec, cfg.n, substream(cfg.seed, StreamTag::Training, r));
      Engine eng = make_engine(substream(cfg.seed, StreamTag::RandomColumns, r));
      const Matrix block = gaussian_matrix(cfg.n, q_max, 1.0, eng);
      Matrix xa(cfg.n, cfg.spec.p + q);
      xa << data.x(), std::sqrt(var) * block.leftCols(q);
      const RidgePath path(thin_svd(xa), data.y());
      return Pair{augmented_risk_path(path, cfg.spec, var, false), augmented_risk_path(path, cfg.spec, var, true)};
    });
    std::vector<QuadraticRiskPath> trunc, full;
    for (auto& p : pairs) {
      trunc.push_back(std::move(p.trunc));
      full.push_back(std::move(p.full));
    }
    const ReplicateRisks rt(std::move(trunc)), rf(std::move(full));
    const auto t0 = rt.at(0.0), f0 = rf.at(0.0);
    row.risk_trunc = t0.mean;
    row.std_err_trunc = t0.std_err;
    row.risk_full = f0.mean;
    row.std_err_full = f0.std_err;
    const auto opt = find_lambda_opt(rt, cfg.search);
    row.lambda_opt = opt.lambda_opt;
    row.boundary_hit = opt.boundary_hit;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// Random assignment of n observations to k folds whose sizes differ by at
/// most one.
inline std::vector<Index> fold_assignment(Index n, Index k, std::uint64_t seed) {
  if (k < 2) throw InvalidInputError("kfold_cv: k must be >= 2");
  if (n < k) throw InvalidInputError("kfold_cv: need at least k observations");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine eng = make_engine(substream(seed, StreamTag::Folds, 0));
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<Index> fold(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % k;
  return fold;
}

/// k-fold cross-validated test MSE of ridge with an unpenalized intercept.
/// The curve reports the mean of the fold MSEs and their standard error; a
/// fold is excluded at penalties below its own -s_min^2.
inline RiskCurve kfold_cv(const Dataset& data, const std::vector<double>& grid, Index k, std::uint64_t seed,
                          unsigned threads = 1) {
  validate_grid(grid, "kfold_cv");
  const auto fold = fold_assignment(data.rows(), k, seed);
  auto per_fold = parallel_map(static_cast<std::size_t>(k), threads, [&](std::size_t f) {
    std::vector<Index> tr, te;
    for (Index i = 0; i < data.rows(); ++i) (fold[static_cast<std::size_t>(i)] == static_cast<Index>(f) ? te : tr).push_back(i);
    Matrix xtr(static_cast<Index>(tr.size()), data.cols()), xte(static_cast<Index>(te.size()), data.cols());
    Vector ytr(static_cast<Index>(tr.size())), yte(static_cast<Index>(te.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      xtr.row(static_cast<Index>(i)) = data.x().row(tr[i]);
      ytr(static_cast<Index>(i)) = data.y()(tr[i]);
    }
    for (std::size_t i = 0; i < te.size(); ++i) {
      xte.row(static_cast<Index>(i)) = data.x().row(te[i]);
      yte(static_cast<Index>(i)) = data.y()(te[i]);
    }
    const Vector x_mean = xtr.colwise().mean();
    const double y_mean = ytr.mean();
    const Matrix xc = xtr.rowwise() - x_mean.transpose();
    const RidgePath path(thin_svd(xc), ytr.array() - y_mean);
    const Matrix a = (xte.rowwise() - x_mean.transpose()) * path.svd().v;
    return empirical_risk_path(path, a, yte.array() - y_mean);
  });
  RiskCurve c = ReplicateRisks(std::move(per_fold)).curve(grid);
  return c;
}

// ---------------------------------------------------------------------------
// Random Fourier features on digit images
// ---------------------------------------------------------------------------

struct RffExperimentConfig {
  Index train_n = 64;
  RffConfig rff;
  std::vector<double> lambdas;
  Index n_rep = 100;
  double smin_sq_threshold = 100.0;
  std::uint64_t seed = 0;
};

struct RffExperimentResult {
  RiskCurve above;  // replicates with s_min^2 > threshold
  RiskCurve below;
  RiskCurve all;
  std::vector<double> smin_sq;  // per replicate, centered training features
  Index test_size = 0;
};

/// n distinct indices from [0, pool) by a partial Fisher-Yates shuffle.
inline std::vector<Index> draw_without_replacement(Index pool, Index n, Engine& eng) {
  if (n > pool) throw InvalidInputError("draw_without_replacement: sample larger than pool");
  std::vector<Index> idx(static_cast<std::size_t>(pool));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<Index> pick(i, pool - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(eng))]);
  }
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

/// Ridge with intercept on random Fourier features of train_n images drawn per
/// replicate, scored by MSE on the test images with the digit value as the
/// response. When `shared_pool` is set the training images are drawn from the
/// test set itself and left out of that replicate's test error.
inline RffExperimentResult rff_mnist_experiment(const LabeledImages& train_pool, const LabeledImages& test,
                                                const RffExperimentConfig& cfg, bool shared_pool = false,
                                                unsigned threads = 1) {
  validate_grid(cfg.lambdas, "rff_mnist_experiment");
  if (cfg.n_rep < 1) throw InvalidInputError("rff_mnist_experiment: n_rep must be >= 1");
  if (cfg.train_n < 2) throw InvalidInputError("rff_mnist_experiment: train_n must be >= 2");
  if (train_pool.pixels.cols() != cfg.rff.input_dim || test.pixels.cols() != cfg.rff.input_dim)
    throw DimensionMismatchError("rff_mnist_experiment: image width differs from RffConfig.input_dim");
  if (train_pool.pixels.rows() < cfg.train_n) throw InvalidInputError("rff_mnist_experiment: training pool too small");

  const Matrix w = sample_rff_matrix(cfg.rff);
  const Matrix test_features = rff_transform(test.pixels, w);
  Vector y_test(test.pixels.rows());
  for (Index i = 0; i < y_test.size(); ++i) y_test(i) = test.labels[static_cast<std::size_t>(i)];

  auto paths = parallel_map(static_cast<std::size_t>(cfg.n_rep), threads, [&](std::size_t r) {
    Engine eng = make_engine(substream(cfg.seed, StreamTag::ImageDraw, r));
    const auto idx = draw_without_replacement(train_pool.pixels.rows(), cfg.train_n, eng);
    Matrix px(cfg.train_n, cfg.rff.input_dim);
    Vector y(cfg.train_n);
    for (Index i = 0; i < cfg.train_n; ++i) {
      px.row(i) = train_pool.pixels.row(idx[static_cast<std::size_t>(i)]);
      y(i) = train_pool.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    const Matrix feats = rff_transform(px, w);
    const Vector mean = feats.colwise().mean();
    const double y_mean = y.mean();
    const RidgePath path(thin_svd(feats.rowwise() - mean.transpose()), y.array() - y_mean);
    const Matrix& v = path.svd().v;
    Matrix a = test_features * v;
    a.rowwise() -= (v.transpose() * mean).transpose();
    Vector target = y_test.array() - y_mean;
    if (shared_pool) {
      for (Index i : idx) {
        a.row(i).setZero();
        target(i) = 0.0;
      }
      return QuadraticRiskPath(path, a.transpose() * a, -(a.transpose() * target), target.squaredNorm(),
                               static_cast<double>(y_test.size() - cfg.train_n));
    }
    return empirical_risk_path(path, a, target);
  });

  RffExperimentResult res;
  res.test_size = shared_pool ? y_test.size() - cfg.train_n : y_test.size();
  std::vector<QuadraticRiskPath> above, below;
  for (const auto& p : paths) {
    res.smin_sq.push_back(p.smin_sq());
    (p.smin_sq() > cfg.smin_sq_threshold ? above : below).push_back(p);
  }
  auto curve_or_empty = [&](std::vector<QuadraticRiskPath> ps) {
    if (!ps.empty()) return ReplicateRisks(std::move(ps)).curve(cfg.lambdas);
    RiskCurve c;
    c.lambdas = cfg.lambdas;
    c.mean_normalized_mse.assign(cfg.lambdas.size(), kNaN);
    c.std_err.assign(cfg.lambdas.size(), kNaN);
    c.excluded.assign(cfg.lambdas.size(), 0);
    return c;
  };
  res.above = curve_or_empty(std::move(above));
  res.below = curve_or_empty(std::move(below));
  res.all = ReplicateRisks(std::move(paths)).curve(cfg.lambdas);
  return res;
}

}  // namespace ridgeless
