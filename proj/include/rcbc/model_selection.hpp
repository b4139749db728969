#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <utility>
#include <vector>

#include "rcbc/biclustering.hpp"
#include "rcbc/error.hpp"
#include "rcbc/huber.hpp"
#include "rcbc/matrix.hpp"
#include "rcbc/simulate.hpp"
#include "rcbc/solver_config.hpp"
#include "rcbc/weights.hpp"

namespace rcbc {

/// Random partition of the n·p cell indices (row-major) into T folds whose
/// sizes differ by at most one; the first (np mod T) folds are one larger.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t p, std::size_t folds,
                                                        std::uint64_t seed) {
  const std::size_t cells = n * p;
  if (folds < 2) throw InvalidParameter("cross-validation needs at least 2 folds");
  if (folds > cells) throw InvalidParameter("more folds than matrix cells");
  std::vector<std::size_t> perm(cells);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Xoshiro256 rng(derive_seed(seed, 2));
  // Fisher-Yates with an explicit bounded draw keeps the permutation independent of the standard library.
  for (std::size_t k = cells; k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng.uniform_open() * static_cast<double>(k));
    std::swap(perm[k - 1], perm[std::min(j, k - 1)]);
  }
  std::vector<std::vector<std::size_t>> out(folds);
  const std::size_t base = cells / folds;
  const std::size_t extra = cells % folds;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    out[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos), perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(out[f].begin(), out[f].end());
    pos += len;
  }
  return out;
}

enum class Imputation { mean, median };
enum class ValidationLoss { squared, huber };

struct CvOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  Imputation imputation = Imputation::mean;
  ValidationLoss loss = ValidationLoss::squared;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct CvReport {
  std::vector<double> grid;
  std::vector<double> mse_per_lambda;
  /// folds × grid table of held-out losses.
  std::vector<std::vector<double>> fold_mse;
  /// (fold, grid index) pairs whose fit did not converge.
  std::vector<std::pair<std::size_t, std::size_t>> non_converged;
  double best_lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
};

/// x with the held-out cells replaced by the mean (or median) of the remaining entries.
inline Matrix impute_held_out(const Matrix& x, const std::vector<std::size_t>& held_out, Imputation how) {
  std::vector<char> missing(x.size(), 0);
  for (std::size_t c : held_out) missing[c] = 1;
  std::vector<double> kept;
  kept.reserve(x.size() - held_out.size());
  const auto xv = x.values();
  for (std::size_t k = 0; k < xv.size(); ++k)
    if (!missing[k]) kept.push_back(xv[k]);
  if (kept.empty()) throw InvalidInput("imputation: no observed cells remain");
  double fill = 0.0;
  if (how == Imputation::mean) {
    fill = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
  } else {
    fill = median(std::move(kept));
  }
  Matrix out = x;
  for (std::size_t c : held_out) out.values()[c] = fill;
  return out;
}

namespace detail {

template <class Task>
void run_parallel(std::size_t count, unsigned threads, Task&& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Selects lambda by hold-out of matrix cells: each fold's cells are imputed,
/// weights are rebuilt on the imputed matrix, the biclustering is fitted, and
/// the held-out cells are scored against the original values.
inline CvReport cv_lambda(const Matrix& x, const std::vector<double>& grid, const WeightSettings& weights,
                          const TauPolicy& tau_policy, const SolverConfig& cfg, const CvOptions& opts) {
  if (grid.empty()) throw InvalidParameter("lambda grid is empty");
  for (double l : grid)
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidParameter("lambda grid values must be finite and >= 0");
  cfg.validate();

  CvReport report;
  report.grid = grid;
  report.seed = opts.seed;
  report.folds = opts.folds;
  const auto folds = make_folds(x.rows(), x.cols(), opts.folds, opts.seed);

  std::vector<Matrix> imputed;
  std::vector<FusionGraphs> graphs;
  for (const auto& f : folds) {
    imputed.push_back(impute_held_out(x, f, opts.imputation));
    graphs.push_back(make_fusion_graphs(imputed.back(), weights));
  }

  // Huber validation uses the scale of the full data.
  const double val_tau = opts.loss == ValidationLoss::huber ? tau_mad_default(x) : kInfiniteTau;

  const std::size_t n_tasks = folds.size() * grid.size();
  std::vector<double> loss(n_tasks, 0.0);
  std::vector<char> converged(n_tasks, 1);
  detail::run_parallel(n_tasks, opts.threads, [&](std::size_t task) {
    const std::size_t f = task / grid.size();
    const std::size_t g = task % grid.size();
    const FitResult fit = rcbc_fit(imputed[f], graphs[f].rows, graphs[f].cols, grid[g], tau_policy, cfg);
    double acc = 0.0;
    for (std::size_t c : folds[f]) {
      const double d = x.values()[c] - fit.u_hat.values()[c];
      acc += opts.loss == ValidationLoss::squared ? d * d : 2.0 * huber_loss(d, val_tau);
    }
    loss[task] = acc / static_cast<double>(folds[f].size());
    converged[task] = fit.converged ? 1 : 0;
  });

  report.fold_mse.assign(folds.size(), std::vector<double>(grid.size(), 0.0));
  report.mse_per_lambda.assign(grid.size(), 0.0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const std::size_t task = f * grid.size() + g;
      report.fold_mse[f][g] = loss[task];
      if (!converged[task]) report.non_converged.emplace_back(f, g);
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) s += report.fold_mse[f][g];
    report.mse_per_lambda[g] = s / static_cast<double>(folds.size());
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = report.mse_per_lambda[g];
    const double b = report.mse_per_lambda[best];
    if (a < b || (a == b && grid[g] < grid[best])) best = g;
  }
  report.best_lambda = grid[best];
  return report;
}

/// n values spaced evenly in log10 between lo and hi (inclusive).
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw InvalidParameter("log grid: need 0 < lo <= hi and count >= 1");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t k = 0; k < count; ++k) {
    g[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  g.back() = hi;
  g.front() = lo;
  return g;
}

}  // namespace rcbc
