#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rcbc/error.hpp"
#include "rcbc/huber.hpp"
#include "rcbc/matrix.hpp"
#include "rcbc/oneway.hpp"
#include "rcbc/solver_config.hpp"
#include "rcbc/weights.hpp"

namespace rcbc {

struct FitResult {
  Matrix u_hat;
  bool converged = false;
  int outer_iterations = 0;
  /// ‖U^(m) − R^T(m)‖_F per outer iteration.
  std::vector<double> discrepancy_trajectory;
  /// tau used by the solves of each outer iteration (length 1 unless tuning-free).
  std::vector<double> tau_trajectory;
  double objective = 0.0;
  std::vector<bool> row_v_support;
  std::vector<bool> col_v_support;
  long inner_iterations = 0;
};

struct BiclusterLabels {
  std::vector<int> row_labels;
  std::vector<int> col_labels;

  int n_row_clusters() const { return row_labels.empty() ? 0 : *std::max_element(row_labels.begin(), row_labels.end()) + 1; }
  int n_col_clusters() const { return col_labels.empty() ? 0 : *std::max_element(col_labels.begin(), col_labels.end()) + 1; }

  friend bool operator==(const BiclusterLabels&, const BiclusterLabels&) = default;
};

namespace detail {

inline double fusion_penalty(const Matrix& u, const WeightedEdgeList& g) {
  double s = 0.0;
  for (const auto& e : g.edges) {
    const auto ui = u.row(e.i);
    const auto uj = u.row(e.j);
    double sq = 0.0;
    for (std::size_t c = 0; c < u.cols(); ++c) {
      const double d = ui[c] - uj[c];
      sq += d * d;
    }
    s += e.w * std::sqrt(sq);
  }
  return s;
}

inline std::size_t count_true(const std::vector<bool>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), true));
}

struct DefaultTauSolver {
  std::optional<double> operator()(std::span<const double> residuals, std::size_t s, std::size_t n, std::size_t p,
                                   double floor) const {
    return solve_tau(residuals, s, n, p, floor);
  }
};

}  // namespace detail

/// Huber cost plus λ times the row-pair and column-pair fusion penalties.
inline double objective(const Matrix& x, const Matrix& u, double lambda, double tau, const WeightedEdgeList& row_weights,
                        const WeightedEdgeList& col_weights) {
  x.check_same_shape(u);
  if (row_weights.n_nodes != u.rows() || col_weights.n_nodes != u.cols()) {
    throw InvalidInput("objective: weight graphs do not match matrix shape");
  }
  const double penalty = detail::fusion_penalty(u, row_weights) + detail::fusion_penalty(u.transpose(), col_weights);
  return huber_cost(x, u, tau) + lambda * penalty;
}

/// Dykstra-like alternation of column-direction and row-direction robust
/// convex clustering, with an injectable tau solver for the tuning-free mode.
///
/// Each iteration clusters (U + P)ᵀ over the column graph into R, updates P,
/// clusters Rᵀ + Qᵀ over the row graph into U, updates Q, and stops once
/// ‖U − Rᵀ‖_F < outer_tol · max(1, ‖X‖_F). In tuning-free mode the residuals
/// X − U and the sparsity level s of the latest inner solves give the tau used
/// by the next iteration.
template <class TauSolver>
FitResult rcbc_fit_with(const Matrix& x, const WeightedEdgeList& row_weights, const WeightedEdgeList& col_weights,
                        double lambda, const TauPolicy& tau_policy, const SolverConfig& cfg, TauSolver&& tau_solver) {
  cfg.validate();
  tau_policy.validate();
  if (x.empty()) throw InvalidInput("rcbc_fit: empty matrix");
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be nonnegative");
  if (row_weights.n_nodes != x.rows() || col_weights.n_nodes != x.cols()) {
    throw InvalidInput("rcbc_fit: weight graphs do not match matrix shape");
  }

  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const double eps = cfg.outer_tol * tolerance_scale(frobenius_norm(x));

  double tau = tau_policy.fixed_value;
  double floor = tau_policy.floor;
  if (tau_policy.mode != TauMode::fixed) {
    tau = tau_mad_default(x);
    if (floor <= 0.0) floor = kTauFloorFraction * mad(x);
  }

  const DifferenceOperator row_op(row_weights);
  const DifferenceOperator col_op(col_weights);

  Matrix u = x;
  Matrix r = x.transpose();
  Matrix pm(n, p);
  Matrix qm(p, n);
  std::vector<bool> row_support(row_op.n_edges(), true);
  std::vector<bool> col_support(col_op.n_edges(), true);

  FitResult fit;
  fit.tau_trajectory.push_back(tau);
  double best_disc = std::numeric_limits<double>::infinity();
  std::vector<double> residuals(n * p);

  // Inner solves are warm-started from the previous outer iteration's iterate.
  std::optional<AdmmState> col_state;
  std::optional<AdmmState> row_state;

  for (int m = 1; m <= cfg.outer_max_iter; ++m) {
    const Matrix u_prev = u;
    const Matrix col_in = (u + pm).transpose();
    if (!col_state) col_state.emplace(col_in, col_op);
    OnewayResult col = run_admm(col_in, col_op, lambda, tau, cfg, *col_state);
    r = std::move(col.u);
    const Matrix rt = r.transpose();
    pm += u_prev;
    pm -= rt;

    const Matrix row_in = rt + qm.transpose();
    if (!row_state) row_state.emplace(row_in, row_op);
    OnewayResult row = run_admm(row_in, row_op, lambda, tau, cfg, *row_state);
    u = std::move(row.u);
    qm += r;
    qm -= u.transpose();

    row_support = std::move(row.v_support);
    col_support = std::move(col.v_support);
    fit.inner_iterations += col.iterations + row.iterations;
    fit.outer_iterations = m;

    const double disc = frobenius_distance(u, rt);
    fit.discrepancy_trajectory.push_back(disc);
    if (disc < best_disc) {
      best_disc = disc;
      fit.u_hat = u;
      fit.row_v_support = row_support;
      fit.col_v_support = col_support;
    }
    if (disc < eps) {
      fit.converged = true;
      fit.u_hat = u;
      fit.row_v_support = row_support;
      fit.col_v_support = col_support;
      break;
    }
    if (m == cfg.outer_max_iter) break;

    if (tau_policy.mode == TauMode::tuning_free) {
      const auto xv = x.values();
      const auto uv = u.values();
      for (std::size_t k = 0; k < residuals.size(); ++k) residuals[k] = xv[k] - uv[k];
      std::size_t s = std::min(detail::count_true(row_support), detail::count_true(col_support));
      s = std::min(s, n * p - 1);
      if (const auto next = tau_solver(std::span<const double>(residuals), s, n, p, floor)) {
        tau = std::max(*next, floor);
      }
      fit.tau_trajectory.push_back(tau);
    }
  }

  fit.objective = objective(x, fit.u_hat, lambda, fit.tau_trajectory.back(), row_weights, col_weights);
  return fit;
}

inline FitResult rcbc_fit(const Matrix& x, const WeightedEdgeList& row_weights, const WeightedEdgeList& col_weights,
                          double lambda, const TauPolicy& tau_policy, const SolverConfig& cfg) {
  return rcbc_fit_with(x, row_weights, col_weights, lambda, tau_policy, cfg, detail::DefaultTauSolver{});
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  // The smaller root wins so that results do not depend on union order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Relabels arbitrary group ids to 0, 1, 2, ... by first occurrence.
inline std::vector<int> renumber_by_first_occurrence(const std::vector<std::size_t>& ids) {
  std::vector<int> out(ids.size());
  std::vector<int> map(ids.size(), -1);
  int next = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (map[ids[k]] < 0) map[ids[k]] = next++;
    out[k] = map[ids[k]];
  }
  return out;
}

/// Clusters the rows of u: components of the graph restricted to fused
/// (exact-zero) edges, then components whose centroids lie within fuse_tol·√p.
inline std::vector<int> fused_components(const Matrix& u, const WeightedEdgeList& g, const std::vector<bool>& support,
                                         double fuse_tol) {
  const std::size_t n = u.rows();
  const std::size_t p = u.cols();
  if (g.n_nodes != n || support.size() != g.edges.size()) {
    throw InvalidInput("extract_biclusters: support does not match weight graph");
  }
  DisjointSets sets(n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (!support[e]) sets.unite(g.edges[e].i, g.edges[e].j);
  }
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = sets.find(i);

  std::vector<std::size_t> comps;
  std::vector<std::vector<double>> centroid(n);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = root[i];
    if (count[c] == 0) {
      comps.push_back(c);
      centroid[c].assign(p, 0.0);
    }
    ++count[c];
    const auto ui = u.row(i);
    for (std::size_t j = 0; j < p; ++j) centroid[c][j] += ui[j];
  }
  for (std::size_t c : comps)
    for (double& v : centroid[c]) v /= static_cast<double>(count[c]);

  const double merge_radius_sq = fuse_tol * fuse_tol * static_cast<double>(p);
  for (std::size_t a = 0; a < comps.size(); ++a) {
    for (std::size_t b = a + 1; b < comps.size(); ++b) {
      double sq = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double d = centroid[comps[a]][j] - centroid[comps[b]][j];
        sq += d * d;
      }
      if (sq <= merge_radius_sq) sets.unite(comps[a], comps[b]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) root[i] = sets.find(i);
  return renumber_by_first_occurrence(root);
}

}  // namespace detail

inline BiclusterLabels extract_biclusters(const FitResult& fit, const WeightedEdgeList& row_weights,
                                          const WeightedEdgeList& col_weights, double fuse_tol) {
  if (!(fuse_tol >= 0.0)) throw InvalidParameter("fuse_tol must be nonnegative");
  BiclusterLabels out;
  out.row_labels = detail::fused_components(fit.u_hat, row_weights, fit.row_v_support, fuse_tol);
  out.col_labels = detail::fused_components(fit.u_hat.transpose(), col_weights, fit.col_v_support, fuse_tol);
  return out;
}

}  // namespace rcbc
