#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "rcbc/error.hpp"
#include "rcbc/huber.hpp"
#include "rcbc/matrix.hpp"
#include "rcbc/solver_config.hpp"
#include "rcbc/weights.hpp"

namespace rcbc {

/// Edge-incidence operator E ((EU)_e = U_i − U_j) restricted to the edges of a
/// fusion graph, together with a cached Cholesky factorization of EᵀE + I.
class DifferenceOperator {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using Factorization = Eigen::SimplicialLLT<SparseMatrix>;

  explicit DifferenceOperator(const WeightedEdgeList& g) : n_nodes_(g.n_nodes), edges_(g.edges) {
    for (const auto& e : edges_) {
      if (e.i >= e.j || e.j >= n_nodes_) throw InvalidInput("difference operator: edges must satisfy i < j < n");
    }
    gram_ = gram_plus_identity();
    auto llt = std::make_shared<Factorization>();
    llt->compute(gram_);
    if (llt->info() != Eigen::Success) throw InvalidInput("difference operator: factorization failed");
    llt_ = std::move(llt);
  }

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }

  /// EᵀE + I as a sparse symmetric matrix.
  const SparseMatrix& gram() const noexcept { return gram_; }

  /// out = E·u  (|E| × p).
  void apply(const Matrix& u, Matrix& out) const {
    const std::size_t p = u.cols();
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto ui = u.row(edges_[e].i);
      const auto uj = u.row(edges_[e].j);
      auto o = out.row(e);
      for (std::size_t c = 0; c < p; ++c) o[c] = ui[c] - uj[c];
    }
  }

  /// out += Eᵀ·m  (n × p).
  void apply_transpose_add(const Matrix& m, Matrix& out) const {
    const std::size_t p = m.cols();
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto me = m.row(e);
      auto oi = out.row(edges_[e].i);
      auto oj = out.row(edges_[e].j);
      for (std::size_t c = 0; c < p; ++c) {
        oi[c] += me[c];
        oj[c] -= me[c];
      }
    }
  }

  /// Overwrites b (n × p) with (EᵀE + I)⁻¹ b.
  void solve_in_place(Matrix& b) const {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor> rhs(b.data(), static_cast<Eigen::Index>(b.rows()), static_cast<Eigen::Index>(b.cols()));
    const Eigen::MatrixXd sol = llt_->solve(rhs);
    rhs = sol;
  }

 private:
  SparseMatrix gram_plus_identity() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(n_nodes_ + 4 * edges_.size());
    for (std::size_t i = 0; i < n_nodes_; ++i) {
      const auto ii = static_cast<int>(i);
      t.emplace_back(ii, ii, 1.0);
    }
    for (const auto& e : edges_) {
      const auto i = static_cast<int>(e.i);
      const auto j = static_cast<int>(e.j);
      t.emplace_back(i, i, 1.0);
      t.emplace_back(j, j, 1.0);
      t.emplace_back(i, j, -1.0);
      t.emplace_back(j, i, -1.0);
    }
    const auto n = static_cast<Eigen::Index>(n_nodes_);
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  std::size_t n_nodes_ = 0;
  std::vector<WeightedEdge> edges_;
  SparseMatrix gram_;
  std::shared_ptr<const Factorization> llt_;
};

inline DifferenceOperator build_difference_operator(const WeightedEdgeList& g) { return DifferenceOperator(g); }

/// ADMM iterate for one one-way problem. V and Y carry one row per edge;
/// Y and Z are scaled duals.
struct AdmmState {
  Matrix u, w, v, y, z;
  std::vector<char> v_zero;
  int iteration = 0;
  double primal_edge = 0.0;    // ‖EU − V‖_F
  double primal_split = 0.0;   // ‖U − W‖_F

  AdmmState() = default;

  /// U = W = x, V = EU, Y = 0, Z = 0.
  AdmmState(const Matrix& x, const DifferenceOperator& op)
      : u(x), w(x), v(op.n_edges(), x.cols()), y(op.n_edges(), x.cols()), z(x.rows(), x.cols()),
        v_zero(op.n_edges(), 0) {
    if (x.rows() != op.n_nodes()) throw InvalidInput("admm state: row count does not match graph");
    op.apply(u, v);
    for (std::size_t e = 0; e < op.n_edges(); ++e) v_zero[e] = squared_norm(v.row(e)) == 0.0;
  }
};

/// U ← (EᵀE + I)⁻¹ [Eᵀ(V + Y) + W + Z].
inline void update_u(AdmmState& s, const DifferenceOperator& op) {
  Matrix rhs = s.w + s.z;
  op.apply_transpose_add(s.v, rhs);
  op.apply_transpose_add(s.y, rhs);
  op.solve_in_place(rhs);
  s.u = std::move(rhs);
}

/// Elementwise Huber proximal step with anchor U − Z.
inline void update_w(AdmmState& s, const Matrix& x, double rho, double tau) {
  x.check_same_shape(s.u);
  const auto xv = x.values();
  const auto uv = s.u.values();
  const auto zv = s.z.values();
  auto wv = s.w.values();
  if (std::isinf(tau)) {
    for (std::size_t k = 0; k < xv.size(); ++k) wv[k] = (xv[k] + rho * (uv[k] - zv[k])) / (1.0 + rho);
    return;
  }
  for (std::size_t k = 0; k < xv.size(); ++k) wv[k] = w_update(xv[k], uv[k] - zv[k], rho, tau);
}

/// V_e ← group_shrink(U_i − U_j − Y_e, λ w_e / ρ); records exact zeros.
inline void update_v(AdmmState& s, const DifferenceOperator& op, double lambda, double rho) {
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be nonnegative");
  op.apply(s.u, s.v);
  s.v -= s.y;
  const auto& edges = op.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    s.v_zero[e] = group_shrink_inplace(s.v.row(e), lambda * edges[e].w / rho) ? 1 : 0;
  }
}

/// Y ← Y + (V − EU), Z ← Z + (W − U); also refreshes the primal residuals.
inline void update_duals(AdmmState& s, const DifferenceOperator& op) {
  const std::size_t p = s.u.cols();
  const auto& edges = op.edges();
  double edge_sq = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto ui = s.u.row(edges[e].i);
    const auto uj = s.u.row(edges[e].j);
    const auto ve = s.v.row(e);
    auto ye = s.y.row(e);
    for (std::size_t c = 0; c < p; ++c) {
      const double r = ve[c] - (ui[c] - uj[c]);
      ye[c] += r;
      edge_sq += r * r;
    }
  }
  double split_sq = 0.0;
  const auto uv = s.u.values();
  const auto wv = s.w.values();
  auto zv = s.z.values();
  for (std::size_t k = 0; k < uv.size(); ++k) {
    const double r = wv[k] - uv[k];
    zv[k] += r;
    split_sq += r * r;
  }
  s.primal_edge = std::sqrt(edge_sq);
  s.primal_split = std::sqrt(split_sq);
}

struct OnewayResult {
  Matrix u;
  /// v_support[e] is true iff the final V row of edge e is nonzero.
  std::vector<bool> v_support;
  int iterations = 0;
  bool converged = false;
  double primal_edge = 0.0;
  double primal_split = 0.0;
  double dual = 0.0;
};

/// Runs ADMM iterations on x starting from the iterate held in s, which is
/// left at the final iterate so that a later call can warm-start from it.
///
/// Stops when both primal residuals and the dual residual
/// ρ‖Eᵀ(V − V_prev) + (W − W_prev)‖_F fall below inner_tol · max(1, ‖x‖_F).
/// Non-convergence returns the last iterate with converged = false.
inline OnewayResult run_admm(const Matrix& x, const DifferenceOperator& op, double lambda, double tau,
                             const SolverConfig& cfg, AdmmState& s) {
  cfg.validate();
  check_tau(tau);
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be nonnegative");
  if (x.rows() != op.n_nodes() || s.u.rows() != x.rows() || s.u.cols() != x.cols() || s.v.rows() != op.n_edges()) {
    throw InvalidInput("admm: state, data and operator dimensions disagree");
  }

  const double tol = cfg.inner_tol * tolerance_scale(frobenius_norm(x));
  const double rho = cfg.rho;
  Matrix v_prev = s.v;
  Matrix w_prev = s.w;
  Matrix dual_vec(x.rows(), x.cols());

  OnewayResult out;
  int it = 1;
  for (; it <= cfg.inner_max_iter; ++it) {
    update_u(s, op);
    update_w(s, x, rho, tau);
    update_v(s, op, lambda, rho);
    update_duals(s, op);
    ++s.iteration;

    // v_prev and w_prev become the increments, then are refreshed below.
    w_prev *= -1.0;
    w_prev += s.w;
    v_prev *= -1.0;
    v_prev += s.v;
    dual_vec = w_prev;
    op.apply_transpose_add(v_prev, dual_vec);
    out.dual = rho * frobenius_norm(dual_vec);

    if (s.primal_edge <= tol && s.primal_split <= tol && out.dual <= tol) {
      out.converged = true;
      break;
    }
    std::copy(s.v.values().begin(), s.v.values().end(), v_prev.values().begin());
    std::copy(s.w.values().begin(), s.w.values().end(), w_prev.values().begin());
  }
  out.iterations = std::min(it, cfg.inner_max_iter);
  out.primal_edge = s.primal_edge;
  out.primal_split = s.primal_split;
  out.v_support.resize(op.n_edges());
  for (std::size_t e = 0; e < op.n_edges(); ++e) out.v_support[e] = !s.v_zero[e];
  out.u = s.u;
  return out;
}

/// Robust convex clustering of the rows of x, cold-started at U = W = x,
/// V = EU, Y = 0, Z = 0.
inline OnewayResult solve_oneway(const Matrix& x, const DifferenceOperator& op, double lambda, double tau,
                                 const SolverConfig& cfg) {
  AdmmState s(x, op);
  return run_admm(x, op, lambda, tau, cfg, s);
}

inline OnewayResult solve_oneway(const Matrix& x, const WeightedEdgeList& g, double lambda, double tau,
                                 const SolverConfig& cfg) {
  return solve_oneway(x, DifferenceOperator(g), lambda, tau, cfg);
}

/// Σ L_τ(x − u) + λ Σ_e w_e ‖u_i − u_j‖₂ over the graph's edges.
inline double oneway_objective(const Matrix& x, const Matrix& u, const WeightedEdgeList& g, double lambda,
                               double tau) {
  double penalty = 0.0;
  for (const auto& e : g.edges) {
    const auto ui = u.row(e.i);
    const auto uj = u.row(e.j);
    double sq = 0.0;
    for (std::size_t c = 0; c < u.cols(); ++c) {
      const double d = ui[c] - uj[c];
      sq += d * d;
    }
    penalty += e.w * std::sqrt(sq);
  }
  return huber_cost(x, u, tau) + lambda * penalty;
}

}  // namespace rcbc
