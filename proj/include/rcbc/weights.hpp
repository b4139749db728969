#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcbc/error.hpp"
#include "rcbc/huber.hpp"
#include "rcbc/matrix.hpp"

namespace rcbc {

struct WeightedEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double w = 0.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Sparse undirected fusion graph; edges are sorted by (i, j) with i < j.
struct WeightedEdgeList {
  std::size_t n_nodes = 0;
  std::vector<WeightedEdge> edges;
  std::size_t k = 0;
  double xi = 0.0;
  double delta = 0.0;

  std::size_t size() const noexcept { return edges.size(); }
  bool empty() const noexcept { return edges.empty(); }
};

inline constexpr double kDefaultXi = 0.001;

/// (xi, delta) = (0.001, 1.345 · mad(x)).
inline std::pair<double, double> default_weight_params(const Matrix& x) {
  const double sigma = mad(x);
  if (!(sigma > 0.0)) throw DegenerateScale("mad of data is zero; delta cannot be derived from scale");
  return {kDefaultXi, kHuberEfficiency * sigma};
}

/// Σ_j min{(a_j − b_j)², δ²}: squared distance with each coordinate capped at δ.
inline double truncated_distance(std::span<const double> a, std::span<const double> b, double delta) {
  const double cap = delta * delta;
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += std::min(d * d, cap);
  }
  return s;
}

/// Huber-adapted sparse kNN weights over the rows of x.
///
/// Rows are ranked by truncated distance (ties to the smaller index) and
/// the k-nearest relation is symmetrized by union. Each retained pair gets
/// exp(−xi · truncated_distance). Weights that underflow are clamped to the
/// smallest normal double so every retained edge stays strictly positive.
/// For column weights call this on x.transpose().
inline WeightedEdgeList knn_huber_weights(const Matrix& x, std::size_t k, double xi, double delta) {
  const std::size_t n = x.rows();
  if (n < 2) throw InvalidParameter("knn weights need at least two nodes");
  if (k < 1 || k > n - 1) {
    throw InvalidParameter("k must lie in [1, " + std::to_string(n - 1) + "], got " + std::to_string(k));
  }
  if (!(xi > 0.0) || !std::isfinite(xi)) throw InvalidParameter("xi must be positive and finite");
  if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = truncated_distance(x.row(i), x.row(j), delta);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }

  std::vector<char> linked(n * n, 0);
  std::vector<std::size_t> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order[c++] = j;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = dist[i * n + a];
                        const double db = dist[i * n + b];
                        return da < db || (da == db && a < b);
                      });
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = order[r];
      linked[std::min(i, j) * n + std::max(i, j)] = 1;
    }
  }

  WeightedEdgeList g;
  g.n_nodes = n;
  g.k = k;
  g.xi = xi;
  g.delta = delta;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!linked[i * n + j]) continue;
      double w = std::exp(-xi * dist[i * n + j]);
      w = std::max(w, std::numeric_limits<double>::min());
      g.edges.push_back({i, j, w});
    }
  }
  return g;
}

/// Row and column weight settings. Unset xi/delta take the data-driven defaults.
struct WeightSettings {
  std::size_t row_k = 5;
  std::size_t col_k = 5;
  std::optional<double> xi;
  std::optional<double> delta;
};

struct FusionGraphs {
  WeightedEdgeList rows;
  WeightedEdgeList cols;
};

/// Builds both fusion graphs of x; delta defaults to 1.345 · mad(x) for both directions.
inline FusionGraphs make_fusion_graphs(const Matrix& x, const WeightSettings& s) {
  const double xi = s.xi.value_or(kDefaultXi);
  const double delta = s.delta ? *s.delta : default_weight_params(x).second;
  return {knn_huber_weights(x, s.row_k, xi, delta), knn_huber_weights(x.transpose(), s.col_k, xi, delta)};
}

}  // namespace rcbc
