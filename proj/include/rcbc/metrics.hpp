#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "rcbc/biclustering.hpp"
#include "rcbc/error.hpp"

namespace rcbc {

using Labeling = std::vector<int>;

/// Product partition of the n·p cells (row-major): cell (i, j) is labeled by
/// the pair (row_labels[i], col_labels[j]).
inline Labeling cell_labels(const BiclusterLabels& b) {
  const int n_col = b.n_col_clusters();
  Labeling out;
  out.reserve(b.row_labels.size() * b.col_labels.size());
  for (int r : b.row_labels)
    for (int c : b.col_labels) out.push_back(r * n_col + c);
  return out;
}

/// Contingency table between two labelings of the same items.
struct Contingency {
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  std::vector<double> cells;  // nonzero joint counts only
  double total = 0.0;

  Contingency(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw InvalidInput("labelings differ in length");
    if (a.empty()) throw InvalidInput("labelings are empty");
    std::map<int, double> ra;
    std::map<int, double> cb;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t k = 0; k < a.size(); ++k) {
      ra[a[k]] += 1.0;
      cb[b[k]] += 1.0;
      joint[{a[k], b[k]}] += 1.0;
    }
    for (const auto& [_, v] : ra) row_sums.push_back(v);
    for (const auto& [_, v] : cb) col_sums.push_back(v);
    for (const auto& [_, v] : joint) cells.push_back(v);
    total = static_cast<double>(a.size());
  }
};

namespace detail {

inline double pairs(double m) { return m * (m - 1.0) / 2.0; }

inline double sum_pairs(const std::vector<double>& v) {
  double s = 0.0;
  for (double m : v) s += pairs(m);
  return s;
}

inline double entropy(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts) {
    const double q = c / total;
    h -= q * std::log(q);
  }
  return h;
}

}  // namespace detail

/// Fraction of item pairs on which the two partitions agree.
inline double rand_index(const Labeling& a, const Labeling& b) {
  const Contingency t(a, b);
  const double all = detail::pairs(t.total);
  if (all == 0.0) return 1.0;
  const double together_both = detail::sum_pairs(t.cells);
  const double together_a = detail::sum_pairs(t.row_sums);
  const double together_b = detail::sum_pairs(t.col_sums);
  const double disagree = together_a + together_b - 2.0 * together_both;
  return (all - disagree) / all;
}

/// Hubert–Arabie adjusted Rand index. The chance-corrected denominator
/// vanishes only when both partitions are all-in-one or both all-singletons,
/// i.e. identical, and 1 is returned there.
inline double adjusted_rand_index(const Labeling& a, const Labeling& b) {
  const Contingency t(a, b);
  const double all = detail::pairs(t.total);
  const double index = detail::sum_pairs(t.cells);
  const double sa = detail::sum_pairs(t.row_sums);
  const double sb = detail::sum_pairs(t.col_sums);
  const double expected = all == 0.0 ? 0.0 : sa * sb / all;
  const double max_index = 0.5 * (sa + sb);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

struct VariationOfInformation {
  double vi_nats = 0.0;
  /// vi / H(a, b); 0 when the joint entropy is 0.
  double nvi = 0.0;
};

inline VariationOfInformation variation_of_information(const Labeling& a, const Labeling& b) {
  const Contingency t(a, b);
  const double ha = detail::entropy(t.row_sums, t.total);
  const double hb = detail::entropy(t.col_sums, t.total);
  const double hab = detail::entropy(t.cells, t.total);
  VariationOfInformation out;
  out.vi_nats = std::max(0.0, 2.0 * hab - ha - hb);
  out.nvi = hab > 0.0 ? std::min(1.0, out.vi_nats / hab) : 0.0;
  return out;
}

}  // namespace rcbc
