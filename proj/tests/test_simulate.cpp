#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "rcbc/simulate.hpp"

using rcbc::NoiseSpec;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<double> draws(const NoiseSpec& spec, std::size_t count) {
  rcbc::NoiseSampler s(spec);
  std::vector<double> out(count);
  for (double& v : out) v = s();
  return out;
}

}  // namespace

TEST(Simulate, MeanGrid) {
  const auto g = rcbc::mean_grid(-5, 5, 0.5);
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g.front(), -5.0);
  EXPECT_EQ(g.back(), 5.0);
  EXPECT_EQ(rcbc::mean_grid(-6, 6, 0.5).size(), 25u);
}

TEST(Simulate, CheckerboardShapeAndTruth) {
  rcbc::CheckerboardSpec spec;
  const auto cb = rcbc::make_checkerboard(spec);
  EXPECT_EQ(cb.x0.rows(), 100u);
  EXPECT_EQ(cb.x0.cols(), 100u);
  EXPECT_EQ(cb.truth.n_row_clusters(), 4);
  EXPECT_EQ(cb.truth.n_col_clusters(), 4);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(cb.truth.row_labels[i], static_cast<int>(i / 25));
  const auto grid = rcbc::mean_grid(-5, 5, 0.5);
  for (double m : cb.mu.values()) EXPECT_NE(std::find(grid.begin(), grid.end(), m), grid.end());
}

TEST(Simulate, UnevenBlocksPutExtraItemsFirst) {
  EXPECT_EQ(rcbc::contiguous_blocks(7, 3), (std::vector<int>{0, 0, 0, 1, 1, 2, 2}));
}

TEST(Simulate, TinySigmaGivesConstantBlocks) {
  rcbc::CheckerboardSpec spec;
  spec.n = 30;
  spec.p = 20;
  spec.row_blocks = 3;
  spec.col_blocks = 2;
  spec.sigma = 1e-12;
  spec.seed = 4;
  const auto cb = rcbc::make_checkerboard(spec);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      const double mu = cb.mu(static_cast<std::size_t>(cb.truth.row_labels[i]), static_cast<std::size_t>(cb.truth.col_labels[j]));
      EXPECT_NEAR(cb.x0(i, j), mu, 1e-10);
    }
  }
}

TEST(Simulate, Deterministic) {
  rcbc::CheckerboardSpec spec;
  spec.seed = 99;
  EXPECT_EQ(rcbc::make_checkerboard(spec).x0, rcbc::make_checkerboard(spec).x0);
  const auto x = rcbc::make_checkerboard(spec).x0;
  EXPECT_EQ(rcbc::add_noise(x, NoiseSpec::cauchy(1.5, 0, 3)), rcbc::add_noise(x, NoiseSpec::cauchy(1.5, 0, 3)));
  EXPECT_NE(rcbc::add_noise(x, NoiseSpec::cauchy(1.5, 0, 3)), rcbc::add_noise(x, NoiseSpec::cauchy(1.5, 0, 4)));
  spec.seed = 100;
  EXPECT_NE(rcbc::make_checkerboard(spec).x0, x);
}

TEST(Simulate, SpecValidation) {
  rcbc::CheckerboardSpec spec;
  spec.row_blocks = 101;
  EXPECT_THROW(rcbc::make_checkerboard(spec), rcbc::InvalidParameter);
  spec = {};
  spec.means.clear();
  EXPECT_THROW(rcbc::make_checkerboard(spec), rcbc::InvalidParameter);
  spec = {};
  spec.sigma = 0;
  EXPECT_THROW(rcbc::make_checkerboard(spec), rcbc::InvalidParameter);
  EXPECT_THROW(NoiseSpec::cauchy(0, 0).validate(), rcbc::InvalidParameter);
  EXPECT_THROW(NoiseSpec::lognormal(0, -1).validate(), rcbc::InvalidParameter);
  EXPECT_THROW(NoiseSpec::student_t(0).validate(), rcbc::InvalidParameter);
  EXPECT_THROW(NoiseSpec::pareto(1, 0).validate(), rcbc::InvalidParameter);
}

TEST(Simulate, NoNoiseIsIdentity) {
  const auto x = rcbc::make_checkerboard({}).x0;
  EXPECT_EQ(rcbc::add_noise(x, NoiseSpec::none()), x);
}

TEST(Simulate, Quantiles) {
  EXPECT_DOUBLE_EQ(rcbc::pareto_quantile(0.25, 1, 2), 2.0);
  EXPECT_NEAR(rcbc::cauchy_quantile(0.75, 1.5, 0.0), 1.5, 1e-12);
  EXPECT_NEAR(rcbc::cauchy_quantile(0.5, 1.5, 2.0), 2.0, 1e-12);
}

TEST(Simulate, SupportOfPositiveDistributions) {
  for (double v : draws(NoiseSpec::pareto(1.5, 2, 1), 20000)) EXPECT_GE(v, 1.5);
  for (double v : draws(NoiseSpec::lognormal(0, 2, 1), 20000)) EXPECT_GT(v, 0.0);
}

TEST(Simulate, StudentOneMatchesCauchy) {
  const auto t = draws(NoiseSpec::student_t(1.0, 21), 100000);
  const auto c = draws(NoiseSpec::cauchy(1.0, 0.0, 22), 100000);
  const double crit = 1.628 * std::sqrt(2.0 / 100000.0);  // 1% level
  EXPECT_LT(ks_statistic(t, c), crit);
}

TEST(Simulate, LognormalMedian) {
  auto v = draws(NoiseSpec::lognormal(0.7, 2, 5), 100001);
  std::nth_element(v.begin(), v.begin() + 50000, v.end());
  EXPECT_NEAR(std::log(v[50000]), 0.7, 0.03);
}
