#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rcbc/biclustering.hpp"
#include "rcbc/error.hpp"
#include "rcbc/matrix.hpp"

namespace rcbc {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for an independent stream derived from a base seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  return splitmix64(s);
}

/// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in the open interval (0, 1).
  double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4]{};
};

/// lo, lo + step, ..., hi (inclusive, tolerant to rounding).
inline std::vector<double> mean_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw InvalidParameter("mean grid: need step > 0 and hi >= lo");
  std::vector<double> g;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) g.push_back(lo + step * static_cast<double>(k));
  return g;
}

struct CheckerboardSpec {
  std::size_t n = 100;
  std::size_t p = 100;
  std::size_t row_blocks = 4;
  std::size_t col_blocks = 4;
  std::vector<double> means = mean_grid(-5.0, 5.0, 0.5);
  double sigma = 2.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0 || p == 0) throw InvalidParameter("checkerboard: n and p must be positive");
    if (row_blocks == 0 || row_blocks > n) throw InvalidParameter("checkerboard: need 1 <= row_blocks <= n");
    if (col_blocks == 0 || col_blocks > p) throw InvalidParameter("checkerboard: need 1 <= col_blocks <= p");
    if (means.empty()) throw InvalidParameter("checkerboard: mean grid is empty");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidParameter("checkerboard: sigma must be positive");
  }
};

struct Checkerboard {
  Matrix x0;
  BiclusterLabels truth;
  /// row_blocks × col_blocks table of block means.
  Matrix mu;
};

/// Contiguous near-equal blocks; the first (n mod blocks) blocks get one extra item.
inline std::vector<int> contiguous_blocks(std::size_t n, std::size_t blocks) {
  std::vector<int> labels;
  labels.reserve(n);
  const std::size_t base = n / blocks;
  const std::size_t extra = n % blocks;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    labels.insert(labels.end(), len, static_cast<int>(b));
  }
  return labels;
}

inline Checkerboard make_checkerboard(const CheckerboardSpec& spec) {
  spec.validate();
  Xoshiro256 rng(derive_seed(spec.seed, 0));
  Checkerboard out;
  out.truth.row_labels = contiguous_blocks(spec.n, spec.row_blocks);
  out.truth.col_labels = contiguous_blocks(spec.p, spec.col_blocks);

  out.mu = Matrix(spec.row_blocks, spec.col_blocks);
  std::uniform_int_distribution<std::size_t> pick(0, spec.means.size() - 1);
  for (double& m : out.mu.values()) m = spec.means[pick(rng)];

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> entries(spec.n * spec.p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.p; ++j) {
      const double mu = out.mu(static_cast<std::size_t>(out.truth.row_labels[i]),
                               static_cast<std::size_t>(out.truth.col_labels[j]));
      entries[i * spec.p + j] = mu + spec.sigma * gauss(rng);
    }
  }
  out.x0 = Matrix(spec.n, spec.p, std::move(entries));
  return out;
}

enum class NoiseKind { none, cauchy, lognormal, student_t, pareto };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  /// cauchy: (gamma, x0); lognormal: (mu, sigma); student_t: (nu, -); pareto: (x_m, alpha).
  double a = 0.0;
  double b = 0.0;
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec cauchy(double gamma, double location, std::uint64_t seed = 0) {
    return {NoiseKind::cauchy, gamma, location, seed};
  }
  static NoiseSpec lognormal(double mu, double sigma, std::uint64_t seed = 0) {
    return {NoiseKind::lognormal, mu, sigma, seed};
  }
  static NoiseSpec student_t(double nu, std::uint64_t seed = 0) { return {NoiseKind::student_t, nu, 0.0, seed}; }
  static NoiseSpec pareto(double scale, double shape, std::uint64_t seed = 0) {
    return {NoiseKind::pareto, scale, shape, seed};
  }

  void validate() const {
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    switch (kind) {
      case NoiseKind::none:
        return;
      case NoiseKind::cauchy:
        if (!positive(a) || !std::isfinite(b)) throw InvalidParameter("cauchy: need gamma > 0");
        return;
      case NoiseKind::lognormal:
        if (!std::isfinite(a) || !positive(b)) throw InvalidParameter("lognormal: need sigma > 0");
        return;
      case NoiseKind::student_t:
        if (!positive(a)) throw InvalidParameter("student t: need nu > 0");
        return;
      case NoiseKind::pareto:
        if (!positive(a) || !positive(b)) throw InvalidParameter("pareto: need x_m > 0 and alpha > 0");
        return;
    }
  }
};

inline double cauchy_quantile(double u, double gamma, double location) {
  return location + gamma * std::tan(std::numbers::pi * (u - 0.5));
}

inline double pareto_quantile(double u, double scale, double shape) { return scale * std::pow(u, -1.0 / shape); }

/// One draw from the noise distribution.
class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseSpec& spec)
      : spec_(spec), rng_(derive_seed(spec.seed, 1)), chi2_(spec.kind == NoiseKind::student_t ? spec.a : 1.0) {
    spec.validate();
  }

  double operator()() {
    switch (spec_.kind) {
      case NoiseKind::none:
        return 0.0;
      case NoiseKind::cauchy:
        return cauchy_quantile(rng_.uniform_open(), spec_.a, spec_.b);
      case NoiseKind::lognormal:
        return std::exp(spec_.a + spec_.b * gauss_(rng_));
      case NoiseKind::student_t: {
        const double z = gauss_(rng_);
        return z / std::sqrt(chi2_(rng_) / spec_.a);
      }
      case NoiseKind::pareto:
        return pareto_quantile(rng_.uniform_open(), spec_.a, spec_.b);
    }
    return 0.0;
  }

 private:
  NoiseSpec spec_;
  Xoshiro256 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::chi_squared_distribution<double> chi2_;
};

/// x0 + e with e drawn i.i.d. from the noise distribution (row-major order).
/// Draws that overflow to a non-finite value are redrawn.
inline Matrix add_noise(const Matrix& x0, const NoiseSpec& noise) {
  noise.validate();
  if (noise.kind == NoiseKind::none) return x0;
  NoiseSampler draw(noise);
  Matrix out = x0;
  for (double& v : out.values()) {
    double e = draw();
    while (!std::isfinite(e)) e = draw();
    v += e;
  }
  return out;
}

}  // namespace rcbc
