#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "rcbc/error.hpp"

namespace rcbc {

/// Dense row-major matrix of doubles.
///
/// Entries are checked for finiteness when a matrix is built from external
/// data; arithmetic on already-validated matrices is unchecked.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidInput("matrix: expected " + std::to_string(rows_ * cols_) + " entries, got " +
                         std::to_string(data_.size()));
    }
    for (std::size_t k = 0; k < data_.size(); ++k) {
      if (!std::isfinite(data_[k])) {
        throw InvalidInput("matrix: non-finite entry at row " + std::to_string(k / cols_) +
                           ", column " + std::to_string(k % cols_));
      }
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t p = n == 0 ? 0 : rows.begin()->size();
    std::vector<double> entries;
    entries.reserve(n * p);
    for (const auto& r : rows) {
      if (r.size() != p) throw InvalidInput("matrix: ragged row list");
      entries.insert(entries.end(), r.begin(), r.end());
    }
    return Matrix(n, p, std::move(entries));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t.data_[j * rows_ + i] = data_[i * cols_ + j];
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

  void check_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw InvalidInput("matrix shape mismatch: " + std::to_string(rows_) + "x" +
                         std::to_string(cols_) + " vs " + std::to_string(o.rows_) + "x" +
                         std::to_string(o.cols_));
    }
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double squared_norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double frobenius_norm(const Matrix& m) noexcept { return std::sqrt(squared_norm(m.values())); }

/// ‖a − b‖_F without materializing the difference.
inline double frobenius_distance(const Matrix& a, const Matrix& b) {
  a.check_same_shape(b);
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) {
    const double d = av[k] - bv[k];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Median of a sample; even-length samples use the midpoint of the two
/// central order statistics. Takes its argument by value and reorders it.
inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

/// Gaussian consistency factor for the median absolute deviation.
inline constexpr double kMadConsistency = 1.4826;

/// Consistency-scaled median absolute deviation over all entries.
inline double mad(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("mad: empty sample");
  std::vector<double> v(values.begin(), values.end());
  const double center = median(v);
  for (double& x : v) x = std::abs(x - center);
  return kMadConsistency * median(std::move(v));
}

inline double mad(const Matrix& m) { return mad(m.values()); }

inline double soft_threshold(double a, double b) noexcept {
  const double mag = std::abs(a) - b;
  if (mag <= 0.0) return 0.0;
  return a > 0.0 ? mag : -mag;
}

/// Block soft-thresholding, in place: g ← [1 − t/‖g‖₂]₊ g.
/// Returns true when the result is the exact zero vector.
inline bool group_shrink_inplace(std::span<double> g, double t) noexcept {
  const double norm = std::sqrt(squared_norm(g));
  if (norm <= t) {
    std::fill(g.begin(), g.end(), 0.0);
    return true;
  }
  const double scale = 1.0 - t / norm;
  for (double& x : g) x *= scale;
  return false;
}

inline std::vector<double> group_shrink(std::span<const double> g, double t) {
  std::vector<double> out(g.begin(), g.end());
  group_shrink_inplace(out, t);
  return out;
}

}  // namespace rcbc
