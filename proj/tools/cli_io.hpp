#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rcbc/matrix.hpp"

namespace rcbc::cli {

/// Raised for unreadable or malformed input files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Table {
  Matrix values;
  std::vector<std::string> col_names;  // empty unless read with a header
  std::vector<std::string> row_names;  // empty unless read with row names
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line, std::size_t field) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ", field " + std::to_string(field) + ": not a finite number '" +
                    std::string(s) + "'");
  }
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!detail::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

/// Comma-separated numeric table; optional header row and row-name column.
inline Table read_csv(const std::string& path, bool header, bool rownames) {
  const auto lines = read_lines(path);
  Table t;
  std::size_t first = 0;
  if (header) {
    if (lines.empty()) throw DataError("'" + path + "': missing header row");
    auto names = detail::split(lines[0]);
    if (rownames && !names.empty()) names.erase(names.begin());
    for (auto n : names) t.col_names.emplace_back(n);
    first = 1;
  }
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t k = first; k < lines.size(); ++k) {
    auto fields = detail::split(lines[k]);
    if (rownames) {
      t.row_names.emplace_back(fields.front());
      fields.erase(fields.begin());
    }
    if (k == first) cols = fields.size();
    if (fields.size() != cols || cols == 0) {
      throw DataError("'" + path + "' line " + std::to_string(k + 1) + ": expected " + std::to_string(cols) +
                      " values, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) data.push_back(detail::parse_double(fields[j], k + 1, j + 1));
  }
  const std::size_t rows = lines.size() - first;
  if (rows == 0) throw DataError("'" + path + "': no data rows");
  if (header && t.col_names.size() != cols) throw DataError("'" + path + "': header width does not match data");
  t.values = Matrix(rows, cols, std::move(data));
  return t;
}

inline void write_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& col_names = {},
                      const std::vector<std::string>& row_names = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  if (!col_names.empty()) {
    if (!row_names.empty()) out << ',';
    for (std::size_t j = 0; j < col_names.size(); ++j) out << (j ? "," : "") << col_names[j];
    out << '\n';
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!row_names.empty()) out << row_names[i] << ',';
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_double(m(i, j));
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

/// One label per line, optionally preceded by a name column.
inline void write_labels(const std::string& path, const std::vector<int>& labels,
                         const std::vector<std::string>& names = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!names.empty()) out << names[k] << ',';
    out << labels[k] << '\n';
  }
}

/// Reads a label file: the last field of each line is the integer label.
inline std::vector<int> read_labels(const std::string& path) {
  std::vector<int> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    const auto f = detail::split(line).back();
    int v = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || v < 0) {
      throw DataError("'" + path + "' line " + std::to_string(n) + ": not a nonnegative integer label");
    }
    out.push_back(v);
  }
  if (out.empty()) throw DataError("'" + path + "': no labels");
  return out;
}

/// Indices of the n rows with the largest sample variance, in original order.
inline std::vector<std::size_t> top_variance_rows(const Matrix& x, std::size_t n) {
  std::vector<double> var(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double s = 0.0;
    for (double v : r) s += (v - mean) * (v - mean);
    var[i] = r.size() > 1 ? s / static_cast<double>(r.size() - 1) : 0.0;
  }
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
  idx.resize(std::min(n, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) std::copy(x.row(rows[k]).begin(), x.row(rows[k]).end(), &out(k, 0));
  return out;
}

/// Diverging blue-white-red color for v on [lo, hi] with white at mid.
struct Rgb {
  std::uint8_t r, g, b;
};

inline Rgb diverging_color(double v, double lo, double mid, double hi) {
  const auto to8 = [](double a) { return static_cast<std::uint8_t>(std::lround(std::clamp(a, 0.0, 1.0) * 255.0)); };
  if (v <= mid) {
    const double t = mid > lo ? (v - lo) / (mid - lo) : 1.0;  // 0 = blue, 1 = white
    return {to8(t), to8(t), 255};
  }
  const double t = hi > mid ? (hi - v) / (hi - mid) : 1.0;  // 0 = red, 1 = white
  return {255, to8(t), to8(t)};
}

/// Binary P6 image of m with rows and columns ordered by cluster label.
inline void write_heatmap(const std::string& path, const Matrix& m, const std::vector<int>& row_labels,
                          const std::vector<int>& col_labels, std::size_t scale = 1) {
  const auto order = [](const std::vector<int>& labels) {
    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    return idx;
  };
  const auto ri = order(row_labels);
  const auto ci = order(col_labels);
  const auto v = m.values();
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  const double mid = median(std::vector<double>(v.begin(), v.end()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "P6\n" << m.cols() * scale << ' ' << m.rows() * scale << "\n255\n";
  std::vector<char> line(m.cols() * scale * 3);
  for (std::size_t i : ri) {
    std::size_t pos = 0;
    for (std::size_t j : ci) {
      const Rgb c = diverging_color(m(i, j), lo, mid, hi);
      for (std::size_t s = 0; s < scale; ++s) {
        line[pos++] = static_cast<char>(c.r);
        line[pos++] = static_cast<char>(c.g);
        line[pos++] = static_cast<char>(c.b);
      }
    }
    for (std::size_t s = 0; s < scale; ++s) out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

}  // namespace rcbc::cli
