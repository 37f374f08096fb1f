#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dln/errors.hpp"

namespace dln {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, double fill)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Takes ownership of row-major `data`; rejects wrong lengths and non-finite entries.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require(data_.size() == rows_ * cols_, "DenseMatrix: data length != rows * cols");
    for (double v : data_) detail::require(std::isfinite(v), "DenseMatrix: non-finite entry");
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      detail::require(row.size() == cols_, "DenseMatrix: ragged initializer");
      for (double v : row) {
        detail::require(std::isfinite(v), "DenseMatrix: non-finite entry");
        data_.push_back(v);
      }
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> values) {
    DenseMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> col(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  DenseMatrix& operator+=(const DenseMatrix& other) {
    check_same_shape(other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  DenseMatrix& operator-=(const DenseMatrix& other) {
    check_same_shape(other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }

  DenseMatrix& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += s * other
  void axpy(double s, const DenseMatrix& other) {
    check_same_shape(other, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  void check_same_shape(const DenseMatrix& other, const char* op) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
      throw ContractViolation(std::string(op) + ": shape mismatch " + shape_string() + " vs " +
                              other.shape_string());
  }

  std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
inline DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
inline DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < a.rows(); i0 += kBlock)
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += kBlock)
      for (std::size_t i = i0; i < std::min(i0 + kBlock, a.rows()); ++i)
        for (std::size_t j = j0; j < std::min(j0 + kBlock, a.cols()); ++j) t(j, i) = a(i, j);
  return t;
}

/// C = A * B. Every output entry accumulates over k in ascending order, so
/// results are bit-reproducible for a given build.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw ContractViolation("matmul: " + a.shape_string() + " * " + b.shape_string());
  const std::size_t m = a.rows(), n = b.cols(), kk = a.cols();
  DenseMatrix c(m, n);
  constexpr std::size_t kColBlock = 512;
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t j1 = std::min(j0 + kColBlock, n);
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = pc + i * n;
      for (std::size_t k = 0; k < kk; ++k) {
        const double aik = pa[i * kk + k];
        const double* brow = pb + k * n;
        for (std::size_t j = j0; j < j1; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

/// C = A^T * B without forming A^T.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows())
    throw ContractViolation("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  const std::size_t m = a.cols(), n = b.cols(), kk = a.rows();
  DenseMatrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t k = 0; k < kk; ++k) {
    const double* brow = pb + k * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = pa[k * m + i];
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

/// C = A * B^T.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols())
    throw ContractViolation("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  return matmul(a, transpose(b));
}

inline double frobenius_norm_sq(const DenseMatrix& a) noexcept {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

inline double frobenius_norm(const DenseMatrix& a) noexcept { return std::sqrt(frobenius_norm_sq(a)); }

/// Frobenius inner product <A, B> = trace(A^T B).
inline double inner(const DenseMatrix& a, const DenseMatrix& b) {
  a.check_same_shape(b, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline double max_abs(const DenseMatrix& a) noexcept {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

/// Leading `k` columns.
inline DenseMatrix leading_cols(const DenseMatrix& a, std::size_t k) {
  detail::require(k <= a.cols(), "leading_cols: k exceeds column count");
  DenseMatrix out(a.rows(), k);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, j) = a(i, j);
  return out;
}

/// Scales column j by s[j].
inline DenseMatrix scale_cols(DenseMatrix a, std::span<const double> s) {
  detail::require(s.size() == a.cols(), "scale_cols: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= s[j];
  return a;
}

// ---------------------------------------------------------------------------
// Serialization

/// Plain numeric grid, one row per line, comma separated, 17 significant digits.
inline void write_csv(const DenseMatrix& a, std::ostream& os) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (j) os << ',';
      os << a(i, j);
    }
    os << '\n';
  }
}

inline DenseMatrix read_csv(std::istream& is) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0, line_no = 0;
  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ParseError("not a number: '" + cell + "'", line_no);
      if (cell.find_first_not_of(" \t", static_cast<std::size_t>(end - cell.c_str())) != std::string::npos)
        throw ParseError("trailing characters in '" + cell + "'", line_no);
      if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw ParseError("ragged row", line_no);
    ++rows;
  }
  return DenseMatrix(rows, cols, std::move(values));
}

namespace detail {
inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}
inline std::uint64_t get_u64_le(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw IoError("binary matrix: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}
}  // namespace detail

/// Binary layout: "DLNM", u64 rows, u64 cols, rows*cols little-endian f64, row-major.
inline void write_binary(const DenseMatrix& a, std::ostream& os) {
  os.write("DLNM", 4);
  detail::put_u64_le(os, a.rows());
  detail::put_u64_le(os, a.cols());
  for (double v : a.data()) detail::put_u64_le(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("binary matrix: write failed");
}

inline DenseMatrix read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DLNM", 4) != 0) throw IoError("binary matrix: bad magic");
  const std::uint64_t rows = detail::get_u64_le(is);
  const std::uint64_t cols = detail::get_u64_le(is);
  if (cols != 0 && rows > std::numeric_limits<std::uint32_t>::max() / cols)
    throw IoError("binary matrix: implausible shape");
  std::vector<double> data(rows * cols);
  for (double& v : data) v = std::bit_cast<double>(detail::get_u64_le(is));
  return DenseMatrix(rows, cols, std::move(data));
}

inline void save_binary(const DenseMatrix& a, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_binary(a, os);
}

inline DenseMatrix load_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_binary(is);
}

inline void save_csv(const DenseMatrix& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_csv(a, os);
}

inline DenseMatrix load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_csv(is);
}

}  // namespace dln
