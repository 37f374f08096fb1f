#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "dln/errors.hpp"
#include "dln/matrix.hpp"

namespace dln {

/// Measurement vector y = A(M).
struct Measurement {
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
  friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Full observation: y = vec(M), row-major.
struct IdentitySensing {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// y_i = <A_i, M> with dense sensing matrices stored contiguously.
class GaussianSensing {
 public:
  GaussianSensing(std::size_t rows, std::size_t cols, std::vector<double> stacked)
      : rows_(rows), cols_(cols), data_(std::make_shared<const std::vector<double>>(std::move(stacked))) {
    detail::require(rows_ * cols_ > 0 && data_->size() % (rows_ * cols_) == 0,
                    "GaussianSensing: buffer is not a whole number of matrices");
    detail::require(!data_->empty(), "GaussianSensing: m must be >= 1");
  }

  explicit GaussianSensing(const std::vector<DenseMatrix>& matrices) : GaussianSensing(stack(matrices)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t count() const noexcept { return data_->size() / (rows_ * cols_); }

  /// Row-major entries of A_i.
  std::span<const double> matrix_data(std::size_t i) const noexcept {
    const std::size_t n = rows_ * cols_;
    return {data_->data() + i * n, n};
  }

  DenseMatrix matrix(std::size_t i) const {
    auto s = matrix_data(i);
    return DenseMatrix(rows_, cols_, std::vector<double>(s.begin(), s.end()));
  }

 private:
  explicit GaussianSensing(std::tuple<std::size_t, std::size_t, std::vector<double>> t)
      : GaussianSensing(std::get<0>(t), std::get<1>(t), std::move(std::get<2>(t))) {}

  static std::tuple<std::size_t, std::size_t, std::vector<double>> stack(const std::vector<DenseMatrix>& ms) {
    detail::require(!ms.empty(), "GaussianSensing: m must be >= 1");
    const std::size_t r = ms.front().rows(), c = ms.front().cols();
    std::vector<double> buf;
    buf.reserve(ms.size() * r * c);
    for (const auto& a : ms) {
      detail::require(a.rows() == r && a.cols() == c, "GaussianSensing: sensing matrices differ in shape");
      buf.insert(buf.end(), a.data().begin(), a.data().end());
    }
    return {r, c, std::move(buf)};
  }

  std::size_t rows_;
  std::size_t cols_;
  std::shared_ptr<const std::vector<double>> data_;
};

/// Observed index set Omega. Entries are kept sorted row-major, which fixes
/// the layout of the measurement vector.
class CompletionMask {
 public:
  using Entry = std::pair<std::size_t, std::size_t>;

  CompletionMask(std::size_t rows, std::size_t cols, std::vector<Entry> entries) : rows_(rows), cols_(cols) {
    linear_.reserve(entries.size());
    for (auto [i, j] : entries) {
      detail::require(i < rows_ && j < cols_, "CompletionMask: index out of range");
      linear_.push_back(i * cols_ + j);
    }
    std::sort(linear_.begin(), linear_.end());
    detail::require(std::adjacent_find(linear_.begin(), linear_.end()) == linear_.end(),
                    "CompletionMask: duplicate index");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t count() const noexcept { return linear_.size(); }

  std::span<const std::size_t> linear_indices() const noexcept { return linear_; }
  Entry entry(std::size_t k) const noexcept { return {linear_[k] / cols_, linear_[k] % cols_}; }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(linear_.size());
    for (std::size_t k = 0; k < linear_.size(); ++k) out.push_back(entry(k));
    return out;
  }

  friend bool operator==(const CompletionMask&, const CompletionMask&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::size_t> linear_;
};

/// Linear map from rows x cols matrices to R^m.
class SensingOperator {
 public:
  using Variant = std::variant<IdentitySensing, GaussianSensing, CompletionMask>;

  SensingOperator(IdentitySensing v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  SensingOperator(GaussianSensing v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  SensingOperator(CompletionMask v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static SensingOperator identity(std::size_t d) { return IdentitySensing{d, d}; }
  static SensingOperator identity(std::size_t rows, std::size_t cols) { return IdentitySensing{rows, cols}; }

  const Variant& variant() const noexcept { return v_; }

  std::size_t rows() const {
    return std::visit([](const auto& o) { return rows_of(o); }, v_);
  }
  std::size_t cols() const {
    return std::visit([](const auto& o) { return cols_of(o); }, v_);
  }
  /// Number of measurements m.
  std::size_t measurements() const {
    return std::visit([](const auto& o) { return count_of(o); }, v_);
  }

  const char* kind() const noexcept {
    switch (v_.index()) {
      case 0: return "identity";
      case 1: return "gaussian";
      default: return "mask";
    }
  }

 private:
  static std::size_t rows_of(const IdentitySensing& o) { return o.rows; }
  static std::size_t rows_of(const GaussianSensing& o) { return o.rows(); }
  static std::size_t rows_of(const CompletionMask& o) { return o.rows(); }
  static std::size_t cols_of(const IdentitySensing& o) { return o.cols; }
  static std::size_t cols_of(const GaussianSensing& o) { return o.cols(); }
  static std::size_t cols_of(const CompletionMask& o) { return o.cols(); }
  static std::size_t count_of(const IdentitySensing& o) { return o.rows * o.cols; }
  static std::size_t count_of(const GaussianSensing& o) { return o.count(); }
  static std::size_t count_of(const CompletionMask& o) { return o.count(); }

  Variant v_;
};

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Dot product with eight interleaved partial sums combined in a fixed order,
// which breaks the add dependency chain but stays reproducible.
inline double dot8(const double* a, const double* x, std::size_t n) noexcept {
  double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8)
    for (std::size_t l = 0; l < 8; ++l) p[l] += a[k + l] * x[k + l];
  double s = ((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7]));
  for (; k < n; ++k) s += a[k] * x[k];
  return s;
}
}  // namespace detail

inline Measurement apply(const SensingOperator& op, const DenseMatrix& m) {
  if (m.rows() != op.rows() || m.cols() != op.cols())
    throw ContractViolation("apply: operator expects " + std::to_string(op.rows()) + "x" +
                            std::to_string(op.cols()) + ", got " + m.shape_string());
  return std::visit(
      detail::overloaded{
          [&](const IdentitySensing&) { return Measurement{{m.data().begin(), m.data().end()}}; },
          [&](const GaussianSensing& g) {
            Measurement out{std::vector<double>(g.count())};
            const double* x = m.data().data();
            const std::size_t n = m.size();
            for (std::size_t i = 0; i < g.count(); ++i) out.y[i] = detail::dot8(g.matrix_data(i).data(), x, n);
            return out;
          },
          [&](const CompletionMask& mask) {
            Measurement out{std::vector<double>(mask.count())};
            auto idx = mask.linear_indices();
            for (std::size_t k = 0; k < idx.size(); ++k) out.y[k] = m.data()[idx[k]];
            return out;
          }},
      op.variant());
}

inline DenseMatrix adjoint_apply(const SensingOperator& op, const Measurement& y) {
  if (y.size() != op.measurements())
    throw ContractViolation("adjoint_apply: expected " + std::to_string(op.measurements()) +
                            " measurements, got " + std::to_string(y.size()));
  DenseMatrix out(op.rows(), op.cols());
  std::visit(detail::overloaded{
                 [&](const IdentitySensing&) { std::copy(y.y.begin(), y.y.end(), out.data().begin()); },
                 [&](const GaussianSensing& g) {
                   double* o = out.data().data();
                   const std::size_t n = out.size();
                   for (std::size_t i = 0; i < g.count(); ++i) {
                     const double* a = g.matrix_data(i).data();
                     const double yi = y.y[i];
                     for (std::size_t k = 0; k < n; ++k) o[k] += yi * a[k];
                   }
                 },
                 [&](const CompletionMask& mask) {
                   auto idx = mask.linear_indices();
                   for (std::size_t k = 0; k < idx.size(); ++k) out.data()[idx[k]] = y.y[k];
                 }},
             op.variant());
  return out;
}

/// Back-projection whose top singular subspaces seed spectral initialization.
///
/// Gaussian: (1/m) sum_i y_i A_i. Mask: (1/|Omega|) P_Omega(M*). Identity: M*
/// itself, with no 1/m factor.
inline DenseMatrix surrogate(const SensingOperator& op, const Measurement& y) {
  DenseMatrix back = adjoint_apply(op, y);
  if (std::holds_alternative<IdentitySensing>(op.variant())) return back;
  back *= 1.0 / static_cast<double>(op.measurements());
  return back;
}

/// Mask serialization: header "row,col" then one 0-based pair per line.
inline void write_mask_csv(const CompletionMask& mask, std::ostream& os) {
  os << "row,col\n";
  for (std::size_t k = 0; k < mask.count(); ++k) {
    auto [i, j] = mask.entry(k);
    os << i << ',' << j << '\n';
  }
}

inline CompletionMask read_mask_csv(std::istream& is, std::size_t rows, std::size_t cols) {
  std::vector<CompletionMask::Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line == "row,col")) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'row,col'", line_no);
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      const unsigned long long i = std::stoull(a, &used_a);
      const unsigned long long j = std::stoull(b, &used_b);
      if (used_a != a.size() || used_b != b.size()) throw ParseError("trailing characters", line_no);
      entries.emplace_back(i, j);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("bad index pair '" + line + "'", line_no);
    }
  }
  return CompletionMask(rows, cols, std::move(entries));
}

}  // namespace dln
