#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/matrix.hpp"
#include "dln/trajectory.hpp"

namespace dln {

/// ||W_hat - M*||_F / ||M*||_F
inline double recovery_error(const DenseMatrix& w_hat, const DenseMatrix& m_star) {
  w_hat.check_same_shape(m_star, "recovery_error");
  const double denom = frobenius_norm(m_star);
  detail::require(denom > 0.0, "recovery_error: target matrix is zero");
  return frobenius_norm(w_hat - m_star) / denom;
}

/// |<x_i, y_i>| for the leading `count` columns of two bases.
inline std::vector<double> column_alignment(const DenseMatrix& x, const DenseMatrix& y, std::size_t count) {
  detail::require(x.rows() == y.rows(), "column_alignment: row mismatch");
  detail::require(count <= x.cols() && count <= y.cols(), "column_alignment: not enough columns");
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j) * y(i, j);
    out[j] = std::abs(s);
  }
  return out;
}

/// Per logged iterate: singular values and absolute alignments with the
/// target's singular vectors.
struct SpectralTrajectory {
  std::vector<std::size_t> t;
  std::vector<std::vector<double>> sigma;
  std::vector<std::vector<double>> align_u;
  std::vector<std::vector<double>> align_v;

  std::size_t size() const noexcept { return t.size(); }
};

inline SpectralTrajectory to_spectral_trajectory(const TrajectoryLog& log) {
  SpectralTrajectory st;
  for (const auto& r : log.records) {
    st.t.push_back(r.t);
    st.sigma.push_back(r.singular_values);
    st.align_u.push_back(r.align_u);
    st.align_v.push_back(r.align_v);
  }
  return st;
}

/// Spectral trajectory of a sequence of end-to-end snapshots against M*,
/// tracking `k` components.
inline SpectralTrajectory alignment(const std::vector<std::pair<std::size_t, DenseMatrix>>& snapshots,
                                    const DenseMatrix& m_star, std::size_t k) {
  const SvdResult target = svd(m_star);
  detail::require(k <= target.S.size(), "alignment: k exceeds target rank capacity");
  SpectralTrajectory st;
  for (const auto& [t, w] : snapshots) {
    const SvdResult cur = svd(w);
    st.t.push_back(t);
    st.sigma.emplace_back(cur.S.begin(), cur.S.begin() + static_cast<std::ptrdiff_t>(k));
    st.align_u.push_back(column_alignment(cur.U, target.U, k));
    st.align_v.push_back(column_alignment(cur.V, target.V, k));
  }
  return st;
}

/// r - ||U_a^T U_b||_F^2 over the leading r columns; 0 iff the spans agree.
inline double subspace_distance(const DenseMatrix& u_a, const DenseMatrix& u_b, std::size_t r) {
  detail::require(u_a.rows() == u_b.rows(), "subspace_distance: row mismatch");
  detail::require(r <= u_a.cols() && r <= u_b.cols(), "subspace_distance: fewer than r columns");
  const DenseMatrix a = leading_cols(u_a, r);
  const DenseMatrix b = leading_cols(u_b, r);
  detail::require(orthonormality_residual(a) <= 1e-8 && orthonormality_residual(b) <= 1e-8,
                  "subspace_distance: inputs are not orthonormal");
  return static_cast<double>(r) - frobenius_norm_sq(matmul_tn(a, b));
}

struct IncrementalConfig {
  std::size_t r = 0;
  /// Absolute tolerance on (sigma_i(t) - sigma*_i)^2. Empty means the
  /// relative default (1e-3 sigma*_i)^2 per component.
  std::optional<double> c_val;
  double c_vec = 1e-3;
  double relative_value_tol = 1e-3;
};

/// Fitting time points t_i: the first logged iterate from which the value
/// condition and both alignment conditions hold for component i at every
/// later logged iterate. Components that never settle are empty.
inline std::vector<std::optional<std::size_t>> detect_incremental(const SpectralTrajectory& st,
                                                                  const std::vector<double>& targets,
                                                                  const IncrementalConfig& cfg) {
  detail::require(cfg.r <= targets.size(), "detect_incremental: r exceeds number of targets");
  std::vector<std::optional<std::size_t>> out(cfg.r);
  for (std::size_t i = 0; i < cfg.r; ++i) {
    const double cval = cfg.c_val.value_or(std::pow(cfg.relative_value_tol * targets[i], 2));
    auto holds = [&](std::size_t n) {
      if (i >= st.sigma[n].size()) return false;
      const double gap = st.sigma[n][i] - targets[i];
      if (gap * gap > cval) return false;
      const bool has_vectors = i < st.align_u[n].size() && i < st.align_v[n].size();
      if (!has_vectors) return false;
      return st.align_u[n][i] >= 1.0 - cfg.c_vec && st.align_v[n][i] >= 1.0 - cfg.c_vec;
    };
    std::size_t first = st.size();
    while (first > 0 && holds(first - 1)) --first;
    if (first < st.size()) out[i] = st.t[first];
  }
  return out;
}

struct HeldOutEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

inline double holdout_rmse(const DenseMatrix& w_hat, const std::vector<HeldOutEntry>& test) {
  detail::require(!test.empty(), "holdout_rmse: empty test set");
  double s = 0.0;
  for (const auto& e : test) {
    detail::require(e.row < w_hat.rows() && e.col < w_hat.cols(), "holdout_rmse: index out of range");
    const double d = w_hat(e.row, e.col) - e.value;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(test.size()));
}

/// ||P_test(W_hat - M)||_F / ||P_test(M)||_F over held-out entries.
inline double holdout_relative_error(const DenseMatrix& w_hat, const std::vector<HeldOutEntry>& test) {
  detail::require(!test.empty(), "holdout_relative_error: empty test set");
  double num = 0.0, den = 0.0;
  for (const auto& e : test) {
    const double d = w_hat(e.row, e.col) - e.value;
    num += d * d;
    den += e.value * e.value;
  }
  detail::require(den > 0.0, "holdout_relative_error: held-out values are all zero");
  return std::sqrt(num / den);
}

/// Tidy diagnostics row keyed by (experiment, seed, t, metric, component).
struct DiagnosticRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t t = 0;
  std::string metric;
  std::size_t component = 0;
  double value = 0.0;
};

inline void write_diagnostics_csv(const std::vector<DiagnosticRow>& rows, std::ostream& os) {
  os << "experiment,seed,t,metric,component,value\n";
  for (const auto& r : rows)
    os << r.experiment << ',' << r.seed << ',' << r.t << ',' << r.metric << ',' << r.component << ','
       << detail::fmt_double(r.value) << '\n';
}

/// Flattens a trajectory into tidy rows (1-based components).
inline std::vector<DiagnosticRow> tidy_rows(const std::string& experiment, std::uint64_t seed,
                                            const TrajectoryLog& log) {
  std::vector<DiagnosticRow> rows;
  for (const auto& r : log.records) {
    rows.push_back({experiment, seed, r.t, "train_loss", 0, r.train_loss});
    if (!std::isnan(r.recovery_error)) rows.push_back({experiment, seed, r.t, "recovery_error", 0, r.recovery_error});
    for (std::size_t i = 0; i < r.singular_values.size(); ++i)
      rows.push_back({experiment, seed, r.t, "singular_value", i + 1, r.singular_values[i]});
    for (std::size_t i = 0; i < r.align_u.size(); ++i)
      rows.push_back({experiment, seed, r.t, "align_u", i + 1, r.align_u[i]});
    for (std::size_t i = 0; i < r.align_v.size(); ++i)
      rows.push_back({experiment, seed, r.t, "align_v", i + 1, r.align_v[i]});
  }
  return rows;
}

}  // namespace dln
