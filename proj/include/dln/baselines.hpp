#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/matrix.hpp"
#include "dln/operators.hpp"
#include "dln/random.hpp"
#include "dln/trainer.hpp"
#include "dln/trajectory.hpp"

namespace dln {

/// Two-factor estimate W_hat = left * right.
struct AltMinModel {
  DenseMatrix left;   // rows x rhat
  DenseMatrix right;  // rhat x cols

  DenseMatrix estimate() const { return matmul(left, right); }
  std::size_t rank() const noexcept { return left.cols(); }
};

struct AltMinConfig {
  std::size_t rank = 0;  // rhat
  std::size_t sweeps = 50;
  std::size_t log_every = 1;
  std::uint64_t seed = 0;
  double damping = 1e-10;
  std::size_t track = 0;  // singular values logged per sweep
};

struct AltMinResult {
  AltMinModel model;
  TrajectoryLog log;
  std::vector<double> half_sweep_losses;  // loss at init, then after every half-sweep
};

namespace detail {

// Observed (other index, measurement index) pairs grouped by row or by column.
struct Incidence {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_row;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_col;

  explicit Incidence(const CompletionMask& mask) : by_row(mask.rows()), by_col(mask.cols()) {
    for (std::size_t k = 0; k < mask.count(); ++k) {
      const auto [i, j] = mask.entry(k);
      by_row[i].emplace_back(j, k);
      by_col[j].emplace_back(i, k);
    }
  }
};

inline double altmin_loss(const AltMinModel& m, const CompletionMask& mask, const Measurement& y) {
  const std::size_t r = m.rank();
  double s = 0.0;
  for (std::size_t k = 0; k < mask.count(); ++k) {
    const auto [i, j] = mask.entry(k);
    double p = 0.0;
    for (std::size_t c = 0; c < r; ++c) p += m.left(i, c) * m.right(c, j);
    const double d = p - y.y[k];
    s += d * d;
  }
  return 0.5 * s;
}

// Solves min_x sum_(j,k) (<x, f_j> - y_k)^2 + damping |x|^2 for one factor row,
// where f_j = factor(j) is column j of `right` or row i of `left`.
template <class Factor>
std::vector<double> solve_factor_row(const std::vector<std::pair<std::size_t, std::size_t>>& obs, std::size_t r,
                                     const Measurement& y, double damping, Factor factor) {
  DenseMatrix gram(r, r, 0.0);
  std::vector<double> rhs(r, 0.0);
  std::vector<double> f(r);
  for (auto [j, k] : obs) {
    factor(j, f);
    for (std::size_t a = 0; a < r; ++a) {
      rhs[a] += f[a] * y.y[k];
      for (std::size_t b = 0; b <= a; ++b) gram(a, b) += f[a] * f[b];
    }
  }
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = a + 1; b < r; ++b) gram(a, b) = gram(b, a);
  return solve_spd(std::move(gram), std::move(rhs), damping);
}

}  // namespace detail

/// Alternating exact least squares on the observed entries. Initialized from
/// the top-rhat factors of `surrogate` rescaled by rows*cols (undoing the
/// 1/|Omega| normalization and the sampling rate), or from seeded Gaussian
/// factors when no surrogate is given. Rows or columns without observations
/// keep their initial factor. One log record per sweep.
inline AltMinResult altmin_complete(const CompletionMask& mask, const Measurement& y, const AltMinConfig& cfg,
                                    const std::optional<DenseMatrix>& surrogate_matrix = std::nullopt,
                                    const Probe& probe = {}) {
  const std::size_t rows = mask.rows(), cols = mask.cols(), r = cfg.rank;
  detail::require(r >= 1 && r <= std::min(rows, cols), "altmin_complete: need 1 <= rhat <= min(rows, cols)");
  detail::require(mask.count() >= 1, "altmin_complete: empty observation set");
  detail::require(y.size() == mask.count(), "altmin_complete: measurement length mismatch");
  detail::require(cfg.log_every >= 1, "altmin_complete: log_every must be >= 1");
  detail::require(cfg.damping > 0.0, "altmin_complete: damping must be positive");

  AltMinModel m{DenseMatrix(rows, r, 0.0), DenseMatrix(r, cols, 0.0)};
  if (surrogate_matrix) {
    detail::require(surrogate_matrix->rows() == rows && surrogate_matrix->cols() == cols,
                    "altmin_complete: surrogate shape mismatch");
    const SvdResult s = truncated_svd(*surrogate_matrix, r);
    const double scale = static_cast<double>(rows) * static_cast<double>(cols);
    for (std::size_t c = 0; c < r; ++c) {
      const double w = std::sqrt(s.S[c] * scale);
      for (std::size_t i = 0; i < rows; ++i) m.left(i, c) = s.U(i, c) * w;
      for (std::size_t j = 0; j < cols; ++j) m.right(c, j) = s.V(j, c) * w;
    }
  } else {
    Rng rng = Rng(cfg.seed).split(7);
    const double sd = 1.0 / std::sqrt(static_cast<double>(r));
    for (double& v : m.left.data()) v = sd * rng.normal();
    for (double& v : m.right.data()) v = sd * rng.normal();
  }

  const detail::Incidence inc(mask);
  AltMinResult result{std::move(m), {RunInfo{"altmin", 2, r, 0.0, 1.0, 0.0}, {}}, {}};
  AltMinModel& model = result.model;
  TrainConfig log_cfg;
  log_cfg.track = cfg.track;

  using clock = std::chrono::steady_clock;
  double elapsed = 0.0;
  auto log_sweep = [&](std::size_t t, double loss) {
    const CompressedDLN view(std::vector<DenseMatrix>{model.right, model.left});
    const bool scored = probe.target || !probe.heldout.empty();
    const DenseMatrix e2e = scored ? model.estimate() : DenseMatrix();
    result.log.records.push_back(detail::make_record(view, t, loss, e2e, log_cfg, probe, elapsed));
  };

  double loss = detail::altmin_loss(model, mask, y);
  result.half_sweep_losses.push_back(loss);
  log_sweep(0, loss);
  for (std::size_t sweep = 1; sweep <= cfg.sweeps; ++sweep) {
    const auto start = clock::now();
    for (std::size_t i = 0; i < rows; ++i) {
      if (inc.by_row[i].empty()) continue;
      const auto x = detail::solve_factor_row(inc.by_row[i], r, y, cfg.damping, [&](std::size_t j, std::vector<double>& f) {
        for (std::size_t c = 0; c < r; ++c) f[c] = model.right(c, j);
      });
      for (std::size_t c = 0; c < r; ++c) model.left(i, c) = x[c];
    }
    elapsed += std::chrono::duration<double>(clock::now() - start).count();
    result.half_sweep_losses.push_back(detail::altmin_loss(model, mask, y));

    const auto start2 = clock::now();
    for (std::size_t j = 0; j < cols; ++j) {
      if (inc.by_col[j].empty()) continue;
      const auto x = detail::solve_factor_row(inc.by_col[j], r, y, cfg.damping, [&](std::size_t i, std::vector<double>& f) {
        for (std::size_t c = 0; c < r; ++c) f[c] = model.left(i, c);
      });
      for (std::size_t c = 0; c < r; ++c) model.right(c, j) = x[c];
    }
    elapsed += std::chrono::duration<double>(clock::now() - start2).count();
    loss = detail::altmin_loss(model, mask, y);
    result.half_sweep_losses.push_back(loss);
    if (!std::isfinite(loss)) throw DivergenceError(sweep, loss);
    if (sweep % cfg.log_every == 0 || sweep == cfg.sweeps) log_sweep(sweep, loss);
  }
  return result;
}

}  // namespace dln
