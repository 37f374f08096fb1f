#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "dln/diagnostics.hpp"
#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/models.hpp"
#include "dln/operators.hpp"
#include "dln/trajectory.hpp"

namespace dln {

struct TrainConfig {
  double eta = 1.0;
  double alpha = 1.0;              // outer-factor rate multiplier (compressed only)
  std::size_t iterations = 1;      // T
  std::size_t log_every = 1;
  std::optional<double> stop_tol;  // early stop once train loss <= stop_tol
  std::uint64_t seed = 0;
  std::size_t track = 0;           // singular values logged per iterate
  double divergence_limit = 1e12;
};

/// Optional ground truth used only for logging.
struct Probe {
  std::optional<DenseMatrix> target;
  DenseMatrix u_star;  // leading target singular vectors, columns aligned against
  DenseMatrix v_star;
  std::vector<HeldOutEntry> heldout;  // scored with RMSE and relative error

  static Probe none() { return {}; }
  static Probe of(DenseMatrix target) { return {std::move(target), {}, {}, {}}; }
  static Probe with_factors(DenseMatrix target, DenseMatrix u, DenseMatrix v) {
    return {std::move(target), std::move(u), std::move(v), {}};
  }
  static Probe held_out(std::vector<HeldOutEntry> test) { return {std::nullopt, {}, {}, std::move(test)}; }
  bool tracks_vectors() const noexcept { return u_star.cols() > 0; }
};

template <class Model>
struct TrainResult {
  Model model;
  TrajectoryLog log;
};

/// SVD of the compressed end-to-end product through its rhat x rhat core:
/// with W~_L = Q_a R_a and W~_1^T = Q_b R_b, W~_{L:1} = Q_a (R_a W~_mid R_b^T) Q_b^T.
inline SvdResult end_to_end_svd(const CompressedDLN& model, bool vectors = true) {
  const auto layers = model.layers();
  QrResult left = householder_qr(model.w_last());
  QrResult right = householder_qr(transpose(model.w_first()));
  DenseMatrix core = left.R;
  for (std::size_t l = layers.size() - 1; l-- > 1;) core = matmul(core, layers[l]);
  core = matmul_nt(core, right.R);
  SvdOptions opt;
  opt.compute_vectors = vectors;
  SvdResult c = svd(core, opt);
  if (!vectors) return c;
  SvdResult out{matmul(left.Q, c.U), std::move(c.S), matmul(right.Q, c.V)};
  detail::normalize_signs(out.U, &out.V);
  return out;
}

inline SvdResult end_to_end_svd(const WideDLN& model, bool vectors = true) {
  SvdOptions opt;
  opt.compute_vectors = vectors;
  return svd(end_to_end(model), opt);
}

namespace detail {

template <class Model>
TrajectoryRecord make_record(const Model& model, std::size_t t, double loss, const DenseMatrix& e2e,
                             const TrainConfig& cfg, const Probe& probe, double elapsed) {
  TrajectoryRecord rec;
  rec.t = t;
  rec.train_loss = loss;
  rec.elapsed_seconds = elapsed;
  if (probe.target) rec.recovery_error = recovery_error(e2e, *probe.target);
  if (!probe.heldout.empty()) {
    rec.heldout_rmse = holdout_rmse(e2e, probe.heldout);
    rec.heldout_rel_error = holdout_relative_error(e2e, probe.heldout);
  }
  if (cfg.track > 0 || probe.tracks_vectors()) {
    const bool vectors = probe.tracks_vectors();
    SvdResult s = end_to_end_svd(model, vectors);
    rec.singular_values.assign(cfg.track, 0.0);
    for (std::size_t i = 0; i < std::min(cfg.track, s.S.size()); ++i) rec.singular_values[i] = s.S[i];
    if (vectors) {
      const std::size_t a = std::min({probe.u_star.cols(), s.U.cols()});
      rec.align_u = column_alignment(s.U, probe.u_star, a);
      rec.align_v = column_alignment(s.V, probe.v_star, a);
    }
  }
  return rec;
}

/// Full-batch gradient descent with per-layer rate multipliers. All layer
/// gradients come from the same iterate and are applied together.
template <class Model>
TrainResult<Model> gradient_descent(Model model, const SensingOperator& op, const Measurement& y,
                                    const TrainConfig& cfg, const Probe& probe, const std::vector<double>& rates,
                                    RunInfo info) {
  require(cfg.eta > 0.0, "train: eta must be positive");
  require(cfg.alpha > 0.0, "train: alpha must be positive");
  require(cfg.iterations >= 1, "train: iteration budget must be >= 1");
  require(cfg.log_every >= 1, "train: log_every must be >= 1");
  require(model.rows() == op.rows() && model.cols() == op.cols(), "train: model and operator shapes differ");
  require(y.size() == op.measurements(), "train: measurement length mismatch");

  using clock = std::chrono::steady_clock;
  TrainResult<Model> result{std::move(model), {std::move(info), {}}};
  double elapsed = 0.0;
  for (std::size_t t = 0;; ++t) {
    const auto start = clock::now();
    LossAndGradients lg = loss_and_gradients(result.model, op, y);
    elapsed += std::chrono::duration<double>(clock::now() - start).count();
    if (!std::isfinite(lg.loss) || lg.loss > cfg.divergence_limit) throw DivergenceError(t, lg.loss);

    const bool stop = cfg.stop_tol && lg.loss <= *cfg.stop_tol;
    if (t % cfg.log_every == 0 || t == cfg.iterations || stop)
      result.log.records.push_back(make_record(result.model, t, lg.loss, lg.end_to_end, cfg, probe, elapsed));
    if (stop || t == cfg.iterations) break;

    const auto step_start = clock::now();
    auto layers = result.model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) layers[l].axpy(-cfg.eta * rates[l], lg.gradients[l]);
    elapsed += std::chrono::duration<double>(clock::now() - step_start).count();
  }
  return result;
}

}  // namespace detail

/// Plain GD on every factor with step eta.
inline TrainResult<WideDLN> train_wide(WideDLN model, const SensingOperator& op, const Measurement& y,
                                       const TrainConfig& cfg, const Probe& probe = {}) {
  std::vector<double> rates(model.depth(), 1.0);
  RunInfo info{"wide", model.depth(), model.width(), cfg.eta, 1.0, 0.0};
  return detail::gradient_descent(std::move(model), op, y, cfg, probe, rates, std::move(info));
}

/// GD with step alpha * eta on W~_1 and W~_L and eta on the middle factors.
inline TrainResult<CompressedDLN> train_compressed(CompressedDLN model, const SensingOperator& op,
                                                   const Measurement& y, const TrainConfig& cfg,
                                                   const Probe& probe = {}) {
  std::vector<double> rates(model.depth(), 1.0);
  rates.front() = cfg.alpha;
  rates.back() = cfg.alpha;
  RunInfo info{"compressed", model.depth(), model.rank(), cfg.eta, cfg.alpha, 0.0};
  return detail::gradient_descent(std::move(model), op, y, cfg, probe, rates, std::move(info));
}

}  // namespace dln
