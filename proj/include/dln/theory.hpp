#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/matrix.hpp"
#include "dln/trajectory.hpp"

namespace dln {

// ---------------------------------------------------------------------------
// Discrete singular-value recursion for the spectrally initialized compressed
// network on full observations (alpha = 1).

struct RecursionParams {
  std::size_t depth = 3;
  double eta = 1.0;
  double scale = 1e-3;                  // eps
  std::vector<double> targets;          // sigma*_1..sigma*_r
  std::size_t rank = 0;                 // rhat; rhat - r components follow beta
};

struct RecursionState {
  std::vector<double> lambda;
  double beta = 0.0;
  std::size_t t = 0;
  RecursionParams params;

  static RecursionState initial(RecursionParams p) {
    detail::require(p.scale > 0.0, "RecursionState: scale must be positive");
    detail::require(p.depth >= 2, "RecursionState: depth must be >= 2");
    detail::require(p.rank >= p.targets.size(), "RecursionState: rhat must be >= r");
    RecursionState s;
    s.lambda.assign(p.targets.size(), p.scale);
    s.beta = p.scale;
    s.params = std::move(p);
    return s;
  }

  /// End-to-end singular values {lambda_i^L} and (rhat - r) copies of beta^L, descending.
  std::vector<double> implied_singular_values() const {
    const double L = static_cast<double>(params.depth);
    std::vector<double> out;
    out.reserve(params.rank);
    for (double l : lambda) out.push_back(std::pow(l, L));
    for (std::size_t i = lambda.size(); i < params.rank; ++i) out.push_back(std::pow(beta, L));
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  }
};

/// lambda_i <- lambda_i (1 - eta (lambda_i^L - sigma*_i) lambda_i^{L-2}),
/// beta <- beta (1 - eta beta^{2(L-1)}).
inline RecursionState theorem1_step(const RecursionState& s) {
  const double L = static_cast<double>(s.params.depth);
  const double eta = s.params.eta;
  RecursionState next = s;
  for (std::size_t i = 0; i < s.lambda.size(); ++i) {
    const double l = s.lambda[i];
    next.lambda[i] = l * (1.0 - eta * (std::pow(l, L) - s.params.targets[i]) * std::pow(l, L - 2.0));
    if (!std::isfinite(next.lambda[i])) throw DivergenceError(s.t + 1, next.lambda[i]);
  }
  next.beta = s.beta * (1.0 - eta * std::pow(s.beta, 2.0 * (L - 1.0)));
  if (!std::isfinite(next.beta)) throw DivergenceError(s.t + 1, next.beta);
  next.t = s.t + 1;
  return next;
}

struct OracleReport {
  double max_rel_dev = 0.0;
  std::optional<std::size_t> first_fail_iter;
  bool pass = true;
  std::size_t compared = 0;
  double tolerance = 1e-6;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["max_rel_dev"] = max_rel_dev;
    j["first_fail_iter"] = first_fail_iter ? nlohmann::json(*first_fail_iter) : nlohmann::json(nullptr);
    j["pass"] = pass;
    j["compared"] = compared;
    j["tolerance"] = tolerance;
    return j;
  }
};

/// Compares logged end-to-end singular values against the recursion run
/// forward from `s0`. The trajectory must log at least rhat values.
inline OracleReport verify_against_training(const TrajectoryLog& traj, const RecursionState& s0,
                                            double tolerance = 1e-6) {
  const std::size_t rhat = s0.params.rank;
  if (traj.info.depth != 0 && traj.info.depth != s0.params.depth)
    throw ContractViolation("verify_against_training: depth mismatch between run and oracle");
  if (traj.info.alpha != 1.0)
    throw ContractViolation("verify_against_training: the recursion holds only for alpha = 1");
  for (const auto& r : traj.records)
    if (r.singular_values.size() < rhat)
      throw ContractViolation("verify_against_training: trajectory logs fewer than rhat singular values");

  OracleReport report;
  report.tolerance = tolerance;
  RecursionState s = s0;
  for (const auto& rec : traj.records) {
    if (rec.t < s.t) throw ContractViolation("verify_against_training: trajectory iterations not increasing");
    while (s.t < rec.t) s = theorem1_step(s);
    const std::vector<double> expect = s.implied_singular_values();
    for (std::size_t i = 0; i < rhat; ++i) {
      const double dev = std::abs(rec.singular_values[i] - expect[i]) / std::abs(expect[i]);
      report.max_rel_dev = std::max(report.max_rel_dev, dev);
      if (!(dev <= tolerance) && !report.first_fail_iter) report.first_fail_iter = rec.t;
    }
    ++report.compared;
  }
  report.pass = !report.first_fail_iter.has_value();
  return report;
}

/// (||A - B||_F^2, ||Sigma_A - Sigma_B||_F^2) with full singular spectra.
inline std::pair<double, double> spectral_lower_bound(const DenseMatrix& a, const DenseMatrix& b) {
  a.check_same_shape(b, "spectral_lower_bound");
  const double lhs = frobenius_norm_sq(a - b);
  const std::vector<double> sa = singular_values(a), sb = singular_values(b);
  double rhs = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) rhs += (sa[i] - sb[i]) * (sa[i] - sb[i]);
  return {lhs, rhs};
}

// ---------------------------------------------------------------------------
// Decoupled gradient flow of end-to-end singular values:
//   d sigma_i / dt = -L sigma_i^{2 - 2/L} (sigma_i - sigma*_i)

struct FlowParams {
  std::size_t depth = 2;
  std::vector<double> targets;
};

struct FlowState {
  std::vector<double> sigma;
  double time = 0.0;
  FlowParams params;
  std::vector<bool> active;  // empty means every component evolves
};

inline std::vector<double> flow_rhs(const FlowState& s, const std::vector<double>& sigma) {
  const double L = static_cast<double>(s.params.depth);
  std::vector<double> d(sigma.size(), 0.0);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!s.active.empty() && !s.active[i]) continue;
    const double x = std::max(sigma[i], 0.0);
    d[i] = -L * std::pow(x, 2.0 - 2.0 / L) * (x - s.params.targets[i]);
  }
  return d;
}

/// Classic RK4 step of size dt, clamped at zero from below.
inline FlowState flow_step(const FlowState& s, double dt) {
  const std::size_t n = s.sigma.size();
  auto shifted = [&](const std::vector<double>& k, double h) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::max(s.sigma[i] + h * k[i], 0.0);
    return x;
  };
  const auto k1 = flow_rhs(s, s.sigma);
  const auto k2 = flow_rhs(s, shifted(k1, dt / 2));
  const auto k3 = flow_rhs(s, shifted(k2, dt / 2));
  const auto k4 = flow_rhs(s, shifted(k3, dt));
  FlowState next = s;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = s.sigma[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(v)) throw NumericalError("flow_integrate: non-finite state", v);
    next.sigma[i] = std::max(v, 0.0);
  }
  next.time = s.time + dt;
  return next;
}

/// Suggested step: 1e-3 * (max sigma*)^{-(1 - 2/L)}.
inline double default_flow_dt(const FlowParams& p) {
  double smax = 0.0;
  for (double v : p.targets) smax = std::max(smax, v);
  if (smax <= 0.0) return 1e-3;
  return 1e-3 * std::pow(smax, -(1.0 - 2.0 / static_cast<double>(p.depth)));
}

inline FlowState flow_integrate(FlowState s, double duration, double dt) {
  detail::require(dt > 0.0, "flow_integrate: dt must be positive");
  detail::require(s.sigma.size() == s.params.targets.size(), "flow_integrate: state/target size mismatch");
  for (double v : s.sigma) detail::require(v >= 0.0, "flow_integrate: singular values must be nonnegative");
  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  for (std::size_t k = 0; k < steps; ++k) s = flow_step(s, dt);
  return s;
}

/// Closed-form L = 2 solution: logistic growth toward sigma* (or
/// sigma0 / (1 + 2 sigma0 t) when sigma* = 0).
inline double flow_closed_form_depth2(double sigma0, double target, double t) {
  if (target == 0.0) return sigma0 / (1.0 + 2.0 * sigma0 * t);
  if (sigma0 == 0.0) return 0.0;
  return target / (1.0 + (target / sigma0 - 1.0) * std::exp(-2.0 * target * t));
}

/// Gating for incremental-style flows: component i starts evolving once
/// component i-1 satisfies (sigma - sigma*)^2 <= c_val.
struct FlowGating {
  double c_val = 0.0;
};

/// Samples the flow every `sample_every` steps (including t = 0 and the end).
inline std::vector<FlowState> flow_trajectory(FlowState s, double duration, double dt, std::size_t sample_every,
                                              std::optional<FlowGating> gating = std::nullopt) {
  detail::require(dt > 0.0 && sample_every >= 1, "flow_trajectory: invalid step parameters");
  const std::size_t n = s.sigma.size();
  auto update_gates = [&](FlowState& st) {
    if (!gating) return;
    st.active.resize(n, false);
    st.active[0] = true;
    for (std::size_t i = 1; i < n; ++i) {
      const double gap = st.sigma[i - 1] - st.params.targets[i - 1];
      if (st.active[i - 1] && gap * gap <= gating->c_val) st.active[i] = true;
    }
  };
  update_gates(s);
  std::vector<FlowState> out{s};
  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  for (std::size_t k = 1; k <= steps; ++k) {
    s = flow_step(s, dt);
    update_gates(s);
    if (k % sample_every == 0 || k == steps) out.push_back(s);
  }
  return out;
}

/// True iff B is at least as close to the targets as A, componentwise, at
/// every common time sample.
inline bool dominance_witness(const std::vector<FlowState>& flow_a, const std::vector<FlowState>& flow_b,
                              double slack = 1e-9) {
  std::size_t ib = 0;
  for (const auto& a : flow_a) {
    while (ib < flow_b.size() && flow_b[ib].time < a.time - 1e-12) ++ib;
    if (ib == flow_b.size()) break;
    const auto& b = flow_b[ib];
    if (std::abs(b.time - a.time) > 1e-12) continue;
    detail::require(a.params.targets == b.params.targets, "dominance_witness: flows have different targets");
    for (std::size_t i = 0; i < a.sigma.size(); ++i) {
      const double target = a.params.targets[i];
      if (std::abs(b.sigma[i] - target) > std::abs(a.sigma[i] - target) + slack) return false;
    }
  }
  return true;
}

}  // namespace dln
