#pragma once

#include <concepts>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/matrix.hpp"
#include "dln/operators.hpp"
#include "dln/random.hpp"

namespace dln {

enum class InitMode { Orthogonal, RandomUniform, Spectral };

inline const char* to_string(InitMode m) noexcept {
  switch (m) {
    case InitMode::Orthogonal: return "orthogonal";
    case InitMode::RandomUniform: return "random";
    case InitMode::Spectral: return "spectral";
  }
  return "?";
}

/// Per-factor initialization scale and scheme. Scale is applied to every
/// factor, so the end-to-end product starts at scale eps^L.
struct InitSpec {
  double scale = 1e-3;
  InitMode mode = InitMode::Orthogonal;
  DenseMatrix surrogate;  // only for Spectral

  static InitSpec orthogonal(double eps) { return {eps, InitMode::Orthogonal, {}}; }
  static InitSpec random_uniform(double eps) { return {eps, InitMode::RandomUniform, {}}; }
  static InitSpec spectral(double eps, DenseMatrix surr) { return {eps, InitMode::Spectral, std::move(surr)}; }
};

namespace detail {

inline void check_chain(std::span<const DenseMatrix> layers, const char* who) {
  require(layers.size() >= 2, std::string(who) + ": depth L must be >= 2");
  for (std::size_t l = 1; l < layers.size(); ++l)
    require(layers[l].cols() == layers[l - 1].rows(),
            std::string(who) + ": layer " + std::to_string(l + 1) + " does not compose with layer " +
                std::to_string(l));
}

/// W_L * ... * W_1, multiplied right to left.
inline DenseMatrix chain_product(std::span<const DenseMatrix> layers) {
  DenseMatrix p = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) p = matmul(layers[l], p);
  return p;
}

}  // namespace detail

/// Wide DLN: L factors, the inner ones width x width. For a square target all
/// factors are d x d; rectangular targets make only the outer factors rectangular.
class WideDLN {
 public:
  explicit WideDLN(std::vector<DenseMatrix> layers) : layers_(std::move(layers)) {
    detail::check_chain(layers_, "WideDLN");
    for (std::size_t l = 1; l + 1 < layers_.size(); ++l)
      detail::require(layers_[l].rows() == layers_[l].cols(), "WideDLN: inner layers must be square");
  }

  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t rows() const noexcept { return layers_.back().rows(); }
  std::size_t cols() const noexcept { return layers_.front().cols(); }
  std::size_t width() const noexcept { return layers_.front().rows(); }

  std::span<const DenseMatrix> layers() const noexcept { return layers_; }
  std::span<DenseMatrix> layers() noexcept { return layers_; }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& w : layers_) n += w.size();
    return n;
  }

  friend bool operator==(const WideDLN&, const WideDLN&) = default;

 private:
  std::vector<DenseMatrix> layers_;
};

/// Compressed DLN: W~_1 is rhat x d_in, L-2 middle factors rhat x rhat, W~_L is d_out x rhat.
class CompressedDLN {
 public:
  explicit CompressedDLN(std::vector<DenseMatrix> layers) : layers_(std::move(layers)) {
    detail::check_chain(layers_, "CompressedDLN");
    const std::size_t r = layers_.front().rows();
    detail::require(r >= 1, "CompressedDLN: rhat must be >= 1");
    for (std::size_t l = 1; l + 1 < layers_.size(); ++l)
      detail::require(layers_[l].rows() == r && layers_[l].cols() == r,
                      "CompressedDLN: middle factors must be rhat x rhat");
  }

  CompressedDLN(DenseMatrix w_first, std::vector<DenseMatrix> mids, DenseMatrix w_last)
      : CompressedDLN(assemble(std::move(w_first), std::move(mids), std::move(w_last))) {}

  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t rank() const noexcept { return layers_.front().rows(); }
  std::size_t rows() const noexcept { return layers_.back().rows(); }
  std::size_t cols() const noexcept { return layers_.front().cols(); }

  const DenseMatrix& w_first() const noexcept { return layers_.front(); }
  const DenseMatrix& w_last() const noexcept { return layers_.back(); }
  std::span<const DenseMatrix> mids() const noexcept { return std::span(layers_).subspan(1, layers_.size() - 2); }

  std::span<const DenseMatrix> layers() const noexcept { return layers_; }
  std::span<DenseMatrix> layers() noexcept { return layers_; }

  /// 2 d rhat + (L-2) rhat^2 for a square target.
  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& w : layers_) n += w.size();
    return n;
  }

  friend bool operator==(const CompressedDLN&, const CompressedDLN&) = default;

 private:
  static std::vector<DenseMatrix> assemble(DenseMatrix first, std::vector<DenseMatrix> mids, DenseMatrix last) {
    std::vector<DenseMatrix> out;
    out.reserve(mids.size() + 2);
    out.push_back(std::move(first));
    for (auto& m : mids) out.push_back(std::move(m));
    out.push_back(std::move(last));
    return out;
  }

  std::vector<DenseMatrix> layers_;
};

template <class M>
concept LayeredModel = requires(const M& m) {
  { m.layers() } -> std::convertible_to<std::span<const DenseMatrix>>;
  { m.depth() } -> std::convertible_to<std::size_t>;
};

template <LayeredModel Model>
DenseMatrix end_to_end(const Model& model) {
  return detail::chain_product(model.layers());
}

/// Wide DLN for a rows x cols target with inner width max(rows, cols).
inline WideDLN init_wide(std::size_t rows, std::size_t cols, std::size_t depth, const InitSpec& spec, Rng& rng) {
  detail::require(depth >= 2, "init_wide: depth must be >= 2");
  detail::require(spec.scale > 0.0, "init_wide: scale must be positive");
  if (spec.mode == InitMode::Spectral)
    throw ContractViolation("init_wide: spectral initialization is unsupported for the wide model");
  const std::size_t width = std::max(rows, cols);
  std::vector<DenseMatrix> layers;
  layers.reserve(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t out = (l + 1 == depth) ? rows : width;
    const std::size_t in = (l == 0) ? cols : width;
    DenseMatrix w(out, in);
    if (spec.mode == InitMode::Orthogonal) {
      // Semi-orthogonal block of a Haar matrix when the factor is rectangular.
      DenseMatrix q = sample_orthogonal(width, rng);
      for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < in; ++j) w(i, j) = spec.scale * q(i, j);
    } else {
      for (double& x : w.data()) x = rng.uniform(-spec.scale, spec.scale);
    }
    layers.push_back(std::move(w));
  }
  return WideDLN(std::move(layers));
}

inline WideDLN init_wide(std::size_t d, std::size_t depth, const InitSpec& spec, Rng& rng) {
  return init_wide(d, d, depth, spec, rng);
}

/// Spectral initialization: middle factors eps * I, outer factors eps-scaled
/// top-rhat singular vectors of the surrogate (W~_L = eps U, W~_1 = eps V^T).
/// RandomUniform draws every factor from Uniform(-eps, eps) instead.
inline CompressedDLN init_compressed(std::size_t rows, std::size_t cols, std::size_t depth, std::size_t rhat,
                                     const InitSpec& spec, Rng& rng) {
  detail::require(depth >= 2, "init_compressed: depth must be >= 2");
  detail::require(rhat >= 1 && rhat <= std::min(rows, cols), "init_compressed: rhat must be in [1, min(rows, cols)]");
  detail::require(spec.scale > 0.0, "init_compressed: scale must be positive");
  const double eps = spec.scale;
  std::vector<DenseMatrix> layers;
  if (spec.mode == InitMode::Spectral) {
    detail::require(spec.surrogate.rows() == rows && spec.surrogate.cols() == cols,
                    "init_compressed: surrogate shape does not match target");
    SvdResult top = truncated_svd(spec.surrogate, rhat);
    layers.push_back(eps * transpose(top.V));
    for (std::size_t l = 1; l + 1 < depth; ++l) layers.push_back(eps * DenseMatrix::identity(rhat));
    layers.push_back(eps * top.U);
  } else if (spec.mode == InitMode::RandomUniform) {
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t out = (l + 1 == depth) ? rows : rhat;
      const std::size_t in = (l == 0) ? cols : rhat;
      DenseMatrix w(out, in);
      for (double& x : w.data()) x = rng.uniform(-eps, eps);
      layers.push_back(std::move(w));
    }
  } else {
    throw ContractViolation("init_compressed: orthogonal mode is defined only for the wide model");
  }
  return CompressedDLN(std::move(layers));
}

inline CompressedDLN init_compressed(std::size_t d, std::size_t depth, std::size_t rhat, const InitSpec& spec,
                                     Rng& rng) {
  return init_compressed(d, d, depth, rhat, spec, rng);
}

/// Loss, end-to-end product and per-layer gradients at one iterate.
struct LossAndGradients {
  double loss = 0.0;
  DenseMatrix end_to_end;
  std::vector<DenseMatrix> gradients;  // gradients[l] for layer W_{l+1}
};

namespace detail {

inline double half_sq_residual(const Measurement& pred, const Measurement& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = pred.y[i] - y.y[i];
    s += r * r;
  }
  return 0.5 * s;
}

/// grad_{W_l} = (W_L...W_{l+1})^T R (W_{l-1}...W_1)^T with R = A^*(A(W_{L:1}) - y),
/// computed by a prefix pass and a backward pass over the chain.
inline LossAndGradients chain_loss_and_gradients(std::span<const DenseMatrix> layers, const SensingOperator& op,
                                                 const Measurement& y) {
  const std::size_t depth = layers.size();
  std::vector<DenseMatrix> prefix;  // prefix[l] = W_{l+1} ... W_1
  prefix.reserve(depth);
  prefix.push_back(layers[0]);
  for (std::size_t l = 1; l < depth; ++l) prefix.push_back(matmul(layers[l], prefix.back()));

  LossAndGradients out;
  Measurement pred = apply(op, prefix.back());
  out.loss = half_sq_residual(pred, y);
  for (std::size_t i = 0; i < y.size(); ++i) pred.y[i] -= y.y[i];
  DenseMatrix back = adjoint_apply(op, pred);

  out.gradients.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    out.gradients[l] = (l == 0) ? back : matmul_nt(back, prefix[l - 1]);
    if (l > 0) back = matmul_tn(layers[l], back);
  }
  out.end_to_end = std::move(prefix.back());
  return out;
}

}  // namespace detail

/// 1/2 ||A(W_{L:1}) - y||^2, no 1/m normalization.
template <LayeredModel Model>
double loss(const Model& model, const SensingOperator& op, const Measurement& y) {
  return detail::half_sq_residual(apply(op, end_to_end(model)), y);
}

template <LayeredModel Model>
std::vector<DenseMatrix> gradients(const Model& model, const SensingOperator& op, const Measurement& y) {
  return detail::chain_loss_and_gradients(model.layers(), op, y).gradients;
}

template <LayeredModel Model>
LossAndGradients loss_and_gradients(const Model& model, const SensingOperator& op, const Measurement& y) {
  return detail::chain_loss_and_gradients(model.layers(), op, y);
}

}  // namespace dln
