#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "dln/errors.hpp"
#include "dln/matrix.hpp"
#include "dln/random.hpp"

namespace dln {

/// Thin SVD: U is m x k, S descending and nonnegative, V is n x k, k = min(m, n).
struct SvdResult {
  DenseMatrix U;
  std::vector<double> S;
  DenseMatrix V;

  std::size_t rank_capacity() const noexcept { return S.size(); }
};

struct SvdOptions {
  double tolerance = 1e-14;  // relative off-diagonal threshold |<a_p,a_q>| / (|a_p| |a_q|)
  int max_sweeps = 60;
  bool compute_vectors = true;
};

namespace detail {

/// Column-major scratch used by the Jacobi sweeps.
struct ColumnStore {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;
  double* col(std::size_t j) noexcept { return v.data() + j * rows; }
  const double* col(std::size_t j) const noexcept { return v.data() + j * rows; }
};

inline double dot(const double* x, const double* y, std::size_t n) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline void rotate(double* x, double* y, std::size_t n, double c, double s) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i], yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

/// Fills zero columns of `u` (flagged in `filled == false`) with unit vectors
/// orthogonal to every other column, by Gram-Schmidt over the standard basis.
inline void complete_orthonormal(DenseMatrix& u, std::vector<bool>& filled) {
  const std::size_t m = u.rows(), k = u.cols();
  std::size_t basis = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (filled[j]) continue;
    for (; basis < m; ++basis) {
      std::vector<double> e(m, 0.0);
      e[basis] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < k; ++q) {
          if (!filled[q]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += u(i, q) * e[i];
          for (std::size_t i = 0; i < m; ++i) e[i] -= proj * u(i, q);
        }
      }
      double nrm = 0.0;
      for (double x : e) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < m; ++i) u(i, j) = e[i] / nrm;
        filled[j] = true;
        ++basis;
        break;
      }
    }
  }
}

/// Flips each column pair so the largest-magnitude entry of the U column
/// (first index on ties) is positive.
inline void normalize_signs(DenseMatrix& u, DenseMatrix* v) {
  for (std::size_t j = 0; j < u.cols(); ++j) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) > best_abs) {
        best_abs = std::abs(u(i, j));
        best = i;
      }
    }
    if (u(best, j) < 0.0) {
      for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) = -u(i, j);
      if (v != nullptr)
        for (std::size_t i = 0; i < v->rows(); ++i) (*v)(i, j) = -(*v)(i, j);
    }
  }
}

/// One-sided (Hestenes) Jacobi on a tall matrix (rows >= cols).
inline SvdResult jacobi_svd_tall(const DenseMatrix& a, const SvdOptions& opt) {
  const std::size_t m = a.rows(), n = a.cols();
  ColumnStore g{m, n, std::vector<double>(m * n)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) g.col(j)[i] = a(i, j);
  ColumnStore v{n, n, std::vector<double>(opt.compute_vectors ? n * n : 0)};
  if (opt.compute_vectors)
    for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

  bool converged = n < 2;
  double off = 0.0;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* gp = g.col(p);
        double* gq = g.col(q);
        const double alpha = dot(gp, gp, m);
        const double beta = dot(gq, gq, m);
        const double gamma = dot(gp, gq, m);
        if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) continue;
        const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
        off = std::max(off, rel);
        if (rel <= opt.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(gp, gq, m, c, s);
        if (opt.compute_vectors) rotate(v.col(p), v.col(q), n, c, s);
      }
    }
    converged = off <= opt.tolerance;
  }
  if (!converged) throw NumericalError("svd: Jacobi sweeps did not converge", off);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(g.col(j), g.col(j), m));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult out;
  out.S.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.S[j] = sigma[order[j]];
  if (!opt.compute_vectors) return out;

  out.U = DenseMatrix(m, n);
  out.V = DenseMatrix(n, n);
  std::vector<bool> filled(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    const double s = out.S[j];
    for (std::size_t i = 0; i < n; ++i) out.V(i, j) = v.col(src)[i];
    if (s > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.U(i, j) = g.col(src)[i] / s;
      filled[j] = true;
    }
  }
  complete_orthonormal(out.U, filled);
  return out;
}

}  // namespace detail

/// Deterministic thin SVD by one-sided Jacobi.
///
/// Singular values are sorted descending (stable with respect to the original
/// column order on ties) and each U column is sign-normalized so its
/// largest-magnitude entry is positive, with the matching V column flipped.
inline SvdResult svd(const DenseMatrix& a, const SvdOptions& opt = {}) {
  detail::require(a.all_finite(), "svd: non-finite input");
  if (a.rows() >= a.cols()) {
    SvdResult r = detail::jacobi_svd_tall(a, opt);
    if (opt.compute_vectors) detail::normalize_signs(r.U, &r.V);
    return r;
  }
  SvdResult rt = detail::jacobi_svd_tall(transpose(a), opt);
  SvdResult r{std::move(rt.V), std::move(rt.S), std::move(rt.U)};
  if (opt.compute_vectors) detail::normalize_signs(r.U, &r.V);
  return r;
}

inline std::vector<double> singular_values(const DenseMatrix& a) {
  SvdOptions opt;
  opt.compute_vectors = false;
  return svd(a, opt).S;
}

/// Leading k triplets of svd(a).
inline SvdResult truncated_svd(const DenseMatrix& a, std::size_t k) {
  detail::require(k <= std::min(a.rows(), a.cols()), "truncated_svd: k exceeds min(rows, cols)");
  SvdResult full = svd(a);
  if (k == full.S.size()) return full;
  return SvdResult{leading_cols(full.U, k), std::vector<double>(full.S.begin(), full.S.begin() + k),
                   leading_cols(full.V, k)};
}

/// U diag(S) V^T
inline DenseMatrix reconstruct(const SvdResult& r) { return matmul_nt(scale_cols(r.U, r.S), r.V); }

struct QrResult {
  DenseMatrix Q;  // m x n, orthonormal columns
  DenseMatrix R;  // n x n, upper triangular
};

/// Thin Householder QR of a matrix with rows >= cols.
inline QrResult householder_qr(const DenseMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  detail::require(m >= n, "householder_qr: requires rows >= cols");
  DenseMatrix work = a;
  std::vector<std::vector<double>> reflectors(n);
  for (std::size_t k = 0; k < n; ++k) {
    double norm_x = 0.0;
    for (std::size_t i = k; i < m; ++i) norm_x += work(i, k) * work(i, k);
    norm_x = std::sqrt(norm_x);
    std::vector<double> v(m - k, 0.0);
    if (norm_x == 0.0) {
      reflectors[k] = std::move(v);
      continue;
    }
    const double alpha = work(k, k) >= 0.0 ? -norm_x : norm_x;
    for (std::size_t i = k; i < m; ++i) v[i - k] = work(i, k);
    v[0] -= alpha;
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    vnorm = std::sqrt(vnorm);
    for (double& x : v) x /= vnorm;
    for (std::size_t j = k; j < n; ++j) {
      double proj = 0.0;
      for (std::size_t i = k; i < m; ++i) proj += v[i - k] * work(i, j);
      for (std::size_t i = k; i < m; ++i) work(i, j) -= 2.0 * proj * v[i - k];
    }
    reflectors[k] = std::move(v);
  }
  QrResult out{DenseMatrix(m, n), DenseMatrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) out.R(i, j) = work(i, j);
  for (std::size_t j = 0; j < n; ++j) out.Q(j, j) = 1.0;
  for (std::size_t kk = n; kk-- > 0;) {
    const auto& v = reflectors[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double proj = 0.0;
      for (std::size_t i = kk; i < m; ++i) proj += v[i - kk] * out.Q(i, j);
      if (proj == 0.0) continue;
      for (std::size_t i = kk; i < m; ++i) out.Q(i, j) -= 2.0 * proj * v[i - kk];
    }
  }
  return out;
}

/// Haar-distributed n x n orthogonal matrix: QR of an i.i.d. standard normal
/// matrix with Q's columns flipped to make diag(R) positive.
inline DenseMatrix sample_orthogonal(std::size_t n, Rng& rng) {
  detail::require(n >= 1, "sample_orthogonal: n must be >= 1");
  DenseMatrix z(n, n);
  for (double& x : z.data()) x = rng.normal();
  QrResult qr = householder_qr(z);
  for (std::size_t j = 0; j < n; ++j) {
    if (qr.R(j, j) < 0.0)
      for (std::size_t i = 0; i < n; ++i) qr.Q(i, j) = -qr.Q(i, j);
  }
  return std::move(qr.Q);
}

/// Solves (A + damping I) x = b for symmetric positive semi-definite A via Cholesky.
inline std::vector<double> solve_spd(DenseMatrix a, std::vector<double> b, double damping = 0.0) {
  const std::size_t n = a.rows();
  detail::require(a.cols() == n && b.size() == n, "solve_spd: shape mismatch");
  for (std::size_t i = 0; i < n; ++i) a(i, i) += damping;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) throw NumericalError("solve_spd: matrix not positive definite", d);
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return b;
}

/// Orthonormality residual ||Q^T Q - I||_F.
inline double orthonormality_residual(const DenseMatrix& q) {
  DenseMatrix g = matmul_tn(q, q);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

}  // namespace dln
