#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dln/diagnostics.hpp"
#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/matrix.hpp"
#include "dln/operators.hpp"
#include "dln/random.hpp"

namespace dln {

/// sigma*_i drawn i.i.d. from Uniform[lo, hi] and sorted descending.
struct UniformProfile {
  double lo = 0.02;
  double hi = 0.05;
};

/// Given singular values, used as-is (must be descending and positive).
struct ExplicitProfile {
  std::vector<double> values;
};

struct SyntheticSpec {
  std::size_t d = 100;
  std::size_t r = 10;
  std::uint64_t seed = 0;
  std::variant<UniformProfile, ExplicitProfile> profile = UniformProfile{};
};

struct LowRankProblem {
  DenseMatrix m_star;
  DenseMatrix u_star;  // d x r
  std::vector<double> sigma_star;
  DenseMatrix v_star;  // d x r
};

// Seed streams: 1 = U*, 2 = V*, 3 = sigma*.
inline LowRankProblem gen_lowrank(const SyntheticSpec& spec) {
  detail::require(spec.r >= 1 && spec.r <= spec.d, "gen_lowrank: need 1 <= r <= d");
  const Rng base(spec.seed);
  Rng ru = base.split(1), rv = base.split(2), rs = base.split(3);
  LowRankProblem p;
  p.u_star = leading_cols(sample_orthogonal(spec.d, ru), spec.r);
  p.v_star = leading_cols(sample_orthogonal(spec.d, rv), spec.r);
  if (const auto* u = std::get_if<UniformProfile>(&spec.profile)) {
    detail::require(u->lo > 0.0 && u->hi >= u->lo, "gen_lowrank: uniform profile needs 0 < lo <= hi");
    p.sigma_star.resize(spec.r);
    for (double& s : p.sigma_star) s = rs.uniform(u->lo, u->hi);
    std::sort(p.sigma_star.begin(), p.sigma_star.end(), std::greater<>());
  } else {
    p.sigma_star = std::get<ExplicitProfile>(spec.profile).values;
    detail::require(p.sigma_star.size() == spec.r, "gen_lowrank: explicit profile must list r values");
    for (std::size_t i = 0; i < spec.r; ++i) {
      detail::require(p.sigma_star[i] > 0.0, "gen_lowrank: singular values must be positive");
      detail::require(i == 0 || p.sigma_star[i] <= p.sigma_star[i - 1], "gen_lowrank: singular values must be descending");
    }
  }
  p.m_star = matmul_nt(scale_cols(p.u_star, p.sigma_star), p.v_star);
  return p;
}

/// Each entry observed independently with probability p.
inline CompletionMask gen_mcar_mask(std::size_t rows, std::size_t cols, double p, std::uint64_t seed) {
  detail::require(p > 0.0 && p <= 1.0, "gen_mcar_mask: p must be in (0, 1]");
  Rng rng = Rng(seed).split(4);
  std::vector<CompletionMask::Entry> entries;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (p >= 1.0 || rng.bernoulli(p)) entries.emplace_back(i, j);
  if (entries.empty()) throw DataError("gen_mcar_mask: drew an empty mask; choose another seed");
  return CompletionMask(rows, cols, std::move(entries));
}

inline CompletionMask gen_mcar_mask(std::size_t d, double p, std::uint64_t seed) {
  return gen_mcar_mask(d, d, p, seed);
}

inline constexpr std::size_t kDefaultSensingBudgetBytes = std::size_t{2} << 30;

/// m dense d x d sensing matrices with i.i.d. N(0, 1) entries.
inline GaussianSensing gen_gaussian_ops(std::size_t d, std::size_t m, std::uint64_t seed,
                                        std::size_t budget_bytes = kDefaultSensingBudgetBytes) {
  detail::require(m >= 1 && d >= 1, "gen_gaussian_ops: need m >= 1 and d >= 1");
  const double bytes = static_cast<double>(m) * static_cast<double>(d) * static_cast<double>(d) * sizeof(double);
  if (bytes > static_cast<double>(budget_bytes))
    throw ResourceError("gen_gaussian_ops: " + std::to_string(m) + " sensing matrices of size " + std::to_string(d) +
                        "x" + std::to_string(d) + " need " + std::to_string(bytes / (1 << 20)) +
                        " MiB, over the budget of " + std::to_string(budget_bytes >> 20) + " MiB");
  Rng rng = Rng(seed).split(5);
  std::vector<double> buf(m * d * d);
  for (double& x : buf) x = rng.normal();
  return GaussianSensing(d, d, std::move(buf));
}

// ---------------------------------------------------------------------------
// MovieLens 100K

struct Rating {
  std::size_t user = 0;  // 0-based
  std::size_t item = 0;  // 0-based
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct RatingsDataset {
  static constexpr std::size_t kUsers = 943;
  static constexpr std::size_t kItems = 1682;

  std::vector<Rating> entries;
  std::size_t users = kUsers;
  std::size_t items = kItems;
};

/// Parses the u.data layout: "user \t item \t rating \t timestamp" with 1-based ids.
inline RatingsDataset parse_movielens(std::istream& is) {
  RatingsDataset ds;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 4) throw ParseError("expected 4 tab-separated fields, got " + std::to_string(fields.size()), line_no);
    long long vals[4];
    for (int k = 0; k < 4; ++k) {
      std::size_t used = 0;
      try {
        vals[k] = std::stoll(fields[k], &used);
      } catch (const std::exception&) {
        throw ParseError("field " + std::to_string(k + 1) + " is not an integer: '" + fields[k] + "'", line_no);
      }
      if (used != fields[k].size()) throw ParseError("trailing characters in field " + std::to_string(k + 1), line_no);
    }
    if (vals[0] < 1 || vals[1] < 1) throw ParseError("ids are 1-based", line_no);
    const auto user = static_cast<std::size_t>(vals[0] - 1);
    const auto item = static_cast<std::size_t>(vals[1] - 1);
    if (user >= ds.users || item >= ds.items)
      throw DataError("line " + std::to_string(line_no) + ": id outside " + std::to_string(ds.users) + "x" +
                      std::to_string(ds.items));
    if (vals[2] < 1 || vals[2] > 5) throw DataError("line " + std::to_string(line_no) + ": rating outside 1..5");
    if (!seen.emplace(user, item).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate (user, item) pair");
    ds.entries.push_back({user, item, static_cast<double>(vals[2]), vals[3]});
  }
  return ds;
}

inline RatingsDataset load_movielens(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return parse_movielens(is);
}

/// Ratings restricted to the training part, ready for the completion operator.
struct RatingsSplit {
  CompletionMask train_mask;
  Measurement train_values;  // aligned with train_mask's row-major order
  std::vector<HeldOutEntry> test;
};

/// Uniform random split; floor(train_frac * N) entries go to training.
inline RatingsSplit split_ratings(const RatingsDataset& ds, double train_frac, std::uint64_t seed) {
  detail::require(train_frac > 0.0 && train_frac < 1.0, "split_ratings: train_frac must be in (0, 1)");
  const std::size_t n = ds.entries.size();
  detail::require(n >= 2, "split_ratings: need at least two ratings");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).split(6);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  // Small tolerance so fractions such as 1 - 1/N are not floored one short.
  auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::pair<std::size_t, double>> train;  // (linear index, value)
  train.reserve(n_train);
  for (std::size_t k = 0; k < n_train; ++k) {
    const Rating& r = ds.entries[order[k]];
    train.emplace_back(r.user * ds.items + r.item, r.rating);
  }
  std::sort(train.begin(), train.end());
  std::vector<CompletionMask::Entry> idx;
  Measurement values;
  idx.reserve(n_train);
  values.y.reserve(n_train);
  for (auto [lin, v] : train) {
    idx.emplace_back(lin / ds.items, lin % ds.items);
    values.y.push_back(v);
  }
  RatingsSplit split{CompletionMask(ds.users, ds.items, std::move(idx)), std::move(values), {}};
  for (std::size_t k = n_train; k < n; ++k) {
    const Rating& r = ds.entries[order[k]];
    split.test.push_back({r.user, r.item, r.rating});
  }
  return split;
}

}  // namespace dln
