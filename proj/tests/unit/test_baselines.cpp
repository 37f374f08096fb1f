#include <gtest/gtest.h>

#include "dln/baselines.hpp"
#include "dln/data.hpp"

using dln::DenseMatrix;

namespace {

dln::LowRankProblem problem(std::size_t d, std::size_t r, std::uint64_t seed) {
  dln::SyntheticSpec spec;
  spec.d = d;
  spec.r = r;
  spec.seed = seed;
  return dln::gen_lowrank(spec);
}

}  // namespace

TEST(AltMin, FullObservationConvergesInAFewSweeps) {
  const auto p = problem(15, 3, 1);
  const auto mask = dln::gen_mcar_mask(15, 1.0, 0);
  const auto y = dln::apply(mask, p.m_star);
  dln::AltMinConfig cfg;
  cfg.rank = 3;
  cfg.sweeps = 3;
  const auto res = dln::altmin_complete(mask, y, cfg, std::nullopt, dln::Probe::of(p.m_star));
  EXPECT_LE(res.log.back().train_loss, 1e-10);
  // The 1e-10 ridge leaves a small bias relative to these O(1e-2) singular values.
  EXPECT_LE(res.log.back().recovery_error, 1e-4);
  // The bias shrinks quadratically with the target scale.
  const DenseMatrix big = 100.0 * p.m_star;
  const auto exact = dln::altmin_complete(mask, dln::apply(mask, big), cfg, std::nullopt, dln::Probe::of(big));
  EXPECT_LE(exact.log.back().recovery_error, 1e-8);
  EXPECT_EQ(res.log.records.size(), 4u);
  EXPECT_EQ(res.half_sweep_losses.size(), 7u);
}

TEST(AltMin, HalfSweepLossesAreMonotone) {
  const auto p = problem(40, 4, 2);
  const auto mask = dln::gen_mcar_mask(40, 0.4, 2);
  const auto y = dln::apply(mask, p.m_star);
  dln::AltMinConfig cfg;
  cfg.rank = 6;
  cfg.sweeps = 20;
  const auto res = dln::altmin_complete(mask, y, cfg);
  for (std::size_t i = 1; i < res.half_sweep_losses.size(); ++i)
    EXPECT_LE(res.half_sweep_losses[i], res.half_sweep_losses[i - 1] * (1.0 + 1e-9) + 1e-18);
}

TEST(AltMin, ExactRankDenseMaskRecovers) {
  const auto p = problem(50, 3, 3);
  const auto mask = dln::gen_mcar_mask(50, 0.9, 3);
  const auto y = dln::apply(mask, p.m_star);
  dln::AltMinConfig cfg;
  cfg.rank = 3;
  cfg.sweeps = 30;
  const auto res = dln::altmin_complete(mask, y, cfg, dln::surrogate(mask, y), dln::Probe::of(p.m_star));
  EXPECT_LT(res.log.back().recovery_error, 1e-6);
}

TEST(AltMin, UnobservedRowIsLeftAlone) {
  // Row 2 has no observations; its left factor keeps the seeded initial values.
  const dln::CompletionMask mask(3, 3, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {0, 2}});
  const dln::Measurement y{{1, 2, 3, 4, 5}};
  dln::AltMinConfig cfg;
  cfg.rank = 1;
  cfg.sweeps = 0;
  const auto init = dln::altmin_complete(mask, y, cfg);
  cfg.sweeps = 4;
  const auto res = dln::altmin_complete(mask, y, cfg);
  EXPECT_EQ(res.model.left(2, 0), init.model.left(2, 0));
  EXPECT_NE(res.model.left(0, 0), init.model.left(0, 0));
}

TEST(AltMin, SurrogateInitMatchesScaledSvd) {
  const auto p = problem(10, 2, 4);
  const auto mask = dln::gen_mcar_mask(10, 1.0, 0);
  const auto y = dln::apply(mask, p.m_star);
  dln::AltMinConfig cfg;
  cfg.rank = 2;
  cfg.sweeps = 0;
  const auto surr = dln::surrogate(mask, y);
  const auto res = dln::altmin_complete(mask, y, cfg, surr);
  EXPECT_LT(dln::max_abs(res.model.estimate() - 100.0 * surr), 1e-14);
}

TEST(AltMin, Contracts) {
  const dln::CompletionMask mask(3, 3, {{0, 0}});
  dln::AltMinConfig cfg;
  cfg.rank = 4;
  EXPECT_THROW(dln::altmin_complete(mask, dln::Measurement{{1}}, cfg), dln::ContractViolation);
  cfg.rank = 1;
  EXPECT_THROW(dln::altmin_complete(mask, dln::Measurement{{1, 2}}, cfg), dln::ContractViolation);
  EXPECT_THROW(dln::altmin_complete(mask, dln::Measurement{{1}}, cfg, DenseMatrix(2, 2)), dln::ContractViolation);
}
