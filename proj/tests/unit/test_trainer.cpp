#include <gtest/gtest.h>

#include "dln/data.hpp"
#include "dln/trainer.hpp"

using dln::CompressedDLN;
using dln::DenseMatrix;
using dln::SensingOperator;
using dln::WideDLN;

namespace {

struct Factorization {
  DenseMatrix target;
  SensingOperator op;
  dln::Measurement y;
};

Factorization small_problem(std::size_t d, std::size_t r, std::uint64_t seed) {
  dln::SyntheticSpec spec;
  spec.d = d;
  spec.r = r;
  spec.seed = seed;
  spec.profile = dln::ExplicitProfile{std::vector<double>(r, 1.0)};
  for (std::size_t i = 0; i < r; ++i) std::get<dln::ExplicitProfile>(spec.profile).values[i] = 1.0 - 0.1 * i;
  auto p = dln::gen_lowrank(spec);
  SensingOperator op = SensingOperator::identity(d);
  auto y = dln::apply(op, p.m_star);
  return {p.m_star, op, y};
}

}  // namespace

TEST(Trainer, ScalarHandStep) {
  // a <- a - eta (ab - sigma) b, b <- b - eta (ab - sigma) a with a = 0.5, b = 0.4, sigma = 1, eta = 0.1.
  const WideDLN w({DenseMatrix{{0.5}}, DenseMatrix{{0.4}}});
  const SensingOperator op = SensingOperator::identity(1);
  dln::TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.iterations = 1;
  const auto res = dln::train_wide(w, op, dln::Measurement{{1.0}}, cfg);
  EXPECT_NEAR(res.model.layers()[0](0, 0), 0.532, 1e-15);
  EXPECT_NEAR(res.model.layers()[1](0, 0), 0.44, 1e-15);
  ASSERT_EQ(res.log.records.size(), 2u);
  EXPECT_NEAR(res.log.records[0].train_loss, 0.5 * 0.64, 1e-15);
  EXPECT_NEAR(res.log.records[1].train_loss, 0.5 * std::pow(0.532 * 0.44 - 1.0, 2), 1e-15);
}

TEST(Trainer, CompressedRatesMatchManualDescent) {
  const auto p = small_problem(8, 2, 1);
  dln::Rng rng(2);
  const CompressedDLN c0 = dln::init_compressed(8, 3, 3, dln::InitSpec::random_uniform(0.3), rng);
  for (double alpha : {1.0, 2.5}) {
    dln::TrainConfig cfg;
    cfg.eta = 0.05;
    cfg.alpha = alpha;
    cfg.iterations = 25;
    const auto res = dln::train_compressed(c0, p.op, p.y, cfg);
    std::vector<DenseMatrix> layers(c0.layers().begin(), c0.layers().end());
    for (int t = 0; t < 25; ++t) {
      const auto g = dln::detail::chain_loss_and_gradients(layers, p.op, p.y).gradients;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const double rate = (l == 0 || l + 1 == layers.size()) ? alpha : 1.0;
        layers[l].axpy(-cfg.eta * rate, g[l]);
      }
    }
    for (std::size_t l = 0; l < layers.size(); ++l) EXPECT_EQ(res.model.layers()[l], layers[l]) << alpha;
  }
}

TEST(Trainer, ZeroResidualIsAFixedPoint) {
  dln::Rng rng(3);
  const WideDLN w = dln::init_wide(5, 3, dln::InitSpec::orthogonal(0.7), rng);
  const SensingOperator op = SensingOperator::identity(5);
  dln::TrainConfig cfg;
  cfg.eta = 1.0;
  cfg.iterations = 5;
  const auto res = dln::train_wide(w, op, dln::apply(op, dln::end_to_end(w)), cfg);
  EXPECT_EQ(res.model, w);
  for (const auto& r : res.log.records) EXPECT_EQ(r.train_loss, 0.0);
}

TEST(Trainer, SmallStepLossIsMonotone) {
  const auto p = small_problem(10, 3, 4);
  dln::Rng rng(5);
  dln::TrainConfig cfg;
  cfg.eta = 0.2;
  cfg.iterations = 3000;
  cfg.log_every = 10;
  const auto res = dln::train_wide(dln::init_wide(10, 3, dln::InitSpec::orthogonal(0.1), rng), p.op, p.y, cfg,
                                   dln::Probe::of(p.target));
  for (std::size_t i = 1; i < res.log.records.size(); ++i)
    EXPECT_LE(res.log.records[i].train_loss, res.log.records[i - 1].train_loss);
  EXPECT_LT(res.log.back().recovery_error, 5e-3);
}

TEST(Trainer, LogCadenceAndFinalIterate) {
  const auto p = small_problem(4, 1, 0);
  dln::Rng rng(0);
  dln::TrainConfig cfg;
  cfg.iterations = 10;
  cfg.log_every = 3;
  cfg.eta = 0.1;
  cfg.track = 2;
  const auto res = dln::train_wide(dln::init_wide(4, 2, dln::InitSpec::orthogonal(0.1), rng), p.op, p.y, cfg);
  std::vector<std::size_t> ts;
  for (const auto& r : res.log.records) {
    ts.push_back(r.t);
    EXPECT_EQ(r.singular_values.size(), 2u);
    EXPECT_TRUE(std::isnan(r.recovery_error));
  }
  EXPECT_EQ(ts, (std::vector<std::size_t>{0, 3, 6, 9, 10}));
  EXPECT_EQ(res.log.info.model, "wide");
  EXPECT_EQ(res.log.info.depth, 2u);
}

TEST(Trainer, StopTolerance) {
  const auto p = small_problem(6, 2, 7);
  dln::Rng rng(1);
  const auto surr = dln::surrogate(p.op, p.y);
  const CompressedDLN c = dln::init_compressed(6, 3, 2, dln::InitSpec::spectral(0.5, surr), rng);
  dln::TrainConfig cfg;
  cfg.eta = 0.2;
  cfg.iterations = 100000;
  cfg.log_every = 1000;
  cfg.stop_tol = 1e-12;
  const auto res = dln::train_compressed(c, p.op, p.y, cfg);
  EXPECT_LE(res.log.back().train_loss, 1e-12);
  EXPECT_LT(res.log.back().t, 100000u);
  EXPECT_GT(res.log.records[res.log.records.size() - 2].train_loss, 1e-12);
}

TEST(Trainer, DivergenceIsReported) {
  const auto p = small_problem(5, 2, 2);
  dln::Rng rng(1);
  dln::TrainConfig cfg;
  cfg.eta = 50.0;
  cfg.iterations = 200;
  EXPECT_THROW(dln::train_wide(dln::init_wide(5, 3, dln::InitSpec::orthogonal(1.0), rng), p.op, p.y, cfg),
               dln::DivergenceError);
}

TEST(Trainer, RejectsBadConfig) {
  const auto p = small_problem(4, 1, 0);
  dln::Rng rng(0);
  const WideDLN w = dln::init_wide(4, 2, dln::InitSpec::orthogonal(0.1), rng);
  dln::TrainConfig cfg;
  cfg.eta = -1.0;
  EXPECT_THROW(dln::train_wide(w, p.op, p.y, cfg), dln::ContractViolation);
  cfg.eta = 1.0;
  cfg.log_every = 0;
  EXPECT_THROW(dln::train_wide(w, p.op, p.y, cfg), dln::ContractViolation);
  cfg.log_every = 1;
  EXPECT_THROW(dln::train_wide(w, SensingOperator::identity(5), dln::Measurement{std::vector<double>(25)}, cfg),
               dln::ContractViolation);
}

TEST(EndToEndSvd, CompressedCoreMatchesDenseSvd) {
  dln::Rng rng(8);
  for (std::size_t depth : {2u, 3u, 5u}) {
    const CompressedDLN c = dln::init_compressed(12, depth, 4, dln::InitSpec::random_uniform(1.0), rng);
    const auto fast = dln::end_to_end_svd(c);
    const auto full = dln::svd(dln::end_to_end(c));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(fast.S[i], full.S[i], 1e-12 * full.S[0]);
    EXPECT_LT(dln::max_abs(dln::matmul(dln::scale_cols(fast.U, fast.S), dln::transpose(fast.V)) - dln::end_to_end(c)),
              1e-12);
    const auto sv_only = dln::end_to_end_svd(c, false);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sv_only.S[i], full.S[i], 1e-12 * full.S[0]);
  }
}

TEST(Trainer, HeldOutProbe) {
  const auto p = small_problem(4, 1, 3);
  dln::Rng rng(0);
  dln::TrainConfig cfg;
  cfg.iterations = 2;
  std::vector<dln::HeldOutEntry> test{{0, 0, p.target(0, 0)}, {1, 2, p.target(1, 2)}};
  const auto res = dln::train_wide(dln::init_wide(4, 2, dln::InitSpec::orthogonal(0.1), rng), p.op, p.y, cfg,
                                   dln::Probe::held_out(test));
  for (const auto& r : res.log.records) {
    EXPECT_TRUE(r.has_heldout());
    EXPECT_GT(r.heldout_rmse, 0.0);
  }
}
