#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "dln/trajectory.hpp"

namespace {

dln::TrajectoryLog sample_log(bool heldout) {
  dln::TrajectoryLog log;
  log.info = {"compressed", 3, 20, 10.0, 5.0, 1e-3};
  for (std::size_t t : {0u, 10u}) {
    dln::TrajectoryRecord r;
    r.t = t;
    r.train_loss = 1.0 / 3.0 + static_cast<double>(t);
    if (t > 0) r.recovery_error = 0.1;
    r.singular_values = {2.5e-9, 1e-300};
    r.align_u = {0.125};
    r.align_v = {0.25};
    if (heldout) {
      r.heldout_rmse = 0.9;
      r.heldout_rel_error = 0.2;
    }
    r.elapsed_seconds = 1.5;
    log.records.push_back(r);
  }
  return log;
}

}  // namespace

TEST(Trajectory, CsvSchemaAndRoundTrip) {
  for (bool heldout : {false, true}) {
    const auto log = sample_log(heldout);
    std::stringstream ss;
    dln::write_trajectory_csv(log, ss);
    std::string header;
    std::getline(std::stringstream(ss.str()), header);
    EXPECT_EQ(header, std::string("t,train_loss,recovery_error,sv_1,sv_2,align_u_1,align_v_1") +
                          (heldout ? ",heldout_rmse,heldout_rel_error" : ""));
    const auto back = dln::read_trajectory_csv(ss);
    ASSERT_EQ(back.records.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(back.records[i].t, log.records[i].t);
      EXPECT_EQ(back.records[i].train_loss, log.records[i].train_loss);
      EXPECT_EQ(back.records[i].singular_values, log.records[i].singular_values);
      EXPECT_EQ(back.records[i].align_v, log.records[i].align_v);
      EXPECT_EQ(back.records[i].has_heldout(), heldout);
    }
    EXPECT_TRUE(std::isnan(back.records[0].recovery_error));
    EXPECT_EQ(back.records[1].recovery_error, 0.1);
  }
}

TEST(Trajectory, CsvOmitsWallClock) {
  std::stringstream ss;
  dln::write_trajectory_csv(sample_log(false), ss);
  EXPECT_EQ(ss.str().find("1.5"), std::string::npos);
  std::stringstream timing;
  dln::write_timing_csv(sample_log(false), timing);
  EXPECT_EQ(timing.str(), "t,elapsed_seconds\n0,1.5\n10,1.5\n");
}

TEST(Trajectory, JsonlFields) {
  std::stringstream ss;
  dln::write_trajectory_jsonl(sample_log(true), ss);
  std::string line;
  std::getline(ss, line);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["t"], 0);
  EXPECT_TRUE(j["recovery_error"].is_null());
  EXPECT_EQ(j["singular_values"].size(), 2u);
  EXPECT_EQ(j["align_u"][0], 0.125);
  EXPECT_EQ(j["heldout_rmse"], 0.9);
  EXPECT_FALSE(j.contains("elapsed_seconds"));
}

TEST(Trajectory, ReaderRejectsMalformedFiles) {
  std::stringstream empty("");
  EXPECT_THROW(dln::read_trajectory_csv(empty), dln::ParseError);
  std::stringstream header("a,b,c\n");
  EXPECT_THROW(dln::read_trajectory_csv(header), dln::ParseError);
  std::stringstream width("t,train_loss,recovery_error,sv_1\n0,1,2\n");
  try {
    dln::read_trajectory_csv(width);
    FAIL() << "expected a parse error";
  } catch (const dln::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::stringstream number("t,train_loss,recovery_error\n0,abc,\n");
  EXPECT_THROW(dln::read_trajectory_csv(number), dln::ParseError);
}
