#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dln/errors.hpp"

namespace dln {

/// Run metadata carried alongside a trajectory.
struct RunInfo {
  std::string model;  // "wide", "compressed" or "altmin"
  std::size_t depth = 0;
  std::size_t rank = 0;  // rhat for compressed/altmin, width for wide
  double eta = 0.0;
  double alpha = 1.0;
  double scale = 0.0;
};

/// One logged iterate. Absent recovery error is NaN; alignment vectors are
/// empty unless ground-truth factors were supplied to the trainer.
struct TrajectoryRecord {
  std::size_t t = 0;
  double train_loss = 0.0;
  double recovery_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> singular_values;
  std::vector<double> align_u;
  std::vector<double> align_v;
  double heldout_rmse = std::numeric_limits<double>::quiet_NaN();
  double heldout_rel_error = std::numeric_limits<double>::quiet_NaN();
  double elapsed_seconds = 0.0;  // cumulative optimizer time, logging excluded

  bool has_heldout() const noexcept { return !std::isnan(heldout_rmse); }
};

struct TrajectoryLog {
  RunInfo info;
  std::vector<TrajectoryRecord> records;

  bool empty() const noexcept { return records.empty(); }
  const TrajectoryRecord& back() const { return records.back(); }
};

namespace detail {
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

// CSV schema (stable):
//   t,train_loss,recovery_error,sv_1..sv_k[,align_u_1..align_u_a,align_v_1..align_v_a]
//   [,heldout_rmse,heldout_rel_error]
// recovery_error is empty when no target was probed. Wall-clock lives in a
// separate timing file (t,elapsed_seconds) so the trajectory itself is
// reproducible byte for byte.
inline void write_trajectory_csv(const TrajectoryLog& log, std::ostream& os) {
  const std::size_t k = log.empty() ? 0 : log.records.front().singular_values.size();
  const std::size_t a = log.empty() ? 0 : log.records.front().align_u.size();
  const bool heldout = !log.empty() && log.records.front().has_heldout();
  os << "t,train_loss,recovery_error";
  for (std::size_t i = 1; i <= k; ++i) os << ",sv_" << i;
  for (std::size_t i = 1; i <= a; ++i) os << ",align_u_" << i;
  for (std::size_t i = 1; i <= a; ++i) os << ",align_v_" << i;
  if (heldout) os << ",heldout_rmse,heldout_rel_error";
  os << '\n';
  for (const auto& r : log.records) {
    os << r.t << ',' << detail::fmt_double(r.train_loss) << ',' << detail::fmt_double(r.recovery_error);
    for (double v : r.singular_values) os << ',' << detail::fmt_double(v);
    for (double v : r.align_u) os << ',' << detail::fmt_double(v);
    for (double v : r.align_v) os << ',' << detail::fmt_double(v);
    if (heldout) os << ',' << detail::fmt_double(r.heldout_rmse) << ',' << detail::fmt_double(r.heldout_rel_error);
    os << '\n';
  }
}

inline void write_timing_csv(const TrajectoryLog& log, std::ostream& os) {
  os << "t,elapsed_seconds\n";
  for (const auto& r : log.records) os << r.t << ',' << detail::fmt_double(r.elapsed_seconds) << '\n';
}

/// One JSON object per logged iterate with the same fields as the CSV.
inline void write_trajectory_jsonl(const TrajectoryLog& log, std::ostream& os) {
  for (const auto& r : log.records) {
    nlohmann::json j;
    j["t"] = r.t;
    j["train_loss"] = r.train_loss;
    j["recovery_error"] = std::isnan(r.recovery_error) ? nlohmann::json(nullptr) : nlohmann::json(r.recovery_error);
    j["singular_values"] = r.singular_values;
    if (!r.align_u.empty()) {
      j["align_u"] = r.align_u;
      j["align_v"] = r.align_v;
    }
    if (r.has_heldout()) {
      j["heldout_rmse"] = r.heldout_rmse;
      j["heldout_rel_error"] = r.heldout_rel_error;
    }
    os << j.dump() << '\n';
  }
}

inline TrajectoryLog read_trajectory_csv(std::istream& is) {
  TrajectoryLog log;
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty trajectory file", 1);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "t" || header[1] != "train_loss" || header[2] != "recovery_error")
    throw ParseError("unexpected trajectory header", 1);
  std::size_t k = 0, a = 0;
  bool heldout = false;
  for (const auto& h : header) {
    if (h.rfind("sv_", 0) == 0) ++k;
    if (h.rfind("align_u_", 0) == 0) ++a;
    if (h == "heldout_rmse") heldout = true;
  }
  const std::size_t width = 3 + k + 2 * a + (heldout ? 2 : 0);
  if (header.size() != width) throw ParseError("unexpected trajectory header", 1);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != width) throw ParseError("wrong column count", line_no);
    auto num = [&](const std::string& s) {
      if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size()) throw ParseError("not a number: '" + s + "'", line_no);
      return v;
    };
    TrajectoryRecord r;
    r.t = static_cast<std::size_t>(std::stoull(cells[0]));
    r.train_loss = num(cells[1]);
    r.recovery_error = num(cells[2]);
    for (std::size_t i = 0; i < k; ++i) r.singular_values.push_back(num(cells[3 + i]));
    for (std::size_t i = 0; i < a; ++i) r.align_u.push_back(num(cells[3 + k + i]));
    for (std::size_t i = 0; i < a; ++i) r.align_v.push_back(num(cells[3 + k + a + i]));
    if (heldout) {
      r.heldout_rmse = num(cells[3 + k + 2 * a]);
      r.heldout_rel_error = num(cells[4 + k + 2 * a]);
    }
    log.records.push_back(std::move(r));
  }
  return log;
}

}  // namespace dln
