#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dln/baselines.hpp"
#include "dln/checkpoint.hpp"
#include "dln/data.hpp"
#include "dln/diagnostics.hpp"
#include "dln/errors.hpp"
#include "dln/models.hpp"
#include "dln/operators.hpp"
#include "dln/theory.hpp"
#include "dln/trainer.hpp"
#include "dln/trajectory.hpp"

namespace dln {

inline constexpr const char* kLibraryVersion = "1.0.0";

// Flat key = value experiment description. Every field has a config-file key
// of the same name; see README for the schema.
struct ExperimentConfig {
  std::string problem = "factorize";  // factorize | sense | complete | movielens
  std::string model = "all";          // wide | compressed | altmin | all
  std::size_t d = 100;
  std::size_t r = 10;
  std::size_t rhat = 20;
  std::size_t L = 3;
  double eps = 1e-3;
  double eta = 10.0;
  double alpha = 5.0;
  std::size_t T = 3000;
  double p = 0.3;
  std::size_t m = 2000;
  std::vector<std::uint64_t> seeds{0};
  std::size_t log_every = 10;
  std::string out_dir;

  std::string init = "orthogonal";  // orthogonal (wide) + spectral (compressed), or random for both
  double sigma_lo = 0.02;
  double sigma_hi = 0.05;
  std::vector<double> sigma;          // explicit target singular values; overrides the uniform range
  std::string eta_norm = "none";      // none | measurements (step eta / #measurements)
  std::optional<std::size_t> track;   // singular values per log record; default rhat
  bool vectors = false;               // log singular-vector alignment against the truth
  std::optional<double> stop_tol;
  double threshold = 1e-3;            // recovery (or held-out relative) error for iterations-to-threshold
  bool oracle = false;
  std::size_t sweeps = 50;            // AltMin sweeps
  double train_frac = 0.8;
  std::string data_path;
  bool checkpoint = false;
  double divergence_limit = 1e12;
};

/// Per-recipe defaults, chosen so each run finishes in minutes on one core.
inline ExperimentConfig recipe_defaults(const std::string& problem) {
  ExperimentConfig c;
  c.problem = problem;
  if (problem == "factorize") {
    c.T = 8000;
    c.log_every = 20;
  } else if (problem == "complete") {
    c.T = 15000;
    c.log_every = 50;
  } else if (problem == "sense") {
    c.r = 5;
    c.rhat = 10;
    c.alpha = 2.0;
    c.T = 3000;
    c.log_every = 20;
    c.eta_norm = "measurements";
  } else if (problem == "movielens") {
    c.rhat = 10;
    c.eta = 0.5;
    c.alpha = 5.0;
    c.T = 2000;
    c.log_every = 20;
    c.eta_norm = "measurements";
    c.track = 0;
    c.sweeps = 30;
  }
  return c;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) throw ConfigError(key, "not a number: '" + v + "'");
  return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key, "not a non-negative integer: '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::out_of_range&) {
    throw ConfigError(key, "integer out of range: '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "not a boolean: '" + v + "'");
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

inline const std::map<std::string, Field>& config_fields() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    auto size_field = [&](const char* key, std::size_t ExperimentConfig::*mem) {
      f[key] = {[key, mem](ExperimentConfig& c, const std::string& v) { c.*mem = parse_uint(key, v); },
                [mem](const ExperimentConfig& c) { return std::to_string(c.*mem); }};
    };
    auto real_field = [&](const char* key, double ExperimentConfig::*mem) {
      f[key] = {[key, mem](ExperimentConfig& c, const std::string& v) { c.*mem = parse_double(key, v); },
                [mem](const ExperimentConfig& c) { return fmt_double(c.*mem); }};
    };
    auto text_field = [&](const char* key, std::string ExperimentConfig::*mem) {
      f[key] = {[mem](ExperimentConfig& c, const std::string& v) { c.*mem = v; },
                [mem](const ExperimentConfig& c) { return c.*mem; }};
    };
    auto bool_field = [&](const char* key, bool ExperimentConfig::*mem) {
      f[key] = {[key, mem](ExperimentConfig& c, const std::string& v) { c.*mem = parse_bool(key, v); },
                [mem](const ExperimentConfig& c) { return std::string(c.*mem ? "true" : "false"); }};
    };
    text_field("problem", &ExperimentConfig::problem);
    text_field("model", &ExperimentConfig::model);
    size_field("d", &ExperimentConfig::d);
    size_field("r", &ExperimentConfig::r);
    size_field("rhat", &ExperimentConfig::rhat);
    size_field("L", &ExperimentConfig::L);
    real_field("eps", &ExperimentConfig::eps);
    real_field("eta", &ExperimentConfig::eta);
    real_field("alpha", &ExperimentConfig::alpha);
    size_field("T", &ExperimentConfig::T);
    real_field("p", &ExperimentConfig::p);
    size_field("m", &ExperimentConfig::m);
    f["seeds"] = {[](ExperimentConfig& c, const std::string& v) {
                    c.seeds.clear();
                    for (const auto& s : split_list(v)) c.seeds.push_back(parse_uint("seeds", s));
                  },
                  [](const ExperimentConfig& c) {
                    std::string s;
                    for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
                    return s;
                  }};
    size_field("log_every", &ExperimentConfig::log_every);
    text_field("out_dir", &ExperimentConfig::out_dir);
    text_field("init", &ExperimentConfig::init);
    real_field("sigma_lo", &ExperimentConfig::sigma_lo);
    real_field("sigma_hi", &ExperimentConfig::sigma_hi);
    f["sigma"] = {[](ExperimentConfig& c, const std::string& v) {
                    c.sigma.clear();
                    for (const auto& s : split_list(v)) c.sigma.push_back(parse_double("sigma", s));
                  },
                  [](const ExperimentConfig& c) { return fmt_list(c.sigma); }};
    text_field("eta_norm", &ExperimentConfig::eta_norm);
    f["track"] = {[](ExperimentConfig& c, const std::string& v) {
                    if (v.empty()) c.track.reset();
                    else c.track = parse_uint("track", v);
                  },
                  [](const ExperimentConfig& c) { return c.track ? std::to_string(*c.track) : std::string(); }};
    bool_field("vectors", &ExperimentConfig::vectors);
    f["stop_tol"] = {[](ExperimentConfig& c, const std::string& v) {
                       if (v.empty()) c.stop_tol.reset();
                       else c.stop_tol = parse_double("stop_tol", v);
                     },
                     [](const ExperimentConfig& c) { return c.stop_tol ? fmt_double(*c.stop_tol) : std::string(); }};
    real_field("threshold", &ExperimentConfig::threshold);
    bool_field("oracle", &ExperimentConfig::oracle);
    size_field("sweeps", &ExperimentConfig::sweeps);
    real_field("train_frac", &ExperimentConfig::train_frac);
    text_field("data_path", &ExperimentConfig::data_path);
    bool_field("checkpoint", &ExperimentConfig::checkpoint);
    real_field("divergence_limit", &ExperimentConfig::divergence_limit);
    return f;
  }();
  return fields;
}

}  // namespace detail

inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto& fields = detail::config_fields();
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError(key, "unknown key");
  it->second.set(c, detail::trim(value));
}

inline std::string get_config_value(const ExperimentConfig& c, const std::string& key) {
  const auto& fields = detail::config_fields();
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError(key, "unknown key");
  return it->second.get(c);
}

/// Applies "key = value" lines ('#' starts a comment) on top of `c`.
inline void apply_config_text(ExperimentConfig& c, std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    set_config_value(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

inline void write_config_text(const ExperimentConfig& c, std::ostream& os) {
  for (const auto& [key, field] : detail::config_fields()) os << key << " = " << field.get(c) << '\n';
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, field] : detail::config_fields()) j[key] = field.get(c);
  return j;
}

inline void apply_config_json(ExperimentConfig& c, const nlohmann::json& j) {
  for (const auto& [key, value] : j.items())
    set_config_value(c, key, value.is_string() ? value.get<std::string>() : value.dump());
}

/// Loads a config file: a manifest.json from a previous run, or key = value text.
inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  if (std::filesystem::path(path).extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    apply_config_json(base, j.contains("config") ? j.at("config") : j);
  } else {
    apply_config_text(base, is);
  }
  return base;
}

inline std::vector<std::string> models_of(const ExperimentConfig& c) {
  if (c.model != "all") return {c.model};
  if (c.problem == "complete" || c.problem == "movielens") return {"wide", "compressed", "altmin"};
  return {"wide", "compressed"};
}

/// Throws ConfigError naming the first offending field.
inline void validate(const ExperimentConfig& c) {
  const std::vector<std::string> problems{"factorize", "sense", "complete", "movielens"};
  if (std::find(problems.begin(), problems.end(), c.problem) == problems.end())
    throw ConfigError("problem", "must be one of factorize, sense, complete, movielens");
  if (c.model != "wide" && c.model != "compressed" && c.model != "altmin" && c.model != "all")
    throw ConfigError("model", "must be one of wide, compressed, altmin, all");
  if (c.model == "altmin" && c.problem != "complete" && c.problem != "movielens")
    throw ConfigError("model", "altmin is only defined for completion problems");
  if (c.init != "orthogonal" && c.init != "random") throw ConfigError("init", "must be orthogonal or random");
  if (c.eta_norm != "none" && c.eta_norm != "measurements")
    throw ConfigError("eta_norm", "must be none or measurements");
  if (c.L < 2) throw ConfigError("L", "depth must be >= 2");
  if (!(c.eps > 0.0)) throw ConfigError("eps", "must be positive");
  if (!(c.eta > 0.0)) throw ConfigError("eta", "must be positive");
  if (!(c.alpha > 0.0)) throw ConfigError("alpha", "must be positive");
  if (c.T < 1) throw ConfigError("T", "iteration budget must be >= 1");
  if (c.log_every < 1) throw ConfigError("log_every", "must be >= 1");
  if (c.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (c.rhat < 1) throw ConfigError("rhat", "must be >= 1");
  if (c.problem != "movielens") {
    if (c.d < 1) throw ConfigError("d", "must be >= 1");
    if (c.r < 1 || c.r > c.d) throw ConfigError("r", "need 1 <= r <= d");
    if (c.rhat > c.d) throw ConfigError("rhat", "need rhat <= d");
    if (!c.sigma.empty()) {
      if (c.sigma.size() != c.r) throw ConfigError("sigma", "must list exactly r values");
      for (std::size_t i = 0; i < c.sigma.size(); ++i)
        if (!(c.sigma[i] > 0.0) || (i > 0 && c.sigma[i] > c.sigma[i - 1]))
          throw ConfigError("sigma", "values must be positive and non-increasing");
    } else if (!(c.sigma_lo > 0.0) || c.sigma_hi < c.sigma_lo) {
      throw ConfigError("sigma_lo", "need 0 < sigma_lo <= sigma_hi");
    }
  } else {
    if (c.rhat > RatingsDataset::kUsers) throw ConfigError("rhat", "need rhat <= 943");
    if (!(c.train_frac > 0.0 && c.train_frac < 1.0)) throw ConfigError("train_frac", "must be in (0, 1)");
  }
  if (c.problem == "complete" && !(c.p > 0.0 && c.p <= 1.0)) throw ConfigError("p", "must be in (0, 1]");
  if (c.problem == "sense" && c.m < 1) throw ConfigError("m", "must be >= 1");
  if (c.sweeps < 1) throw ConfigError("sweeps", "must be >= 1");
  if (c.oracle) {
    if (c.problem != "factorize") throw ConfigError("oracle", "the recursion oracle applies to factorization only");
    if (c.alpha != 1.0) throw ConfigError("alpha", "the recursion oracle requires alpha = 1");
    if (c.init != "orthogonal") throw ConfigError("init", "the recursion oracle requires spectral initialization");
    const auto ms = models_of(c);
    if (std::find(ms.begin(), ms.end(), "compressed") == ms.end())
      throw ConfigError("model", "the recursion oracle needs the compressed model");
  }
  if (c.out_dir.empty()) throw ConfigError("out_dir", "no output directory given and DLN_OUT_DIR is unset");
}

/// Fills out_dir from DLN_OUT_DIR when empty.
inline void apply_env(ExperimentConfig& c) {
  if (c.out_dir.empty())
    if (const char* env = std::getenv("DLN_OUT_DIR"); env && *env) c.out_dir = env;
}

// ---------------------------------------------------------------------------

/// One problem instance for one seed.
struct ProblemInstance {
  SensingOperator op = SensingOperator::identity(1);
  Measurement y;
  std::optional<LowRankProblem> truth;
  std::vector<HeldOutEntry> test;
  double eta_scale = 1.0;  // multiplier folded into the step
};

inline ProblemInstance make_instance(const ExperimentConfig& c, std::uint64_t seed,
                                     const RatingsDataset* ratings = nullptr) {
  ProblemInstance inst;
  if (c.problem == "movielens") {
    if (!ratings) throw ContractViolation("make_instance: movielens needs a dataset");
    RatingsSplit split = split_ratings(*ratings, c.train_frac, seed);
    inst.op = std::move(split.train_mask);
    inst.y = std::move(split.train_values);
    inst.test = std::move(split.test);
  } else {
    SyntheticSpec spec{c.d, c.r, seed, UniformProfile{c.sigma_lo, c.sigma_hi}};
    if (!c.sigma.empty()) spec.profile = ExplicitProfile{c.sigma};
    inst.truth = gen_lowrank(spec);
    if (c.problem == "factorize") inst.op = SensingOperator::identity(c.d);
    else if (c.problem == "sense") inst.op = gen_gaussian_ops(c.d, c.m, seed);
    else inst.op = gen_mcar_mask(c.d, c.p, seed);
    inst.y = apply(inst.op, inst.truth->m_star);
  }
  if (c.eta_norm == "measurements") inst.eta_scale = 1.0 / static_cast<double>(inst.op.measurements());
  return inst;
}

struct SummaryRow {
  std::uint64_t seed = 0;
  std::string model;
  std::string status;  // ok | diverged
  std::size_t iterations = 0;
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
  double final_error = std::numeric_limits<double>::quiet_NaN();  // recovery, or held-out relative error
  std::optional<std::size_t> iters_to_threshold;
  double train_seconds = 0.0;
  double svd_seconds = 0.0;
  std::size_t parameters = 0;
};

inline void write_summary_header(std::ostream& os, const std::string& prefix = "") {
  os << prefix
     << "seed,model,status,iterations,final_train_loss,final_error,iters_to_threshold,train_seconds,svd_seconds,"
        "parameters\n";
}

inline void write_summary_row(std::ostream& os, const SummaryRow& s, const std::string& prefix = "") {
  os << prefix << s.seed << ',' << s.model << ',' << s.status << ',' << s.iterations << ','
     << detail::fmt_double(s.final_train_loss) << ',' << detail::fmt_double(s.final_error) << ','
     << (s.iters_to_threshold ? std::to_string(*s.iters_to_threshold) : std::string()) << ','
     << detail::fmt_double(s.train_seconds) << ',' << detail::fmt_double(s.svd_seconds) << ',' << s.parameters
     << '\n';
}

struct RunOutcome {
  std::vector<SummaryRow> rows;
  std::vector<OracleReport> oracle_reports;
  bool diverged() const {
    return std::any_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.status != "ok"; });
  }
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

inline double record_error(const TrajectoryRecord& r) {
  return r.has_heldout() ? r.heldout_rel_error : r.recovery_error;
}

inline void finish_summary(SummaryRow& s, const TrajectoryLog& log, double threshold) {
  if (log.empty()) return;
  s.iterations = log.back().t;
  s.final_train_loss = log.back().train_loss;
  s.final_error = record_error(log.back());
  s.train_seconds = log.back().elapsed_seconds;
  for (const auto& r : log.records)
    if (record_error(r) <= threshold) {
      s.iters_to_threshold = r.t;
      break;
    }
}

inline void write_logs(const std::filesystem::path& dir, const TrajectoryLog& log) {
  std::filesystem::create_directories(dir);
  auto csv = open_out(dir / "trajectory.csv");
  write_trajectory_csv(log, csv);
  auto jsonl = open_out(dir / "trajectory.jsonl");
  write_trajectory_jsonl(log, jsonl);
  auto timing = open_out(dir / "timing.csv");
  write_timing_csv(log, timing);
}

}  // namespace detail

/// Runs every (seed, model) pair of `c` and writes artifacts under c.out_dir:
///   manifest.json, config.txt, summary.csv,
///   seed_<s>/{diagnostics.csv, mask.csv?, oracle_report.json?},
///   seed_<s>/<model>/{trajectory.csv, trajectory.jsonl, timing.csv, checkpoint/?}
/// Divergence of one run is recorded in the summary and does not stop others.
inline RunOutcome run_experiment(const ExperimentConfig& c, const std::string& command = "run") {
  validate(c);
  namespace fs = std::filesystem;
  const fs::path out(c.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  std::optional<RatingsDataset> ratings;
  if (c.problem == "movielens") ratings = load_movielens(c.data_path);

  RunOutcome outcome;
  const auto models = models_of(c);
  const std::size_t track = c.track.value_or(c.rhat);
  using clock = std::chrono::steady_clock;

  for (std::uint64_t seed : c.seeds) {
    const fs::path seed_dir = out / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    const ProblemInstance inst = make_instance(c, seed, ratings ? &*ratings : nullptr);
    const std::size_t rows = inst.op.rows(), cols = inst.op.cols();
    if (const auto* mask = std::get_if<CompletionMask>(&inst.op.variant())) {
      auto os = detail::open_out(seed_dir / "mask.csv");
      write_mask_csv(*mask, os);
    }

    Probe probe;
    if (inst.truth) {
      probe = c.vectors ? Probe::with_factors(inst.truth->m_star, inst.truth->u_star, inst.truth->v_star)
                        : Probe::of(inst.truth->m_star);
    } else {
      probe = Probe::held_out(inst.test);
    }
    TrainConfig tc;
    tc.eta = c.eta * inst.eta_scale;
    tc.alpha = c.alpha;
    tc.iterations = c.T;
    tc.log_every = c.log_every;
    tc.stop_tol = c.stop_tol;
    tc.seed = seed;
    tc.track = track;
    tc.divergence_limit = c.divergence_limit;

    std::vector<DiagnosticRow> diag;
    const std::string experiment = c.problem;
    for (const auto& name : models) {
      SummaryRow s;
      s.seed = seed;
      s.model = name;
      s.status = "ok";
      const fs::path model_dir = seed_dir / name;
      try {
        TrajectoryLog log;
        if (name == "wide") {
          Rng rng = Rng(seed).split(10);
          const InitSpec spec = c.init == "random" ? InitSpec::random_uniform(c.eps) : InitSpec::orthogonal(c.eps);
          WideDLN m0 = init_wide(rows, cols, c.L, spec, rng);
          s.parameters = m0.parameter_count();
          auto res = train_wide(std::move(m0), inst.op, inst.y, tc, probe);
          res.log.info.scale = c.eps;
          if (c.checkpoint) save_checkpoint(res.model, model_dir / "checkpoint", c.eps, to_string(spec.mode), seed);
          log = std::move(res.log);
        } else if (name == "compressed") {
          Rng rng = Rng(seed).split(11);
          const auto t0 = clock::now();
          const InitSpec spec = c.init == "random" ? InitSpec::random_uniform(c.eps)
                                                   : InitSpec::spectral(c.eps, surrogate(inst.op, inst.y));
          CompressedDLN m0 = init_compressed(rows, cols, c.L, c.rhat, spec, rng);
          s.svd_seconds = std::chrono::duration<double>(clock::now() - t0).count();
          s.parameters = m0.parameter_count();
          auto res = train_compressed(m0, inst.op, inst.y, tc, probe);
          res.log.info.scale = c.eps;
          if (c.oracle) {
            RecursionParams rp{c.L, tc.eta, c.eps, inst.truth->sigma_star, c.rhat};
            const OracleReport rep = verify_against_training(res.log, RecursionState::initial(rp));
            auto os = detail::open_out(seed_dir / "oracle_report.json");
            nlohmann::json j = rep.to_json();
            j["seed"] = seed;
            os << j.dump(2) << '\n';
            outcome.oracle_reports.push_back(rep);
          }
          if (c.checkpoint) save_checkpoint(res.model, model_dir / "checkpoint", c.eps, to_string(spec.mode), seed);
          log = std::move(res.log);
        } else {
          const auto* mask = std::get_if<CompletionMask>(&inst.op.variant());
          AltMinConfig ac;
          ac.rank = c.rhat;
          ac.sweeps = c.sweeps;
          ac.seed = seed;
          ac.track = track;
          const auto t0 = clock::now();
          const DenseMatrix surr = surrogate(inst.op, inst.y);
          s.svd_seconds = std::chrono::duration<double>(clock::now() - t0).count();
          auto res = altmin_complete(*mask, inst.y, ac, surr, probe);
          s.parameters = res.model.left.size() + res.model.right.size();
          log = std::move(res.log);
        }
        detail::write_logs(model_dir, log);
        detail::finish_summary(s, log, c.threshold);
        auto rows_for_model = tidy_rows(experiment + "/" + name, seed, log);
        diag.insert(diag.end(), rows_for_model.begin(), rows_for_model.end());
      } catch (const DivergenceError& e) {
        s.status = "diverged";
        s.iterations = e.iteration();
      }
      outcome.rows.push_back(std::move(s));
    }
    auto os = detail::open_out(seed_dir / "diagnostics.csv");
    write_diagnostics_csv(diag, os);
  }

  {
    nlohmann::json manifest;
    manifest["tool"] = "dln";
    manifest["version"] = kLibraryVersion;
    manifest["command"] = command;
    manifest["config"] = config_to_json(c);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : outcome.rows) runs.push_back({{"seed", s.seed}, {"model", s.model}, {"status", s.status}});
    manifest["runs"] = runs;
    auto os = detail::open_out(out / "manifest.json");
    os << manifest.dump(2) << '\n';
  }
  {
    auto os = detail::open_out(out / "config.txt");
    write_config_text(c, os);
  }
  {
    auto os = detail::open_out(out / "summary.csv");
    write_summary_header(os);
    for (const auto& s : outcome.rows) write_summary_row(os, s);
  }
  return outcome;
}

/// Runs `c` once per sweep value into out_dir/<axis>_<value>/ and collects a
/// combined summary.csv with the axis value as leading columns.
inline RunOutcome run_ablation(const ExperimentConfig& c, const std::string& axis,
                               const std::vector<std::string>& values) {
  static const std::vector<std::string> axes{"alpha", "rhat", "depth", "init"};
  if (std::find(axes.begin(), axes.end(), axis) == axes.end())
    throw ConfigError("sweep", "axis must be one of alpha, rhat, depth, init");
  if (values.empty()) throw ConfigError("sweep", "no sweep values given");
  validate(c);
  namespace fs = std::filesystem;
  RunOutcome all;
  std::vector<std::pair<std::string, SummaryRow>> rows;
  for (const auto& v : values) {
    ExperimentConfig sub = c;
    set_config_value(sub, axis == "depth" ? "L" : axis, v);
    sub.out_dir = (fs::path(c.out_dir) / (axis + "_" + v)).string();
    RunOutcome o = run_experiment(sub, "ablate");
    for (auto& r : o.rows) rows.emplace_back(v, r);
    all.rows.insert(all.rows.end(), o.rows.begin(), o.rows.end());
  }
  {
    nlohmann::json manifest{{"tool", "dln"}, {"version", kLibraryVersion}, {"command", "ablate"},
                            {"axis", axis},  {"values", values},         {"config", config_to_json(c)}};
    auto ms = detail::open_out(fs::path(c.out_dir) / "manifest.json");
    ms << manifest.dump(2) << '\n';
  }
  auto os = detail::open_out(fs::path(c.out_dir) / "summary.csv");
  write_summary_header(os, "axis,value,");
  for (const auto& [v, r] : rows) write_summary_row(os, r, axis + "," + v + ",");
  return all;
}

}  // namespace dln
