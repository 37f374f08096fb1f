// Experiment runner for wide and compressed deep linear networks.
//
//   dln_cli factorize|sense|complete|movielens [--config FILE] [--key value ...]
//   dln_cli ablate --problem complete --sweep alpha=0.5:10:0.25 [...]
//   dln_cli oracle --kind recursion|flow|verify [...]
//
// Exit codes: 0 success, 2 config error, 3 divergence, 4 I/O error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dln/experiment.hpp"
#include "dln/theory.hpp"
#include "dln/trajectory.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

const std::vector<std::string> kBoolKeys{"vectors", "oracle", "checkpoint"};

bool is_bool_key(const std::string& k) {
  return std::find(kBoolKeys.begin(), kBoolKeys.end(), k) != kBoolKeys.end();
}

std::string flag_name(std::string key) {
  std::string dashed = key;
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  std::string names = "--" + dashed;
  if (dashed != key) names += ",--" + key;
  return names;
}

// Every config key becomes a flag; values are applied after the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::string config_file;

  void attach(CLI::App* app, bool with_problem) {
    app->add_option("--config", config_file, "key = value config file, or a manifest.json to rerun");
    for (const auto& [key, field] : dln::detail::config_fields()) {
      if (key == "problem" && !with_problem) continue;
      const std::string k = key;
      if (is_bool_key(k)) {
        app->add_flag_callback(flag_name(k), [this, k] { values[k] = "true"; }, "enable " + k);
      } else {
        app->add_option_function<std::string>(flag_name(k), [this, k](const std::string& v) { values[k] = v; },
                                              "config key '" + k + "'");
      }
    }
  }

  // Recipe defaults come from the subcommand, else the flags, else the
  // config file, else matrix completion.
  dln::ExperimentConfig resolve(const std::string& problem) const {
    std::string prob = problem;
    if (auto it = values.find("problem"); prob.empty() && it != values.end()) prob = it->second;
    if (prob.empty() && !config_file.empty()) prob = dln::load_config_file(config_file, {}).problem;
    if (prob.empty()) prob = "complete";
    dln::ExperimentConfig c = dln::recipe_defaults(prob);
    if (!config_file.empty()) {
      c = dln::load_config_file(config_file, c);
      if (!problem.empty() && c.problem != problem)
        throw dln::ConfigError("problem", "config file describes '" + c.problem + "' but the subcommand is '" +
                                              problem + "'");
    }
    for (const auto& [k, v] : values) dln::set_config_value(c, k, v);
    dln::apply_env(c);
    return c;
  }
};

void print_status_table(const dln::RunOutcome& o) {
  std::fprintf(stderr, "%-8s %-11s %-9s %10s %14s %14s\n", "seed", "model", "status", "iters", "train_loss",
               "error");
  for (const auto& r : o.rows)
    std::fprintf(stderr, "%-8llu %-11s %-9s %10zu %14.6g %14.6g\n", static_cast<unsigned long long>(r.seed),
                 r.model.c_str(), r.status.c_str(), r.iterations, r.final_train_loss, r.final_error);
}

int finish(const dln::RunOutcome& o) {
  print_status_table(o);
  for (const auto& rep : o.oracle_reports)
    std::fprintf(stderr, "oracle: %s (max relative deviation %.3g over %zu records)\n", rep.pass ? "PASS" : "FAIL",
                 rep.max_rel_dev, rep.compared);
  return o.diverged() ? kExitDivergence : kExitOk;
}

// "lo:hi:step" expands to an inclusive numeric range; otherwise a comma list.
std::vector<std::string> expand_values(const std::string& spec) {
  if (spec.find(':') == std::string::npos) return dln::detail::split_list(spec);
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw dln::ConfigError("sweep", "range must be lo:hi:step");
  const double lo = dln::detail::parse_double("sweep", parts[0]);
  const double hi = dln::detail::parse_double("sweep", parts[1]);
  const double step = dln::detail::parse_double("sweep", parts[2]);
  if (!(step > 0.0) || hi < lo) throw dln::ConfigError("sweep", "range needs lo <= hi and step > 0");
  std::vector<std::string> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", lo + static_cast<double>(i) * step);
    out.emplace_back(buf);
  }
  return out;
}

struct OracleArgs {
  std::string kind = "recursion";
  std::size_t depth = 3;
  double eta = 1.0;
  double eps = 1e-3;
  std::string sigma;
  std::size_t rhat = 0;
  std::size_t T = 1000;
  std::size_t log_every = 1;
  double duration = 10.0;
  double dt = 0.0;
  bool gated = false;
  double c_val = 1e-6;
  std::string trajectory;
  double tolerance = 1e-6;
  std::string out_dir;
};

int run_oracle(const OracleArgs& a) {
  namespace fs = std::filesystem;
  std::vector<double> targets;
  for (const auto& s : dln::detail::split_list(a.sigma)) targets.push_back(dln::detail::parse_double("sigma", s));
  if (targets.empty()) throw dln::ConfigError("sigma", "target singular values are required");
  std::string out_dir = a.out_dir;
  if (out_dir.empty())
    if (const char* env = std::getenv("DLN_OUT_DIR"); env && *env) out_dir = env;
  if (out_dir.empty()) throw dln::ConfigError("out_dir", "no output directory given and DLN_OUT_DIR is unset");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw dln::IoError("cannot create " + out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream os(fs::path(out_dir) / name);
    if (!os) throw dln::IoError("cannot write " + (fs::path(out_dir) / name).string());
    return os;
  };
  const std::size_t rhat = a.rhat ? a.rhat : targets.size();
  if (a.depth < 2) throw dln::ConfigError("L", "depth must be >= 2");
  if (rhat < targets.size()) throw dln::ConfigError("rhat", "must be at least the number of targets");

  if (a.kind == "recursion") {
    if (a.log_every < 1) throw dln::ConfigError("log_every", "must be >= 1");
    auto s = dln::RecursionState::initial({a.depth, a.eta, a.eps, targets, rhat});
    auto os = open("recursion.csv");
    os << "t";
    for (std::size_t i = 1; i <= rhat; ++i) os << ",sv_" << i;
    os << '\n';
    for (;;) {
      if (s.t % a.log_every == 0 || s.t == a.T) {
        os << s.t;
        for (double v : s.implied_singular_values()) os << ',' << dln::detail::fmt_double(v);
        os << '\n';
      }
      if (s.t == a.T) break;
      s = dln::theorem1_step(s);
    }
    return kExitOk;
  }
  if (a.kind == "flow") {
    dln::FlowParams fp{a.depth, targets};
    const double dt = a.dt > 0.0 ? a.dt : dln::default_flow_dt(fp);
    dln::FlowState s0{std::vector<double>(targets.size(), std::pow(a.eps, static_cast<double>(a.depth))), 0.0, fp, {}};
    const auto traj = dln::flow_trajectory(s0, a.duration, dt, std::max<std::size_t>(a.log_every, 1),
                                           a.gated ? std::optional<dln::FlowGating>(dln::FlowGating{a.c_val})
                                                   : std::nullopt);
    auto os = open("flow.csv");
    os << "time";
    for (std::size_t i = 1; i <= targets.size(); ++i) os << ",sigma_" << i;
    os << '\n';
    for (const auto& st : traj) {
      os << dln::detail::fmt_double(st.time);
      for (double v : st.sigma) os << ',' << dln::detail::fmt_double(v);
      os << '\n';
    }
    return kExitOk;
  }
  if (a.kind == "verify") {
    std::ifstream is(a.trajectory);
    if (!is) throw dln::IoError("cannot open " + a.trajectory);
    dln::TrajectoryLog log = dln::read_trajectory_csv(is);
    log.info.depth = a.depth;
    const auto rep = dln::verify_against_training(log, dln::RecursionState::initial({a.depth, a.eta, a.eps, targets, rhat}),
                                                  a.tolerance);
    auto os = open("oracle_report.json");
    os << rep.to_json().dump(2) << '\n';
    std::fprintf(stderr, "oracle: %s (max relative deviation %.3g over %zu records)\n", rep.pass ? "PASS" : "FAIL",
                 rep.max_rel_dev, rep.compared);
    return rep.pass ? kExitOk : 1;
  }
  throw dln::ConfigError("kind", "must be recursion, flow or verify");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wide and compressed deep linear networks for low-rank matrix recovery"};
  app.require_subcommand(1);

  const std::vector<std::string> problems{"factorize", "sense", "complete", "movielens"};
  std::map<std::string, Overrides> run_overrides;
  std::map<std::string, CLI::App*> run_cmds;
  for (const auto& p : problems) {
    CLI::App* sub = app.add_subcommand(p, "run the " + p + " experiment");
    run_overrides[p].attach(sub, false);
    run_cmds[p] = sub;
  }

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one axis (alpha, rhat, depth, init) over seeds");
  Overrides ablate_overrides;
  ablate_overrides.attach(ablate, true);
  std::string sweep;
  ablate->add_option("--sweep", sweep, "axis=values, values as a comma list or lo:hi:step")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "standalone theory oracles");
  OracleArgs oa;
  oracle->add_option("--kind", oa.kind, "recursion | flow | verify");
  oracle->add_option("--L", oa.depth, "depth");
  oracle->add_option("--eta", oa.eta, "step size");
  oracle->add_option("--eps", oa.eps, "per-factor initialization scale");
  oracle->add_option("--sigma", oa.sigma, "target singular values, comma separated")->required();
  oracle->add_option("--rhat", oa.rhat, "compressed width (default: number of targets)");
  oracle->add_option("--T", oa.T, "recursion iterations");
  oracle->add_option("--log-every,--log_every", oa.log_every, "record every n steps");
  oracle->add_option("--duration", oa.duration, "flow integration time");
  oracle->add_option("--dt", oa.dt, "flow step (default: scaled to the targets)");
  oracle->add_flag("--gated", oa.gated, "sequential activation of flow components");
  oracle->add_option("--c-val,--c_val", oa.c_val, "gating tolerance on (sigma - sigma*)^2");
  oracle->add_option("--trajectory", oa.trajectory, "trajectory.csv to verify");
  oracle->add_option("--tolerance", oa.tolerance, "max relative deviation for verify");
  oracle->add_option("--out-dir,--out_dir", oa.out_dir, "output directory (default: DLN_OUT_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& p : problems)
      if (run_cmds[p]->parsed()) return finish(dln::run_experiment(run_overrides[p].resolve(p), p));
    if (ablate->parsed()) {
      const auto eq = sweep.find('=');
      if (eq == std::string::npos) throw dln::ConfigError("sweep", "expected axis=values");
      const dln::ExperimentConfig c = ablate_overrides.resolve("");
      return finish(dln::run_ablation(c, sweep.substr(0, eq), expand_values(sweep.substr(eq + 1))));
    }
    if (oracle->parsed()) return run_oracle(oa);
  } catch (const dln::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dln::ResourceError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dln::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const dln::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const dln::ParseError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const dln::DataError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const dln::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
