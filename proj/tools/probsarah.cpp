// Command-line front end: `run` (experiments), `validate` (concentration
// lab), `bounds` (schedule / stop-bound tables), `parse` (dataset
// inspection).  Thin adapter over the library; no numerical logic here.
//
// Exit codes: 0 success, 1 configuration/input error, 2 runtime failure.
// Diagnostics go to stderr; data goes to stdout or to files.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "probsarah/bounds.hpp"
#include "probsarah/concentration.hpp"
#include "probsarah/dataset.hpp"
#include "probsarah/error.hpp"
#include "probsarah/harness.hpp"
#include "probsarah/optimizer.hpp"
#include "probsarah/schedule.hpp"
#include "probsarah/sha1.hpp"

namespace {

using probsarah::ConfigError;
using probsarah::ParseError;

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("PROBSARAH_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == nullptr || *end != '\0')
    throw ConfigError("PROBSARAH_SEED must be an unsigned integer");
  return v;
}

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> runs;
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<std::string> setting;
  bool normalize = false;
  bool monitor = false;  // force deviation monitoring on
};

probsarah::ExperimentConfig resolve_config(const RunOptions& opt) {
  probsarah::ExperimentConfig cfg =
      probsarah::load_experiment_config(opt.config_path);
  // Seed precedence: flag > config > environment > default.
  if (opt.seed) {
    cfg.seed = *opt.seed;
  } else if (!cfg.seed_from_config) {
    if (auto env = env_seed()) cfg.seed = *env;
  }
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  if (opt.runs) cfg.runs = *opt.runs;
  if (opt.eps) cfg.eps = *opt.eps;
  if (opt.delta) cfg.delta = *opt.delta;
  if (opt.setting)
    cfg.setting = *opt.setting == "A" ? probsarah::Setting::A
                                      : probsarah::Setting::B;
  if (opt.normalize) cfg.normalize = true;
  if (opt.monitor) cfg.monitor_deviation = true;
  return cfg;
}

int cmd_run(const RunOptions& opt) {
  const probsarah::ExperimentConfig cfg = resolve_config(opt);
  const probsarah::QuantileReport rep = probsarah::run_experiment(cfg);
  probsarah::emit_files(rep, cfg.out_dir);
  std::cerr << "wrote " << cfg.out_dir
            << "/{quantiles.csv,summary.json,schedule.csv}\n";
  return 0;
}

int cmd_monitor(const RunOptions& opt) {
  RunOptions forced = opt;
  forced.monitor = true;
  const probsarah::ExperimentConfig cfg = resolve_config(forced);
  const probsarah::QuantileReport rep = probsarah::run_experiment(cfg);
  std::vector<probsarah::RunTrace> all;
  for (const auto& traces : rep.traces)
    for (const auto& tr : traces) all.push_back(tr);
  const probsarah::OmegaSummary om = probsarah::summarize_omega(all);
  std::cout << om.to_json_string() << "\n";
  return 0;
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (auto env = env_seed()) return *env;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-reduced optimizer with certified stopping"};
  app.require_subcommand(1);

  // run
  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "run a seeded experiment suite");
  run->add_option("--config", run_opt.config_path, "experiment config (JSON)")
      ->required();
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  run->add_option("--seed", run_seed, "master seed override")
      ->each([&](const std::string&) { run_seed_set = true; });
  run->add_option("--out", run_opt.out, "output directory override");
  std::size_t run_runs = 0;
  bool run_runs_set = false;
  run->add_option("--runs", run_runs, "run count override")
      ->each([&](const std::string&) { run_runs_set = true; });
  double run_eps = 0.0, run_delta = 0.0;
  bool run_eps_set = false, run_delta_set = false;
  run->add_option("--eps", run_eps, "accuracy target override")
      ->each([&](const std::string&) { run_eps_set = true; });
  run->add_option("--delta", run_delta, "failure probability override")
      ->each([&](const std::string&) { run_delta_set = true; });
  std::string run_setting;
  run->add_option("--setting", run_setting, "schedule setting override")
      ->check(CLI::IsMember({"A", "B"}));
  run->add_flag("--normalize", run_opt.normalize,
                "normalize dataset rows to unit norm");

  // validate
  CLI::App* validate =
      app.add_subcommand("validate", "concentration-bound validators");
  validate->require_subcommand(1);

  probsarah::MahConfig mah_cfg;
  std::optional<std::uint64_t> mah_seed;
  std::string mah_family = "bounded_iid";
  CLI::App* mah = validate->add_subcommand(
      "mah", "martingale deviation bound, Monte Carlo");
  mah->add_option("--d", mah_cfg.d, "dimension");
  mah->add_option("--K", mah_cfg.K, "steps per trial");
  mah->add_option("--trials", mah_cfg.trials, "number of trials");
  mah->add_option("--delta", mah_cfg.delta, "failure probability");
  mah->add_option("--B", mah_cfg.B, "radius-sum cutoff");
  mah->add_option("--b", mah_cfg.b, "envelope floor");
  mah->add_option("--family", mah_family, "martingale family")
      ->check(CLI::IsMember(
          {"bounded_iid", "state_dependent", "adversarial_stopping"}));
  mah->add_option("--r", mah_cfg.r, "base step radius");
  mah->add_option("--state-coeff", mah_cfg.state_coeff,
                  "state_dependent radius coefficient");
  mah->add_option("--r-max", mah_cfg.r_max, "state_dependent radius clamp");
  mah->add_option("--stop-level", mah_cfg.stop_level,
                  "adversarial trigger level");
  mah->add_option("--r-hi", mah_cfg.r_hi, "adversarial triggered radius");
  mah->add_option("--seed", mah_seed, "seed");

  probsarah::NormHoeffdingConfig nh_cfg;
  std::optional<std::uint64_t> nh_seed;
  CLI::App* nh = validate->add_subcommand(
      "norm-hoeffding", "subsample mean deviation bound, Monte Carlo");
  nh->add_option("--n", nh_cfg.n, "population size");
  nh->add_option("--d", nh_cfg.d, "dimension");
  nh->add_option("--k", nh_cfg.k, "sample size");
  nh->add_option("--sigma", nh_cfg.sigma, "population radius");
  nh->add_option("--trials", nh_cfg.trials, "number of trials");
  nh->add_option("--seed", nh_seed, "seed");

  RunOptions mon_opt;
  CLI::App* mon = validate->add_subcommand(
      "monitor", "per-step deviation envelope over scheduled runs");
  mon->add_option("--config", mon_opt.config_path, "experiment config (JSON)")
      ->required();
  std::uint64_t mon_seed = 0;
  bool mon_seed_set = false;
  mon->add_option("--seed", mon_seed, "master seed override")
      ->each([&](const std::string&) { mon_seed_set = true; });
  std::size_t mon_runs = 0;
  bool mon_runs_set = false;
  mon->add_option("--runs", mon_runs, "run count override")
      ->each([&](const std::string&) { mon_runs_set = true; });

  // bounds
  double b_eps = 0.3, b_delta = 0.1, b_L = 1.0, b_alpha = 1.0, b_d1 = 100.0,
         b_df = 1.0;
  std::size_t b_n = 10000;
  long long b_schedule = 0;
  std::string b_setting = "A";
  bool b_json = false;
  CLI::App* bounds =
      app.add_subcommand("bounds", "stop-bound and schedule tables");
  bounds->add_option("--eps", b_eps, "accuracy target");
  bounds->add_option("--delta", b_delta, "failure probability");
  bounds->add_option("--n", b_n, "sample count");
  bounds->add_option("--L", b_L, "smoothness constant");
  bounds->add_option("--alpha", b_alpha, "gradient-norm bound");
  bounds->add_option("--d1", b_d1, "feasible-set diameter");
  bounds->add_option("--delta-f", b_df, "objective-gap bound");
  bounds->add_option("--schedule", b_schedule,
                     "print the schedule table with this many rows instead");
  bounds->add_option("--setting", b_setting, "schedule setting")
      ->check(CLI::IsMember({"A", "B"}));
  bounds->add_flag("--json", b_json, "emit JSON instead of CSV");

  // parse
  std::string p_path;
  bool p_normalize = false;
  std::size_t p_min_dim = 0;
  CLI::App* parse = app.add_subcommand("parse", "dataset inspection");
  parse->add_option("--data", p_path, "LIBSVM dataset path")->required();
  parse->add_flag("--normalize", p_normalize, "normalize rows before stats");
  parse->add_option("--min-dim", p_min_dim, "minimum feature dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(run)) {
      if (run_seed_set) run_opt.seed = run_seed;
      if (run_runs_set) run_opt.runs = run_runs;
      if (run_eps_set) run_opt.eps = run_eps;
      if (run_delta_set) run_opt.delta = run_delta;
      if (!run_setting.empty()) run_opt.setting = run_setting;
      return cmd_run(run_opt);
    }
    if (app.got_subcommand(validate)) {
      if (validate->got_subcommand(mah)) {
        if (mah_family == "state_dependent")
          mah_cfg.family = probsarah::MartingaleFamily::StateDependent;
        else if (mah_family == "adversarial_stopping")
          mah_cfg.family = probsarah::MartingaleFamily::AdversarialStopping;
        else
          mah_cfg.family = probsarah::MartingaleFamily::BoundedIid;
        mah_cfg.seed = pick_seed(mah_seed);
        const probsarah::MahReport rep = probsarah::validate_mah(mah_cfg);
        std::cout << rep.to_json_string() << "\n";
        std::cerr << rep.summary() << "\n";
        return 0;
      }
      if (validate->got_subcommand(nh)) {
        nh_cfg.seed = pick_seed(nh_seed);
        const probsarah::NormHoeffdingReport rep =
            probsarah::validate_norm_hoeffding(nh_cfg);
        std::cout << rep.to_json_string() << "\n";
        std::cerr << rep.summary() << "\n";
        return 0;
      }
      if (mon_seed_set) mon_opt.seed = mon_seed;
      if (mon_runs_set) mon_opt.runs = mon_runs;
      return cmd_monitor(mon_opt);
    }
    if (app.got_subcommand(bounds)) {
      if (b_json) {
        nlohmann::json out;
        const probsarah::StopBounds sb = probsarah::stop_bounds_a(
            b_eps, b_delta, b_n, b_L, b_df, b_alpha);
        out["stop_bounds"] = {{"c1", sb.c1},       {"c2", sb.c2},
                              {"c3", sb.c3},       {"c4", sb.c4},
                              {"T1", sb.T1},       {"T2", sb.T2},
                              {"T3", sb.T3},       {"T4", sb.T4},
                              {"outer_cap", sb.outer_cap},
                              {"T5", probsarah::stop_bound_b(b_eps, b_n, b_L,
                                                             b_df)}};
        if (b_schedule > 0) {
          const probsarah::ScheduleInputs in{b_n, b_eps, b_delta,
                                             b_L, b_alpha, b_d1};
          nlohmann::json rows = nlohmann::json::array();
          for (long long j = 1; j <= b_schedule; ++j) {
            const probsarah::ScheduleParams p = probsarah::schedule_params(
                b_setting == "A" ? probsarah::Setting::A
                                 : probsarah::Setting::B,
                j, in);
            rows.push_back({{"j", p.j},
                            {"B", p.B},
                            {"K", p.K},
                            {"b", p.b},
                            {"l", p.l},
                            {"q", p.q},
                            {"tau", p.tau},
                            {"delta_prime", p.delta_prime},
                            {"eps_j", p.eps_j}});
          }
          out["schedule"] = std::move(rows);
        }
        std::cout << out.dump() << "\n";
        return 0;
      }
      if (b_schedule > 0) {
        const probsarah::ScheduleInputs in{b_n, b_eps, b_delta,
                                           b_L, b_alpha, b_d1};
        std::cout << probsarah::schedule_table_csv(
            b_setting == "A" ? probsarah::Setting::A : probsarah::Setting::B,
            in, b_schedule);
        return 0;
      }
      std::cout << probsarah::stop_bounds_csv(b_eps, b_delta, b_n, b_L, b_df,
                                              b_alpha);
      return 0;
    }
    // parse
    std::ifstream in(p_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset file: " + p_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string raw = std::move(ss).str();
    probsarah::Dataset ds;
    try {
      ds = probsarah::parse_libsvm(raw, p_min_dim);
    } catch (const ParseError& e) {
      throw ParseError(p_path + ": " + e.what());
    }
    if (p_normalize) probsarah::normalize_rows(ds);
    std::size_t pos = 0;
    for (double y : ds.labels)
      if (y > 0) ++pos;
    nlohmann::json out = {{"path", p_path},
                          {"sha1", probsarah::git_blob_sha1(raw)},
                          {"n", ds.n},
                          {"d", ds.d},
                          {"nnz", ds.indices.size()},
                          {"max_row_norm", ds.max_row_norm()},
                          {"labels_positive", pos},
                          {"labels_negative", ds.n - pos},
                          {"normalized", p_normalize}};
    std::cout << out.dump() << "\n";
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}
