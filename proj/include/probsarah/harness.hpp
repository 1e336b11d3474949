#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "probsarah/bounds.hpp"
#include "probsarah/dataset.hpp"
#include "probsarah/objective.hpp"
#include "probsarah/optimizer.hpp"
#include "probsarah/schedule.hpp"

namespace probsarah {

// Deterministic synthetic problem generators.
//   quadratic_anchor: dense anchors drawn uniformly from the ball of radius
//     anchor_radius; pairs with Family::QuadraticAnchor.
//   sparse_logistic:  nnz unit-valued features per row at random positions,
//     labels from a hidden direction with margin scale `margin` and label
//     noise flip_prob; pairs with Family::Logistic.
struct SyntheticSpec {
  std::string kind;  // "quadratic_anchor" | "sparse_logistic"
  std::size_t n = 0;
  std::size_t d = 0;
  double anchor_radius = 1.0;
  std::size_t nnz = 20;
  double margin = 3.0;
  double flip_prob = 0.01;
  std::uint64_t seed = 1;
};

std::shared_ptr<Dataset> make_synthetic(const SyntheticSpec& spec);

struct DataSource {
  std::string path;        // LIBSVM file; empty when synthetic
  SyntheticSpec synthetic; // used when path is empty
  bool is_synthetic() const { return path.empty(); }
};

struct AlgoConfig {
  std::string name;   // prob_sarah | sgd | svrg | scsg
  std::string label;  // output label; defaults to name
  Mode mode = Mode::Experiment;  // prob_sarah only
  double eta = 0.01;             // experiment / baseline step size
  std::size_t batch = 0;         // baselines; 0 = baseline_matching
  std::size_t checkpoint = 0;    // scsg; 0 = power-of-two n^(2/3)
  std::size_t inner_len = 0;     // svrg; 0 = ceil(n / batch)
};

struct ExperimentConfig {
  DataSource data;
  bool normalize = false;
  Family family = Family::Logistic;
  Regularizer reg = Regularizer::RationalSquare;
  double lambda = 0.1;
  double radius = 50.0;
  double mu = 1e-3;
  std::vector<AlgoConfig> algorithms;
  std::size_t runs = 100;
  std::size_t epochs = 20;      // snapshot grid 1..epochs
  double epoch_budget = 0.0;    // run budget; 0 = same as epochs
  double eps = 0.3;
  double delta = 0.1;
  double delta_eval = 0.1;      // evaluation quantile level
  std::vector<double> quantile_levels;  // empty = {1 - delta_eval}
  Setting setting = Setting::A;  // theory-mode flavor
  std::uint64_t seed = 1;
  // True when the seed came from the config file; the CLI's seed precedence
  // (flag > config > environment > default) needs to know.
  bool seed_from_config = false;
  bool monitor_deviation = false;
  std::string out_dir = "out";
};

// Parses and validates a config; unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& json_text);
// Same, reading from a file; errors name the path.
ExperimentConfig load_experiment_config(const std::string& path);

struct QuantileRow {
  std::string algorithm;
  long long epoch = 0;
  double level = 0.0;
  double grad_norm_sq = 0.0;
};

struct AlgoReport {
  std::string label;
  std::size_t runs = 0;
  std::size_t stopped = 0;
  std::size_t successes = 0;  // stopped AND ||grad f(x-hat)||^2 <= eps^2
  double success_rate = 0.0;
  std::size_t censored = 0;   // stopping-rule runs cut by budget or cap
  long long total_ifo = 0;
  double mean_ifo = 0.0;
  long long monitor_evals = 0;
  long long deviation_checks = 0;
  long long deviation_violations = 0;
};

struct QuantileReport {
  ExperimentConfig config;
  // Dataset fingerprint: git-style blob hash of the source bytes (file
  // contents, or the serialized synthetic dataset before normalization).
  std::string dataset_sha1;
  std::string dataset_source;
  std::size_t n = 0, d = 0;
  double max_row_norm = 0.0;
  double L = 0.0, alpha_m = 0.0, d1 = 0.0;
  double delta_f = 0.0;
  bool delta_f_exact = false;
  std::vector<QuantileRow> rows;
  std::vector<AlgoReport> algo_reports;
  std::vector<std::vector<RunTrace>> traces;  // per algorithm, run order
  std::string schedule_csv;  // audit table for the schedule in use
  std::string schedule_sha1;
};

// Runs cfg.runs seeded runs per algorithm (seed derived from the master seed,
// the algorithm label, and the run index), snapshots monitored ||grad f||^2
// on the epoch grid, and aggregates quantile trajectories.  The quantile at
// level q is the ascending order statistic of rank ceil(q * runs).  Runs that
// end early keep their final monitored value for later epochs.
QuantileReport run_experiment(const ExperimentConfig& cfg);

// Writes quantiles.csv, summary.json, and schedule.csv into out_dir,
// creating it if needed.  Byte-stable for a fixed report.
void emit_files(const QuantileReport& rep, const std::string& out_dir);

// Baseline batch size matched to the inner batch the scheduled run uses at
// the midpoint epoch, rounded to the nearest power of two.
std::size_t baseline_matching(std::size_t n, std::size_t epochs);
// Nearest power of two by rounding log2; values below 1 floor at 1.
std::size_t round_pow2(double b);

// Upper bound on sup f - inf f over the feasible ball.  QuadraticAnchor:
// separable closed-form optimum (exact when interior).  Logistic: probe
// descent from the origin with a 2x safety factor.
struct DeltaFEstimate {
  double value = 0.0;
  bool exact = false;
};
DeltaFEstimate estimate_delta_f(const ObjectiveSpec& spec);

// CSV renderings shared by the harness manifest and the CLI.
std::string schedule_table_csv(Setting s, const ScheduleInputs& in,
                               long long jmax);
std::string experiment_schedule_csv(std::size_t n, double eta, long long jmax);
std::string stop_bounds_csv(double eps, double delta, std::size_t n, double L,
                            double delta_f, double alpha_m);

// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace probsarah
