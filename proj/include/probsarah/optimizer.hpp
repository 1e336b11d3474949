#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probsarah/objective.hpp"
#include "probsarah/schedule.hpp"

namespace probsarah {

// TheoryA / TheoryB run the scheduled step size 1/(4L) with the dual
// stopping rule armed.  Experiment runs a user step size with the empirical
// schedule (B_j = j^2 ^ n, K_j = j ^ ceil(sqrt n), b_j ~ ln(j) K_j) and no
// stopping rule; it exists for trajectory comparisons against baselines.
enum class Mode { TheoryA, TheoryB, Experiment };

struct RunConfig {
  const ObjectiveSpec* objective = nullptr;
  // Optional oracle override; tests wrap the objective to count evaluations.
  const GradientOracle* oracle = nullptr;
  Mode mode = Mode::TheoryA;
  double eps = 0.1;
  double delta = 0.1;
  double eta = 0.0;           // Experiment-mode / baseline step size
  long long max_outer = 0;    // 0: theory modes default to twice the outer cap
  double epoch_budget = 0.0;  // in epochs (n evaluations each); 0 = unlimited
  double delta_f = 1.0;       // objective-gap bound used for the default cap
  bool monitor_gradient = true;    // epoch snapshots + final gradient norm
  bool monitor_deviation = false;  // per-step ||nu_k - grad f(x_k)||^2 envelope
  bool debug_full_batch = false;   // force B = b = n, deterministic sweeps
  bool record_steps = true;
  std::uint64_t seed = 0;
  std::vector<double> x0;  // empty = origin
};

struct StepRecord {
  long long j = 0;
  long long k = 0;
  double nu_norm_sq = 0.0;
  long long ifo = 0;
  double grad_norm_sq = 0.0;  // valid when has_grad
  bool has_grad = false;
};

struct OuterRecord {
  long long j = 0;
  std::size_t B = 0, K = 0, b = 0;
  long long ifo_added = 0;
  double mean_nu_sq = 0.0;  // (1/K) sum_{k<K} ||nu_k||^2
  double eps_j = 0.0;
  double eps_tilde_sq = 0.0;
  bool rule1 = false, rule2 = false;
};

struct EpochPoint {
  long long epoch = 0;
  double grad_norm_sq = 0.0;
};

struct DeviationStats {
  long long checks = 0;
  long long violations = 0;
  double max_ratio = 0.0;   // max over checks of err^2 / envelope
  double max_err_sq = 0.0;  // max over checks of ||nu_k - grad f(x_k)||^2
};

struct RunTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<OuterRecord> outers;
  std::vector<StepRecord> steps;
  std::vector<EpochPoint> epochs;
  bool stopped = false;
  long long stop_outer = 0;
  long long k_hat = -1;
  // Stopping-rule quantities as evaluated at the stopping iteration.
  double rule1_lhs = 0.0, rule1_rhs = 0.0;
  double rule2_lhs = 0.0, rule2_rhs = 0.0;
  std::vector<double> x_final;  // x-hat when stopped, else the last iterate
  double grad_norm_sq_final = -1.0;  // -1 when gradient monitoring is off
  long long ifo = 0;
  long long monitor_evals = 0;  // separate budget; never mixed into ifo
  DeviationStats deviation;

  std::string to_json_string() const;
};

// Variance-reduced run with recursive gradient estimates and the dual
// stopping rule.  Every outer iteration j costs exactly B_j + 2 b_j K_j
// sample-gradient evaluations.
RunTrace prob_sarah(const RunConfig& cfg);

struct BaselineParams {
  double eta = 0.01;
  std::size_t batch = 1;
  std::size_t checkpoint = 0;  // scsg checkpoint batch; 0 = 2^round(lg n^(2/3))
  std::size_t inner_len = 0;   // svrg inner length; 0 = ceil(n / batch)
};

// Projected stochastic gradient descent; batch >= n runs exact full-gradient
// steps deterministically.
RunTrace sgd(const RunConfig& cfg, const BaselineParams& p);
// Epoch-checkpointed variance reduction, last-iterate checkpoint update.
RunTrace svrg(const RunConfig& cfg, const BaselineParams& p);
// Subsampled checkpoints of size `checkpoint` with geometric inner-loop
// lengths of mean checkpoint/batch.
RunTrace scsg(const RunConfig& cfg, const BaselineParams& p);

// Sample-gradient evaluations implied by the trace: the per-outer formula
// B_j + 2 b_j K_j for prob_sarah traces, recorded increments otherwise.
long long ifo_cost(const RunTrace& trace);

}  // namespace probsarah
