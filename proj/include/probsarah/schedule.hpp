#pragma once

#include <cstddef>

namespace probsarah {

// Hyperparameter schedules for the variance-reduced runs, indexed by the
// outer iteration j >= 1.  Setting A grows the checkpoint batch as j^2 and
// tightens the accuracy proxy as j^-3; setting B uses full checkpoints and a
// fixed accuracy proxy tied to the target eps.
enum class Setting { A, B };

struct ScheduleInputs {
  std::size_t n = 0;     // number of samples
  double eps = 0.0;      // target gradient-norm accuracy, in (0, 1/e]
  double delta = 0.0;    // failure probability, in (0, 1)
  double L = 0.0;        // smoothness constant
  double alpha_m = 0.0;  // gradient-norm bound, alpha_m^2 >= 1/10240
  double d1 = 0.0;       // feasible-set diameter, >= 1
};

struct ScheduleParams {
  long long j = 0;
  double eta = 0.0;           // step size, exactly 1/(4L)
  std::size_t B = 0;          // checkpoint batch (without replacement)
  std::size_t K = 0;          // inner-loop length
  std::size_t b = 0;          // inner batch (with replacement), ceil(l) * K
  double l = 0.0;             // concentration log factor
  double q = 0.0;             // checkpoint-error allowance; 0 iff B == n
  double tau = 0.0;           // accuracy proxy, in (0, 1]
  double delta_prime = 0.0;   // per-iteration failure budget
  double eps_j = 0.0;         // second stopping-rule threshold quantity
  double eps_tilde_sq = 0.0;  // first stopping-rule threshold, eps^2 / 5
  bool full_batch = false;    // B == n
};

// Throws ConfigError when the inputs violate the admissibility assumptions.
void validate_admissible(const ScheduleInputs& in);

ScheduleParams schedule_a(long long j, const ScheduleInputs& in);
ScheduleParams schedule_b(long long j, const ScheduleInputs& in);
ScheduleParams schedule_params(Setting s, long long j, const ScheduleInputs& in);

// Empirical schedule for trajectory experiments: the same checkpoint and
// inner-loop growth as setting A, inner batch b_j = max(K_j, ceil(ln(j) K_j)),
// user-chosen step size, no stopping-rule quantities (those fields are 0).
ScheduleParams schedule_experiment(long long j, std::size_t n, double eta);

// Smallest integer r with r * r >= n.
std::size_t ceil_sqrt(std::size_t n);

// Largest admissible eps (the double just below/at 1/e).
double max_admissible_eps();

}  // namespace probsarah
