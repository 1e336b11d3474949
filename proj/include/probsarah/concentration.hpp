#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "probsarah/optimizer.hpp"

namespace probsarah {

// Monte Carlo validator for the vector-martingale deviation bound with
// predictable step radii: with probability at least 1 - delta, for every
// prefix t with sum_{k<=t} r_k^2 < B,
//   || sum_{k<=t} z_k ||^2 <= 9 * max(sum_{k<=t} r_k^2, b) * (ln(2/delta)
//                              + ln ln(B/b)).
// Requires B/b > e.  A trial is a violation if any prefix breaks the bound.
enum class MartingaleFamily {
  // z_k uniform on the sphere of fixed radius r.
  BoundedIid,
  // Random-walk state s_k; radius r_k = clamp(coeff * ||s_{k-1}||, r, r_max).
  StateDependent,
  // Level-triggered radii (r below stop_level, r_hi at or above) with
  // z_k = +-r_k along the current sum direction; stresses the worst case
  // where radii react to the path.
  AdversarialStopping,
};

struct MahConfig {
  std::size_t d = 20;
  std::size_t K = 100;
  std::size_t trials = 100000;
  double delta = 0.05;
  double B = 101.0;
  double b = 1.0;
  MartingaleFamily family = MartingaleFamily::BoundedIid;
  double r = 1.0;           // base radius
  double state_coeff = 1.0; // StateDependent: coeff on ||s_{k-1}||
  double r_max = 4.0;       // StateDependent: radius clamp
  double stop_level = 3.0;  // AdversarialStopping: trigger on ||sum||
  double r_hi = 2.0;        // AdversarialStopping: radius once triggered
  std::uint64_t seed = 1;
};

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};
// 95% score interval for k successes in n trials (z = 1.959963984540054).
WilsonInterval wilson(std::size_t k, std::size_t n);

struct MahReport {
  MahConfig config;
  std::size_t violations = 0;
  double rate = 0.0;
  WilsonInterval ci;
  std::string to_json_string() const;
  std::string summary() const;
};

MahReport validate_mah(const MahConfig& cfg);

// Monte Carlo validator for the without-replacement mean-deviation bound:
// for k of n vectors with ||x_i|| <= sigma and mean mu, the sample mean
// deviation Y = ||mean_sample - mu|| satisfies
//   P(Y > t) <= 3 exp(-k t^2 / (64 sigma^2))   and   E[Y^2] <= 16 sigma^2 / k.
struct NormHoeffdingConfig {
  std::size_t n = 200;
  std::size_t d = 10;
  std::size_t k = 20;
  double sigma = 1.0;
  std::size_t trials = 100000;
  // Thresholds to test; empty selects the grid where the tail bound equals
  // {0.5, 0.2, 0.1, 0.05, 0.02}.
  std::vector<double> thresholds;
  std::uint64_t seed = 1;
};

struct TailPoint {
  double threshold = 0.0;
  double bound = 0.0;  // 3 exp(-k t^2 / (64 sigma^2))
  std::size_t count = 0;
  double freq = 0.0;
  bool ok = false;  // freq <= bound
};

struct NormHoeffdingReport {
  NormHoeffdingConfig config;
  std::vector<TailPoint> tail;
  double mean_norm_sq = 0.0;
  double second_moment_bound = 0.0;  // 16 sigma^2 / k
  bool second_moment_ok = false;
  bool all_ok = false;
  std::string to_json_string() const;
  std::string summary() const;
};

NormHoeffdingReport validate_norm_hoeffding(const NormHoeffdingConfig& cfg);

// Aggregates the per-step deviation-envelope checks recorded by runs with
// monitor_deviation enabled.
struct OmegaSummary {
  std::size_t runs = 0;
  std::size_t runs_with_checks = 0;
  std::size_t runs_with_violation = 0;
  long long checks = 0;
  long long violations = 0;
  double max_ratio = 0.0;
  double violating_fraction = 0.0;  // violating runs / runs with checks
  std::string to_json_string() const;
  std::string summary() const;
};

OmegaSummary summarize_omega(std::span<const RunTrace> traces);

}  // namespace probsarah
