#pragma once

#include <cstddef>

namespace probsarah {

// A-priori outer-iteration bounds.  A run that reaches outer_cap without
// stopping is outside the high-probability guarantee; the cap is
// 2 * max(T1..T4).
struct StopBounds {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  long long T1 = 0, T2 = 0, T3 = 0, T4 = 0;
  long long outer_cap = 0;
};

// Setting-A bound.  delta_f is (an upper bound on) the objective gap
// sup_D f - min_D f; larger values only enlarge the cap.
StopBounds stop_bounds_a(double eps, double delta, std::size_t n, double L,
                         double delta_f, double alpha_m);

// Setting-B bound; delta_f0 bounds f(x_0) - min_D f.
long long stop_bound_b(double eps, std::size_t n, double L, double delta_f0);

// Iteration counts after which 1/(T^2 ^ sqrt(n) T) (plain) respectively
// ln T/(T^2 ^ sqrt(n) T) (logarithmic) drop below eps^2.
struct IterationThresholds {
  long long plain = 0;
  long long logarithmic = 0;
};
IterationThresholds iteration_thresholds(double eps, std::size_t n);

// Direct checks of the two decay inequalities at a given T.
bool plain_threshold_holds(long long T, double eps, std::size_t n);
bool log_threshold_holds(long long T, double eps, std::size_t n);

namespace detail {
// Real-valued pre-ceiling forms, for monotonicity property tests.
double t1_real(double eps, std::size_t n, double L, double delta_f,
               double c1);
double t2_real(double eps, std::size_t n, double L, double c2);
double t3_real(double eps, double c3);
double t4_real(double eps, double c4);
double t5_real(double eps, std::size_t n, double L, double delta_f0);
}  // namespace detail

}  // namespace probsarah
