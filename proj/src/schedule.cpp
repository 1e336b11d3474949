#include "probsarah/schedule.hpp"

#include <cmath>

#include "probsarah/error.hpp"

namespace probsarah {
namespace {

// zeta(2); normalizes the per-iteration failure budget so the budgets sum
// to at most delta/4 over all outer iterations.
constexpr long double kZeta2 = 1.6449340668482264364724151666460251892L;
// Largest admissible accuracy target: 1/e rounded to double.
constexpr double kInvE = 0.36787944117144233;
constexpr long double kE = 2.7182818284590452353602874713526624978L;

// Intermediate schedule quantities are evaluated in extended precision so
// every emitted double is within one ulp of the exact value.
long double delta_prime_of(long long j, long double delta) {
  const long double jl = static_cast<long double>(j);
  return delta / (4.0L * kZeta2 * jl * jl * jl * jl);
}

long double log_factor_of(long double dp, long double d1, long double tau) {
  const long double inner = 2.0L * d1 * d1 / tau;
  if (!(inner > kE))
    throw ConfigError("schedule needs 2*d1^2/tau > e for the iterated log");
  return 18.0L * (std::log(2.0L / dp) + std::log(std::log(inner)));
}

ScheduleParams finish(long long j, const ScheduleInputs& in, std::size_t B,
                      std::size_t K, long double tau, long double q) {
  const long double dp = delta_prime_of(j, in.delta);
  const long double l = log_factor_of(dp, in.d1, tau);
  const long double Ll = in.L;
  const long double epsl = in.eps;

  ScheduleParams p;
  p.j = j;
  p.eta = 1.0 / (4.0 * in.L);
  p.B = B;
  p.K = K;
  p.b = static_cast<std::size_t>(std::ceil(l)) * K;
  p.l = static_cast<double>(l);
  p.q = static_cast<double>(q);
  p.tau = static_cast<double>(tau);
  p.delta_prime = static_cast<double>(dp);
  p.eps_j = static_cast<double>(8.0L * Ll * Ll * tau + 2.0L * q);
  p.eps_tilde_sq = static_cast<double>(epsl * epsl / 5.0L);
  p.full_batch = B == in.n;
  return p;
}

}  // namespace

double max_admissible_eps() { return kInvE; }

std::size_t ceil_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && (r - 1) * (r - 1) >= n) --r;
  while (r * r < n) ++r;
  return r;
}

void validate_admissible(const ScheduleInputs& in) {
  if (in.n < 1) throw ConfigError("need at least one sample");
  if (!(in.eps > 0.0) || !(in.eps <= kInvE))
    throw ConfigError("eps must lie in (0, 1/e]");
  if (!(in.delta > 0.0) || !(in.delta < 1.0))
    throw ConfigError("delta must lie in (0, 1)");
  if (!(in.L > 0.0)) throw ConfigError("L must be positive");
  if (!(in.alpha_m * in.alpha_m >= 1.0 / 10240.0))
    throw ConfigError("alpha_m^2 must be at least 1/10240");
  if (!(in.d1 >= 1.0)) throw ConfigError("feasible diameter d1 must be >= 1");
}

ScheduleParams schedule_a(long long j, const ScheduleInputs& in) {
  if (j < 1) throw ConfigError("outer index must be >= 1");
  validate_admissible(in);
  const long double jl = static_cast<long double>(j);
  const long double tau = 1.0L / (jl * jl * jl);

  const std::size_t root = ceil_sqrt(in.n);
  const auto ju = static_cast<std::size_t>(j);
  // j >= ceil_sqrt(n) iff j^2 >= n; avoids overflow of j * j for large j.
  const std::size_t B = ju >= root ? in.n : ju * ju;
  const std::size_t K = std::min(ju, root);

  long double q = 0.0L;
  if (B < in.n) {
    const long double am = in.alpha_m;
    q = (128.0L * am * am / static_cast<long double>(B)) *
        std::log(3.0L / delta_prime_of(j, in.delta));
  }
  return finish(j, in, B, K, tau, q);
}

ScheduleParams schedule_b(long long j, const ScheduleInputs& in) {
  if (j < 1) throw ConfigError("outer index must be >= 1");
  validate_admissible(in);
  const long double epsl = in.eps;
  const long double Ll = in.L;
  const long double tau = epsl * epsl / (40.0L * Ll * Ll);
  if (!(tau < 1.0L))
    throw ConfigError("setting B needs eps^2 < 40 L^2");
  auto p = finish(j, in, in.n, ceil_sqrt(in.n), tau, 0.0L);
  p.eps_j = static_cast<double>(epsl * epsl / 10.0L);
  return p;
}

ScheduleParams schedule_params(Setting s, long long j,
                               const ScheduleInputs& in) {
  return s == Setting::A ? schedule_a(j, in) : schedule_b(j, in);
}

ScheduleParams schedule_experiment(long long j, std::size_t n, double eta) {
  if (j < 1) throw ConfigError("outer index must be >= 1");
  if (n < 1) throw ConfigError("need at least one sample");
  if (!(eta > 0.0)) throw ConfigError("experiment schedule needs eta > 0");
  ScheduleParams p{};
  p.j = j;
  p.eta = eta;
  const std::size_t root = ceil_sqrt(n);
  const auto ju = static_cast<std::size_t>(j);
  p.B = ju >= root ? n : ju * ju;
  p.K = std::min(ju, root);
  const double lk =
      std::ceil(std::log(static_cast<double>(j)) * static_cast<double>(p.K));
  p.b = std::max(p.K, static_cast<std::size_t>(std::max(0.0, lk)));
  p.full_batch = p.B == n;
  return p;
}

}  // namespace probsarah
