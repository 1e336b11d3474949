#include "probsarah/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "probsarah/error.hpp"

namespace probsarah {
namespace {

constexpr long double kZeta2 = 1.6449340668482264364724151666460251892L;
constexpr long double kE = 2.7182818284590452353602874713526624978L;

long long ceil_to_ll(long double x, const char* what) {
  if (!(x > 0.0L)) throw ConfigError(std::string(what) + ": non-positive bound");
  const long double c = std::ceil(x);
  if (c > 4.0e18L) throw ConfigError(std::string(what) + ": bound overflows");
  return static_cast<long long>(c);
}

void validate_common(double eps, std::size_t n, double L) {
  if (n < 1) throw ConfigError("need at least one sample");
  if (!(eps > 0.0) || !(eps <= 0.36787944117144233))
    throw ConfigError("eps must lie in (0, 1/e]");
  if (!(L > 0.0)) throw ConfigError("L must be positive");
}

}  // namespace

StopBounds stop_bounds_a(double eps, double delta, std::size_t n, double L,
                         double delta_f, double alpha_m) {
  validate_common(eps, n, L);
  if (!(delta > 0.0) || !(delta < 1.0))
    throw ConfigError("delta must lie in (0, 1)");
  if (!(delta_f >= 0.0)) throw ConfigError("delta_f must be >= 0");
  if (!(alpha_m * alpha_m >= 1.0 / 10240.0))
    throw ConfigError("alpha_m^2 must be at least 1/10240");

  const long double epsl = eps, deltal = delta, Ll = L, dfl = delta_f;
  const long double am2 = static_cast<long double>(alpha_m) * alpha_m;
  const long double sqn = std::sqrt(static_cast<long double>(n));

  const long double c1 =
      kZeta2 * Ll / 4.0L + (16.0L * am2 / Ll) * std::log(192.0L * kZeta2 / deltal);
  const long double c2 = 64.0L * am2 / Ll;
  const long double c3 =
      8.0L * Ll * Ll + 256.0L * am2 * std::log(12.0L * kZeta2 / deltal);
  const long double c4 = 1024.0L * am2;

  const long double a1 = 320.0L * Ll * (c1 + dfl);
  const long double t1 =
      std::sqrt(a1) / epsl + a1 / (sqn * epsl * epsl);

  const long double a2 = 320.0L * Ll * c2;
  const long double r2 = std::sqrt(a2) / epsl;
  const long double t2 =
      3.0L * (r2 * std::log(r2) +
              (2.0L * a2 / (sqn * epsl * epsl)) * std::log(a2 / (epsl * epsl)) +
              1.0L);

  const long double t3 = 2.0L * std::sqrt(c3) / epsl;

  const long double r4 = 2.0L * std::sqrt(c4) / epsl;
  const long double t4 = 3.0L * r4 * std::log(r4);

  StopBounds out;
  out.c1 = static_cast<double>(c1);
  out.c2 = static_cast<double>(c2);
  out.c3 = static_cast<double>(c3);
  out.c4 = static_cast<double>(c4);
  out.T1 = ceil_to_ll(t1, "T1");
  out.T2 = ceil_to_ll(t2, "T2");
  out.T3 = ceil_to_ll(t3, "T3");
  out.T4 = ceil_to_ll(t4, "T4");
  out.outer_cap = 2 * std::max({out.T1, out.T2, out.T3, out.T4});
  return out;
}

long long stop_bound_b(double eps, std::size_t n, double L, double delta_f0) {
  validate_common(eps, n, L);
  if (!(delta_f0 >= 0.0)) throw ConfigError("delta_f0 must be >= 0");
  const long double epsl = eps, Ll = L;
  const long double sqn = std::sqrt(static_cast<long double>(n));
  return ceil_to_ll(
      160.0L * Ll * (static_cast<long double>(delta_f0) + 1.0L) /
          (sqn * epsl * epsl),
      "T5");
}

IterationThresholds iteration_thresholds(double eps, std::size_t n) {
  validate_common(eps, n, 1.0);
  const long double epsl = eps;
  const long double sqn = std::sqrt(static_cast<long double>(n));

  IterationThresholds out;
  out.plain =
      ceil_to_ll(1.0L / epsl + 1.0L / (sqn * epsl * epsl), "plain threshold");

  const long double inv = 1.0L / epsl;
  const long double tail = (1.0L / (sqn * epsl * epsl)) * std::log(1.0L / (epsl * epsl));
  const long double ind = tail <= kE / 6.0L ? 1.0L : 0.0L;
  out.logarithmic = ceil_to_ll(
      3.0L * (inv * std::log(inv) + 2.0L * tail + ind), "log threshold");
  return out;
}

bool plain_threshold_holds(long long T, double eps, std::size_t n) {
  const long double Tl = static_cast<long double>(T);
  const long double sqn = std::sqrt(static_cast<long double>(n));
  const long double denom = std::min(Tl * Tl, sqn * Tl);
  return 1.0L / denom <=
         static_cast<long double>(eps) * static_cast<long double>(eps);
}

bool log_threshold_holds(long long T, double eps, std::size_t n) {
  const long double Tl = static_cast<long double>(T);
  const long double sqn = std::sqrt(static_cast<long double>(n));
  const long double denom = std::min(Tl * Tl, sqn * Tl);
  return std::log(Tl) / denom <=
         static_cast<long double>(eps) * static_cast<long double>(eps);
}

namespace detail {

double t1_real(double eps, std::size_t n, double L, double delta_f,
               double c1) {
  const long double a1 = 320.0L * static_cast<long double>(L) *
                         (static_cast<long double>(c1) + delta_f);
  const long double sqn = std::sqrt(static_cast<long double>(n));
  const long double e = eps;
  return static_cast<double>(std::sqrt(a1) / e + a1 / (sqn * e * e));
}

double t2_real(double eps, std::size_t n, double L, double c2) {
  const long double a2 =
      320.0L * static_cast<long double>(L) * static_cast<long double>(c2);
  const long double sqn = std::sqrt(static_cast<long double>(n));
  const long double e = eps;
  const long double r2 = std::sqrt(a2) / e;
  return static_cast<double>(
      3.0L * (r2 * std::log(r2) +
              (2.0L * a2 / (sqn * e * e)) * std::log(a2 / (e * e)) + 1.0L));
}

double t3_real(double eps, double c3) {
  return static_cast<double>(2.0L * std::sqrt(static_cast<long double>(c3)) /
                             static_cast<long double>(eps));
}

double t4_real(double eps, double c4) {
  const long double r4 =
      2.0L * std::sqrt(static_cast<long double>(c4)) / static_cast<long double>(eps);
  return static_cast<double>(3.0L * r4 * std::log(r4));
}

double t5_real(double eps, std::size_t n, double L, double delta_f0) {
  const long double e = eps;
  const long double sqn = std::sqrt(static_cast<long double>(n));
  return static_cast<double>(160.0L * static_cast<long double>(L) *
                             (static_cast<long double>(delta_f0) + 1.0L) /
                             (sqn * e * e));
}

}  // namespace detail
}  // namespace probsarah
