#include "probsarah/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "json.hpp"
#include "probsarah/error.hpp"
#include "probsarah/kernels.hpp"
#include "probsarah/rng.hpp"

namespace probsarah {
namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kE = 2.718281828459045;

const char* family_name(MartingaleFamily f) {
  switch (f) {
    case MartingaleFamily::BoundedIid: return "bounded_iid";
    case MartingaleFamily::StateDependent: return "state_dependent";
    case MartingaleFamily::AdversarialStopping: return "adversarial_stopping";
  }
  return "unknown";
}

}  // namespace

WilsonInterval wilson(std::size_t k, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  const double z2 = kZ95 * kZ95;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // At k = 0 (k = n) the exact endpoint is 0 (1); don't leave sqrt residue.
  const double lo = k == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = k == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

MahReport validate_mah(const MahConfig& cfg) {
  if (cfg.d == 0 || cfg.K == 0 || cfg.trials == 0)
    throw ConfigError("martingale validator needs d, K, trials >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw ConfigError("martingale validator needs delta in (0,1)");
  if (!(cfg.b > 0.0) || !(cfg.B > cfg.b))
    throw ConfigError("martingale validator needs 0 < b < B");
  if (!(cfg.B / cfg.b > kE))
    throw ConfigError("martingale bound needs B/b > e");
  if (!(cfg.r > 0.0)) throw ConfigError("martingale validator needs r > 0");

  // ln(2/delta) + ln ln(B/b); positive by the B/b > e requirement.
  const double log_term =
      std::log(2.0 / cfg.delta) + std::log(std::log(cfg.B / cfg.b));

  MahReport rep;
  rep.config = cfg;

  std::vector<double> sum(cfg.d), z(cfg.d), state(cfg.d);
  const auto& ops = kernels::active();

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng(derive_seed(cfg.seed, "mah", t));
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(state.begin(), state.end(), 0.0);
    double r2 = 0.0;
    bool violated = false;

    for (std::size_t k = 0; k < cfg.K; ++k) {
      // Radius r_k is predictable: it depends only on the path so far.
      double rk = cfg.r;
      if (cfg.family == MartingaleFamily::StateDependent) {
        const double s = std::sqrt(ops.nrm2sq(state.data(), cfg.d));
        rk = std::clamp(cfg.state_coeff * s, cfg.r, cfg.r_max);
      } else if (cfg.family == MartingaleFamily::AdversarialStopping) {
        const double s = std::sqrt(ops.nrm2sq(sum.data(), cfg.d));
        rk = s >= cfg.stop_level ? cfg.r_hi : cfg.r;
      }

      if (cfg.family == MartingaleFamily::AdversarialStopping) {
        // +-r_k along the current sum direction; mean zero given the past.
        const double s2 = ops.nrm2sq(sum.data(), cfg.d);
        if (s2 == 0.0) {
          std::fill(z.begin(), z.end(), 0.0);
          z[0] = rk;
        } else {
          const double scale = rk / std::sqrt(s2);
          for (std::size_t i = 0; i < cfg.d; ++i) z[i] = scale * sum[i];
        }
        if (rng.below(2) == 1)
          for (auto& v : z) v = -v;
      } else {
        rng.fill_sphere(z);
        if (rk != 1.0) ops.scal(rk, z.data(), cfg.d);
      }

      ops.axpy(1.0, z.data(), sum.data(), cfg.d);
      if (cfg.family == MartingaleFamily::StateDependent)
        ops.axpy(1.0, z.data(), state.data(), cfg.d);
      r2 += rk * rk;

      // Prefixes with r2 >= B are outside the bound's premise, and r2 only
      // grows, so the trial can end early.
      if (r2 >= cfg.B) break;
      const double envelope = 9.0 * std::max(r2, cfg.b) * log_term;
      if (ops.nrm2sq(sum.data(), cfg.d) > envelope) {
        violated = true;
        break;
      }
    }
    if (violated) ++rep.violations;
  }

  rep.rate = static_cast<double>(rep.violations) /
             static_cast<double>(cfg.trials);
  rep.ci = wilson(rep.violations, cfg.trials);
  return rep;
}

std::string MahReport::to_json_string() const {
  nlohmann::json out;
  out["validator"] = "martingale_deviation";
  out["family"] = family_name(config.family);
  out["d"] = config.d;
  out["K"] = config.K;
  out["trials"] = config.trials;
  out["delta"] = config.delta;
  out["B"] = config.B;
  out["b"] = config.b;
  out["r"] = config.r;
  out["seed"] = config.seed;
  if (config.family == MartingaleFamily::StateDependent) {
    out["state_coeff"] = config.state_coeff;
    out["r_max"] = config.r_max;
  }
  if (config.family == MartingaleFamily::AdversarialStopping) {
    out["stop_level"] = config.stop_level;
    out["r_hi"] = config.r_hi;
  }
  out["violations"] = violations;
  out["rate"] = rate;
  out["wilson_low"] = ci.low;
  out["wilson_high"] = ci.high;
  out["pass"] = ci.high <= config.delta;
  return out.dump();
}

std::string MahReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "martingale %s: %zu/%zu violations (rate %.5f, wilson95 "
                "[%.5f, %.5f], delta %.3f)",
                family_name(config.family), violations, config.trials, rate,
                ci.low, ci.high, config.delta);
  return buf;
}

NormHoeffdingReport validate_norm_hoeffding(const NormHoeffdingConfig& cfg) {
  if (cfg.n == 0 || cfg.d == 0 || cfg.trials == 0)
    throw ConfigError("mean-deviation validator needs n, d, trials >= 1");
  if (cfg.k == 0 || cfg.k > cfg.n)
    throw ConfigError("mean-deviation validator needs 1 <= k <= n");
  if (!(cfg.sigma > 0.0))
    throw ConfigError("mean-deviation validator needs sigma > 0");

  NormHoeffdingReport rep;
  rep.config = cfg;
  const double kk = static_cast<double>(cfg.k);
  rep.second_moment_bound = 16.0 * cfg.sigma * cfg.sigma / kk;

  std::vector<double> thresholds = cfg.thresholds;
  if (thresholds.empty()) {
    // Thresholds where the tail bound equals the listed levels.
    for (double level : {0.5, 0.2, 0.1, 0.05, 0.02})
      thresholds.push_back(
          std::sqrt(64.0 * cfg.sigma * cfg.sigma * std::log(3.0 / level) / kk));
  }
  std::sort(thresholds.begin(), thresholds.end());

  // Deterministic population inside the sigma-ball, plus its exact mean.
  std::vector<std::vector<double>> pop(cfg.n, std::vector<double>(cfg.d));
  Rng pop_rng(derive_seed(cfg.seed, "nh-pop", 0));
  for (auto& p : pop) pop_rng.fill_ball(p, cfg.sigma);
  std::vector<double> mu(cfg.d, 0.0);
  const auto& ops = kernels::active();
  for (const auto& p : pop) ops.axpy(1.0, p.data(), mu.data(), cfg.d);
  ops.scal(1.0 / static_cast<double>(cfg.n), mu.data(), cfg.d);

  std::vector<std::size_t> counts(thresholds.size(), 0);
  long double sum_sq = 0.0L;
  std::vector<std::uint32_t> scratch, idx;
  std::vector<double> mean(cfg.d);

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng(derive_seed(cfg.seed, "nh", t));
    sample_without_replacement(rng, static_cast<std::uint32_t>(cfg.n),
                               static_cast<std::uint32_t>(cfg.k), scratch, idx);
    std::fill(mean.begin(), mean.end(), 0.0);
    for (auto i : idx) ops.axpy(1.0, pop[i].data(), mean.data(), cfg.d);
    ops.scal(1.0 / kk, mean.data(), cfg.d);
    ops.axpy(-1.0, mu.data(), mean.data(), cfg.d);
    const double dev_sq = ops.nrm2sq(mean.data(), cfg.d);
    sum_sq += dev_sq;
    const double dev = std::sqrt(dev_sq);
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (dev > thresholds[i]) ++counts[i];
  }

  rep.mean_norm_sq =
      static_cast<double>(sum_sq / static_cast<long double>(cfg.trials));
  rep.second_moment_ok = rep.mean_norm_sq <= rep.second_moment_bound;
  rep.all_ok = rep.second_moment_ok;
  const double sig2 = cfg.sigma * cfg.sigma;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    TailPoint tp;
    tp.threshold = thresholds[i];
    tp.bound = 3.0 * std::exp(-kk * thresholds[i] * thresholds[i] /
                              (64.0 * sig2));
    tp.count = counts[i];
    tp.freq = static_cast<double>(counts[i]) /
              static_cast<double>(cfg.trials);
    tp.ok = tp.freq <= tp.bound;
    rep.all_ok = rep.all_ok && tp.ok;
    rep.tail.push_back(tp);
  }
  return rep;
}

std::string NormHoeffdingReport::to_json_string() const {
  nlohmann::json out;
  out["validator"] = "subsample_mean_deviation";
  out["n"] = config.n;
  out["d"] = config.d;
  out["k"] = config.k;
  out["sigma"] = config.sigma;
  out["trials"] = config.trials;
  out["seed"] = config.seed;
  nlohmann::json jt = nlohmann::json::array();
  for (const auto& tp : tail)
    jt.push_back({{"threshold", tp.threshold},
                  {"bound", tp.bound},
                  {"count", tp.count},
                  {"freq", tp.freq},
                  {"ok", tp.ok}});
  out["tail"] = std::move(jt);
  out["mean_norm_sq"] = mean_norm_sq;
  out["second_moment_bound"] = second_moment_bound;
  out["second_moment_ok"] = second_moment_ok;
  out["pass"] = all_ok;
  return out.dump();
}

std::string NormHoeffdingReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mean-deviation n=%zu k=%zu: E||.||^2 %.6f <= %.6f %s; %zu "
                "tail points %s",
                config.n, config.k, mean_norm_sq, second_moment_bound,
                second_moment_ok ? "ok" : "VIOLATED", tail.size(),
                all_ok ? "ok" : "VIOLATED");
  return buf;
}

OmegaSummary summarize_omega(std::span<const RunTrace> traces) {
  OmegaSummary s;
  s.runs = traces.size();
  for (const auto& tr : traces) {
    if (tr.deviation.checks > 0) ++s.runs_with_checks;
    if (tr.deviation.violations > 0) ++s.runs_with_violation;
    s.checks += tr.deviation.checks;
    s.violations += tr.deviation.violations;
    s.max_ratio = std::max(s.max_ratio, tr.deviation.max_ratio);
  }
  s.violating_fraction =
      s.runs_with_checks == 0
          ? 0.0
          : static_cast<double>(s.runs_with_violation) /
                static_cast<double>(s.runs_with_checks);
  return s;
}

std::string OmegaSummary::to_json_string() const {
  nlohmann::json out;
  out["validator"] = "deviation_envelope";
  out["runs"] = runs;
  out["runs_with_checks"] = runs_with_checks;
  out["runs_with_violation"] = runs_with_violation;
  out["checks"] = checks;
  out["violations"] = violations;
  out["max_ratio"] = max_ratio;
  out["violating_fraction"] = violating_fraction;
  return out.dump();
}

std::string OmegaSummary::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "deviation envelope: %zu/%zu runs violated (checks %lld, "
                "violations %lld, max ratio %.4f)",
                runs_with_violation, runs_with_checks, checks, violations,
                max_ratio);
  return buf;
}

}  // namespace probsarah
