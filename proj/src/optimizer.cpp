#include "probsarah/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "json.hpp"
#include "probsarah/bounds.hpp"
#include "probsarah/error.hpp"
#include "probsarah/kernels.hpp"
#include "probsarah/rng.hpp"

namespace probsarah {
namespace {

constexpr long long kNoCap = std::numeric_limits<long long>::max();

// Bookkeeping shared by the optimizer and the baselines: evaluation
// accounting, epoch-boundary gradient snapshots, and the final monitored
// gradient.  Monitoring evaluations are tracked separately and never count
// against the run's own budget.
struct RunContext {
  const GradientOracle& oracle;
  RunTrace& tr;
  long long budget_ifo;
  bool monitor_gradient;
  long long next_epoch = 1;
  std::vector<double> grad;

  RunContext(const GradientOracle& o, RunTrace& t, double epoch_budget,
             bool monitor)
      : oracle(o), tr(t), monitor_gradient(monitor), grad(o.dim(), 0.0) {
    const double n = static_cast<double>(o.sample_count());
    budget_ifo = epoch_budget > 0.0
                     ? static_cast<long long>(std::ceil(epoch_budget * n))
                     : kNoCap;
  }

  std::size_t n() const { return oracle.sample_count(); }

  double monitored_grad_sq(const std::vector<double>& x) {
    oracle.full_gradient(x, grad);
    tr.monitor_evals += static_cast<long long>(oracle.sample_count());
    return kernels::active().nrm2sq(grad.data(), grad.size());
  }

  // Records one point per epoch boundary crossed by the latest ifo update,
  // evaluated at the current iterate.  One IFO jump can cross many
  // boundaries; the gradient is evaluated once and shared by all of them.
  void snapshot(const std::vector<double>& x) {
    if (!monitor_gradient) return;
    bool have = false;
    double gsq = 0.0;
    while (tr.ifo >= next_epoch * static_cast<long long>(n())) {
      if (!have) {
        gsq = monitored_grad_sq(x);
        have = true;
      }
      tr.epochs.push_back({next_epoch, gsq});
      ++next_epoch;
    }
  }

  void finish(const std::vector<double>& x) {
    tr.x_final = x;
    tr.grad_norm_sq_final = monitor_gradient ? monitored_grad_sq(x) : -1.0;
  }
};

std::vector<double> initial_point(const RunConfig& cfg, std::size_t d) {
  std::vector<double> x;
  if (cfg.x0.empty()) {
    x.assign(d, 0.0);
  } else {
    if (cfg.x0.size() != d)
      throw ConfigError("x0 has dimension " + std::to_string(cfg.x0.size()) +
                        ", objective has " + std::to_string(d));
    x = cfg.x0;
    project(x, cfg.objective->radius);
  }
  return x;
}

const GradientOracle* resolve_oracle(const RunConfig& cfg,
                                     std::unique_ptr<Objective>& owned) {
  if (cfg.objective == nullptr) throw ConfigError("run config has no objective");
  if (cfg.oracle != nullptr) return cfg.oracle;
  owned = std::make_unique<Objective>(*cfg.objective);
  return owned.get();
}

void append_step(RunTrace& tr, bool record, long long j, long long k,
                 double nu_sq, double grad_sq, bool has_grad) {
  if (!record) return;
  tr.steps.push_back({j, k, nu_sq, tr.ifo, grad_sq, has_grad});
}

}  // namespace

RunTrace prob_sarah(const RunConfig& cfg) {
  std::unique_ptr<Objective> owned;
  const GradientOracle& oracle = *resolve_oracle(cfg, owned);
  const ObjectiveSpec& spec = *cfg.objective;
  const std::size_t n = oracle.sample_count();
  const std::size_t d = oracle.dim();
  const bool theory = cfg.mode != Mode::Experiment;

  ScheduleInputs sch{n, cfg.eps, cfg.delta, spec.L, spec.alpha_m, spec.d1};
  if (theory) validate_admissible(sch);
  if (!theory && cfg.eta <= 0.0)
    throw ConfigError("experiment mode requires a positive step size");
  if (!theory && cfg.epoch_budget <= 0.0 && cfg.max_outer <= 0)
    throw ConfigError("experiment mode requires an epoch budget or outer cap");

  long long max_outer = cfg.max_outer;
  if (max_outer <= 0) {
    if (cfg.mode == Mode::TheoryA) {
      max_outer = 2 * stop_bounds_a(cfg.eps, cfg.delta, n, spec.L, cfg.delta_f,
                                    spec.alpha_m)
                          .outer_cap;
    } else if (cfg.mode == Mode::TheoryB) {
      max_outer = 4 * stop_bound_b(cfg.eps, n, spec.L, cfg.delta_f);
    } else {
      max_outer = kNoCap;
    }
  }

  RunTrace tr;
  tr.algorithm = "prob_sarah";
  tr.seed = cfg.seed;
  RunContext ctx(oracle, tr, cfg.epoch_budget, cfg.monitor_gradient);
  Rng rng(cfg.seed);

  std::vector<double> x_tilde = initial_point(cfg, d);
  std::vector<std::uint32_t> idx, scratch, batch, identity(n);
  std::iota(identity.begin(), identity.end(), 0u);
  std::vector<double> nu(d, 0.0);
  std::vector<std::vector<double>> xs;
  std::vector<double> nu_hist;
  const auto& ops = kernels::active();
  const double half_eps_sq = 0.5 * cfg.eps * cfg.eps;

  for (long long j = 1; j <= max_outer; ++j) {
    if (tr.ifo >= ctx.budget_ifo) break;

    ScheduleParams sp;
    if (cfg.mode == Mode::TheoryA) {
      sp = schedule_a(j, sch);
    } else if (cfg.mode == Mode::TheoryB) {
      sp = schedule_b(j, sch);
    } else {
      sp = schedule_experiment(j, n, cfg.eta);
    }
    if (cfg.debug_full_batch) {
      sp.B = n;
      sp.b = n;
      sp.q = 0.0;
      sp.full_batch = true;
      if (theory) sp.eps_j = 8.0 * spec.L * spec.L * sp.tau;
    }
    const double eta = (theory && cfg.eta > 0.0) ? cfg.eta : sp.eta;

    // Checkpoint: without-replacement estimate of the full gradient.  With
    // B = n the sorted index list makes it bitwise equal to full_gradient.
    const std::uint32_t* ck_idx = identity.data();
    std::size_t ck_size = n;
    if (!cfg.debug_full_batch && sp.B < n) {
      sample_without_replacement(rng, n, sp.B, scratch, idx);
      ck_idx = idx.data();
      ck_size = sp.B;
    } else if (!cfg.debug_full_batch) {
      ck_size = sp.B;  // == n
    }
    oracle.mean_gradient({ck_idx, ck_size}, x_tilde, nu);
    tr.ifo += static_cast<long long>(ck_size);
    long long outer_ifo = static_cast<long long>(ck_size);

    xs.assign(1, x_tilde);
    xs.reserve(sp.K + 1);
    nu_hist.assign(1, ops.nrm2sq(nu.data(), d));

    // Deviation envelope state: running sum of ||nu_m||^2 for m < k.
    long double nu_prefix = 0.0L;
    auto deviation_check = [&](const std::vector<double>& xk, long long k) {
      if (!cfg.monitor_deviation || !theory) return;
      oracle.full_gradient(xk, ctx.grad);
      tr.monitor_evals += static_cast<long long>(n);
      long double err = 0.0L;
      for (std::size_t t = 0; t < d; ++t) {
        const long double diff =
            static_cast<long double>(nu[t]) - static_cast<long double>(ctx.grad[t]);
        err += diff * diff;
      }
      const long double L2 = static_cast<long double>(spec.L) * spec.L;
      const long double bj = static_cast<long double>(sp.b);
      const long double sigma_sq =
          4.0L * L2 * static_cast<long double>(eta) * eta / bj * nu_prefix;
      const long double envelope =
          static_cast<long double>(sp.l) *
              (sigma_sq + 4.0L * L2 * static_cast<long double>(sp.tau) *
                              static_cast<long double>(k) / bj) +
          static_cast<long double>(sp.q);
      ++tr.deviation.checks;
      // Tiny absolute slack absorbs last-bit noise in the exact-zero cases.
      if (err > envelope + 1e-18L) ++tr.deviation.violations;
      const double ratio = static_cast<double>(
          err / std::max(envelope, static_cast<long double>(1e-300)));
      tr.deviation.max_ratio = std::max(tr.deviation.max_ratio, ratio);
      tr.deviation.max_err_sq =
          std::max(tr.deviation.max_err_sq, static_cast<double>(err));
    };

    deviation_check(xs[0], 0);
    append_step(tr, cfg.record_steps, j, 0, nu_hist[0], 0.0, false);
    ctx.snapshot(xs[0]);

    for (std::size_t k = 1; k <= sp.K; ++k) {
      nu_prefix += static_cast<long double>(nu_hist[k - 1]);
      std::vector<double> xk = xs.back();
      ops.axpy(-eta, nu.data(), xk.data(), d);
      project(xk, spec.radius);

      const std::uint32_t* b_idx = identity.data();
      std::size_t b_size = sp.b;
      if (!cfg.debug_full_batch) {
        sample_with_replacement(rng, n, sp.b, batch);
        b_idx = batch.data();
      }
      oracle.accumulate_mean_diff({b_idx, b_size}, xk, xs.back(), nu);
      tr.ifo += 2 * static_cast<long long>(b_size);
      outer_ifo += 2 * static_cast<long long>(b_size);

      xs.push_back(std::move(xk));
      nu_hist.push_back(ops.nrm2sq(nu.data(), d));
      deviation_check(xs.back(), static_cast<long long>(k));
      append_step(tr, cfg.record_steps, j, static_cast<long long>(k),
                  nu_hist.back(), 0.0, false);
      ctx.snapshot(xs.back());
    }

    double mean_nu = 0.0;
    for (std::size_t k = 0; k < sp.K; ++k) mean_nu += nu_hist[k];
    mean_nu /= static_cast<double>(sp.K);

    const bool rule1 = theory && mean_nu <= sp.eps_tilde_sq;
    const bool rule2 = theory && sp.eps_j <= half_eps_sq;
    tr.outers.push_back({j, sp.B, sp.K, sp.b, outer_ifo, mean_nu, sp.eps_j,
                         sp.eps_tilde_sq, rule1, rule2});

    if (rule1 && rule2) {
      // k-hat: first index attaining the minimum over k = 0..K-1.
      std::size_t best = 0;
      for (std::size_t k = 1; k < sp.K; ++k)
        if (nu_hist[k] < nu_hist[best]) best = k;
      tr.stopped = true;
      tr.stop_outer = j;
      tr.k_hat = static_cast<long long>(best);
      tr.rule1_lhs = mean_nu;
      tr.rule1_rhs = sp.eps_tilde_sq;
      tr.rule2_lhs = sp.eps_j;
      tr.rule2_rhs = half_eps_sq;
      ctx.finish(xs[best]);
      return tr;
    }
    x_tilde = xs.back();
  }

  ctx.finish(x_tilde);
  return tr;
}

RunTrace sgd(const RunConfig& cfg, const BaselineParams& p) {
  std::unique_ptr<Objective> owned;
  const GradientOracle& oracle = *resolve_oracle(cfg, owned);
  const std::size_t n = oracle.sample_count();
  const std::size_t d = oracle.dim();
  if (p.eta <= 0.0) throw ConfigError("sgd requires a positive step size");
  if (p.batch == 0) throw ConfigError("sgd requires a positive batch size");
  if (cfg.epoch_budget <= 0.0 && cfg.max_outer <= 0)
    throw ConfigError("baselines require an epoch budget or step cap");

  RunTrace tr;
  tr.algorithm = "sgd";
  tr.seed = cfg.seed;
  RunContext ctx(oracle, tr, cfg.epoch_budget, cfg.monitor_gradient);
  Rng rng(cfg.seed);
  const auto& ops = kernels::active();

  std::vector<double> x = initial_point(cfg, d);
  std::vector<double> g(d, 0.0);
  std::vector<std::uint32_t> batch, identity;
  const bool exact = p.batch >= n;
  if (exact) {
    identity.resize(n);
    std::iota(identity.begin(), identity.end(), 0u);
  }
  const long long step_cap = cfg.max_outer > 0 ? cfg.max_outer : kNoCap;

  for (long long t = 1; t <= step_cap && tr.ifo < ctx.budget_ifo; ++t) {
    const std::uint32_t* idx = identity.data();
    std::size_t bsz = n;
    if (!exact) {
      sample_with_replacement(rng, n, p.batch, batch);
      idx = batch.data();
      bsz = p.batch;
    }
    oracle.mean_gradient({idx, bsz}, x, g);
    tr.ifo += static_cast<long long>(bsz);
    append_step(tr, cfg.record_steps, t, 0, ops.nrm2sq(g.data(), d), 0.0,
                false);
    ops.axpy(-p.eta, g.data(), x.data(), d);
    project(x, cfg.objective->radius);
    ctx.snapshot(x);
  }
  ctx.finish(x);
  return tr;
}

namespace {

// Shared inner phase of svrg/scsg: control-variate steps against a fixed
// checkpoint gradient mu at x_ref.  Returns the final iterate.
void variance_reduced_epoch(const RunConfig& cfg, const BaselineParams& p,
                            RunContext& ctx, Rng& rng, long long epoch,
                            std::size_t inner_len,
                            const std::vector<double>& mu,
                            std::vector<double>& x,
                            const std::vector<double>& x_ref,
                            std::size_t ck_size, long long ck_ifo) {
  const GradientOracle& oracle = ctx.oracle;
  const std::size_t d = oracle.dim();
  const std::size_t n = oracle.sample_count();
  const auto& ops = kernels::active();
  RunTrace& tr = ctx.tr;

  std::vector<double> nu = mu;
  std::vector<std::uint32_t> batch;
  long long outer_ifo = ck_ifo;
  double nu_sum = ops.nrm2sq(nu.data(), d);
  append_step(tr, cfg.record_steps, epoch, 0, nu_sum, 0.0, false);
  std::size_t executed = 0;

  for (std::size_t t = 1; t <= inner_len && tr.ifo < ctx.budget_ifo; ++t) {
    std::vector<double> xt = x;
    ops.axpy(-p.eta, nu.data(), xt.data(), d);
    project(xt, cfg.objective->radius);
    sample_with_replacement(rng, n, p.batch, batch);
    // nu_t = mean over batch of grad f_i(x_t) - grad f_i(x_ref) + mu.
    nu = mu;
    oracle.accumulate_mean_diff(batch, xt, x_ref, nu);
    tr.ifo += 2 * static_cast<long long>(batch.size());
    outer_ifo += 2 * static_cast<long long>(batch.size());
    x = std::move(xt);
    const double nsq = ops.nrm2sq(nu.data(), d);
    nu_sum += nsq;
    append_step(tr, cfg.record_steps, epoch, static_cast<long long>(t), nsq,
                0.0, false);
    ctx.snapshot(x);
    ++executed;
  }
  const double mean_nu =
      nu_sum / static_cast<double>(executed + 1);
  tr.outers.push_back({epoch, ck_size, executed, p.batch, outer_ifo, mean_nu,
                       0.0, 0.0, false, false});
}

}  // namespace

RunTrace svrg(const RunConfig& cfg, const BaselineParams& p) {
  std::unique_ptr<Objective> owned;
  const GradientOracle& oracle = *resolve_oracle(cfg, owned);
  const std::size_t n = oracle.sample_count();
  const std::size_t d = oracle.dim();
  if (p.eta <= 0.0) throw ConfigError("svrg requires a positive step size");
  if (p.batch == 0) throw ConfigError("svrg requires a positive batch size");
  if (cfg.epoch_budget <= 0.0 && cfg.max_outer <= 0)
    throw ConfigError("baselines require an epoch budget or step cap");

  RunTrace tr;
  tr.algorithm = "svrg";
  tr.seed = cfg.seed;
  RunContext ctx(oracle, tr, cfg.epoch_budget, cfg.monitor_gradient);
  Rng rng(cfg.seed);

  std::vector<double> x = initial_point(cfg, d);
  std::vector<double> mu(d, 0.0);
  const std::size_t inner_len =
      p.inner_len > 0 ? p.inner_len : (n + p.batch - 1) / p.batch;
  const long long epoch_cap = cfg.max_outer > 0 ? cfg.max_outer : kNoCap;

  for (long long e = 1; e <= epoch_cap && tr.ifo < ctx.budget_ifo; ++e) {
    std::vector<double> x_ref = x;
    oracle.full_gradient(x_ref, mu);
    tr.ifo += static_cast<long long>(n);
    ctx.snapshot(x_ref);
    variance_reduced_epoch(cfg, p, ctx, rng, e, inner_len, mu, x, x_ref, n,
                           static_cast<long long>(n));
  }
  ctx.finish(x);
  return tr;
}

RunTrace scsg(const RunConfig& cfg, const BaselineParams& p) {
  std::unique_ptr<Objective> owned;
  const GradientOracle& oracle = *resolve_oracle(cfg, owned);
  const std::size_t n = oracle.sample_count();
  const std::size_t d = oracle.dim();
  if (p.eta <= 0.0) throw ConfigError("scsg requires a positive step size");
  if (p.batch == 0) throw ConfigError("scsg requires a positive batch size");
  if (cfg.epoch_budget <= 0.0 && cfg.max_outer <= 0)
    throw ConfigError("baselines require an epoch budget or step cap");

  std::size_t ck = p.checkpoint;
  if (ck == 0) {
    // Power-of-two rounding of n^(2/3), clamped to [1, n].
    const double raw = std::pow(static_cast<double>(n), 2.0 / 3.0);
    const long long expo = std::llround(std::log2(std::max(1.0, raw)));
    ck = expo <= 0 ? 1 : static_cast<std::size_t>(1ull << std::min<long long>(expo, 62));
  }
  ck = std::min(ck, n);
  if (ck == 0) throw ConfigError("scsg requires a positive checkpoint batch");

  RunTrace tr;
  tr.algorithm = "scsg";
  tr.seed = cfg.seed;
  RunContext ctx(oracle, tr, cfg.epoch_budget, cfg.monitor_gradient);
  Rng rng(cfg.seed);

  std::vector<double> x = initial_point(cfg, d);
  std::vector<double> mu(d, 0.0);
  std::vector<std::uint32_t> idx, scratch;
  const long long epoch_cap = cfg.max_outer > 0 ? cfg.max_outer : kNoCap;
  const double mean_len = static_cast<double>(ck) / static_cast<double>(p.batch);
  // Geometric lengths are truncated far in the tail so a single draw cannot
  // consume the whole budget; the cutoff is ~2^-64 likely per epoch.
  const double len_cap = 64.0 * mean_len + 1.0;
  const double p_geo =
      static_cast<double>(p.batch) / (static_cast<double>(ck) + p.batch);

  for (long long e = 1; e <= epoch_cap && tr.ifo < ctx.budget_ifo; ++e) {
    std::vector<double> x_ref = x;
    sample_without_replacement(rng, n, ck, scratch, idx);
    oracle.mean_gradient(idx, x_ref, mu);
    tr.ifo += static_cast<long long>(ck);
    ctx.snapshot(x_ref);
    const double u = rng.uniform01();
    double len = std::floor(std::log1p(-u) / std::log1p(-p_geo));
    if (!(len >= 0.0)) len = 0.0;
    len = std::min(len, len_cap);
    variance_reduced_epoch(cfg, p, ctx, rng, e, static_cast<std::size_t>(len),
                           mu, x, x_ref, ck, static_cast<long long>(ck));
  }
  ctx.finish(x);
  return tr;
}

long long ifo_cost(const RunTrace& trace) {
  if (trace.algorithm == "prob_sarah") {
    long long total = 0;
    for (const auto& o : trace.outers)
      total += static_cast<long long>(o.B) +
               2ll * static_cast<long long>(o.b) * static_cast<long long>(o.K);
    return total;
  }
  return trace.ifo;
}

std::string RunTrace::to_json_string() const {
  nlohmann::json out;
  out["algorithm"] = algorithm;
  out["seed"] = seed;
  out["stopped"] = stopped;
  out["stop_outer"] = stop_outer;
  out["k_hat"] = k_hat;
  out["rules"] = {{"mean_nu_sq", rule1_lhs},
                  {"eps_tilde_sq", rule1_rhs},
                  {"eps_j", rule2_lhs},
                  {"half_eps_sq", rule2_rhs}};
  out["ifo"] = ifo;
  out["monitor_evals"] = monitor_evals;
  out["grad_norm_sq_final"] = grad_norm_sq_final;
  out["x_final"] = x_final;
  nlohmann::json jouters = nlohmann::json::array();
  for (const auto& o : outers) {
    jouters.push_back({{"j", o.j},
                       {"B", o.B},
                       {"K", o.K},
                       {"b", o.b},
                       {"ifo_added", o.ifo_added},
                       {"mean_nu_sq", o.mean_nu_sq},
                       {"eps_j", o.eps_j},
                       {"eps_tilde_sq", o.eps_tilde_sq},
                       {"rule1", o.rule1},
                       {"rule2", o.rule2}});
  }
  out["outers"] = std::move(jouters);
  nlohmann::json jsteps = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json js = {
        {"j", s.j}, {"k", s.k}, {"nu_norm_sq", s.nu_norm_sq}, {"ifo", s.ifo}};
    if (s.has_grad) js["grad_norm_sq"] = s.grad_norm_sq;
    jsteps.push_back(std::move(js));
  }
  out["steps"] = std::move(jsteps);
  nlohmann::json jepochs = nlohmann::json::array();
  for (const auto& e : epochs)
    jepochs.push_back({{"epoch", e.epoch}, {"grad_norm_sq", e.grad_norm_sq}});
  out["epochs"] = std::move(jepochs);
  out["deviation"] = {{"checks", deviation.checks},
                      {"violations", deviation.violations},
                      {"max_ratio", deviation.max_ratio},
                      {"max_err_sq", deviation.max_err_sq}};
  return out.dump();
}

}  // namespace probsarah
