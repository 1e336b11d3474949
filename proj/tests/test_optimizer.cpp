#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "doctest.h"
#include "probsarah/dataset.hpp"
#include "probsarah/error.hpp"
#include "probsarah/kernels.hpp"
#include "probsarah/objective.hpp"
#include "probsarah/optimizer.hpp"
#include "probsarah/rng.hpp"

using namespace probsarah;

namespace {

// Counts oracle traffic independently of the optimizer's own bookkeeping.
class CountingOracle final : public GradientOracle {
 public:
  explicit CountingOracle(const Objective& inner) : inner_(inner) {}

  std::size_t sample_count() const override { return inner_.sample_count(); }
  std::size_t dim() const override { return inner_.dim(); }
  void sample_gradient(std::size_t i, std::span<const double> x,
                       std::span<double> out) const override {
    ++evals_;
    inner_.sample_gradient(i, x, out);
  }
  double loss(std::span<const double> x) const override {
    return inner_.loss(x);
  }
  void mean_gradient(std::span<const std::uint32_t> idx,
                     std::span<const double> x,
                     std::span<double> out) const override {
    evals_ += static_cast<long long>(idx.size());
    inner_.mean_gradient(idx, x, out);
  }
  void accumulate_mean_diff(std::span<const std::uint32_t> idx,
                            std::span<const double> x_new,
                            std::span<const double> x_old,
                            std::span<double> nu) const override {
    evals_ += 2 * static_cast<long long>(idx.size());
    inner_.accumulate_mean_diff(idx, x_new, x_old, nu);
  }
  void full_gradient(std::span<const double> x,
                     std::span<double> out) const override {
    evals_ += static_cast<long long>(inner_.sample_count());
    inner_.full_gradient(x, out);
  }

  long long evals() const { return evals_; }
  void reset() { evals_ = 0; }

 private:
  const Objective& inner_;
  mutable long long evals_ = 0;
};

struct Problem {
  std::shared_ptr<const Dataset> data;
  ObjectiveSpec spec;
};

Problem anchor_problem(std::size_t n, std::size_t d, double radius,
                       std::uint64_t seed) {
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.offsets.assign(1, 0);
  Rng rng(seed);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    rng.fill_ball(row, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      ds.indices.push_back(static_cast<std::uint32_t>(j + 1));
      ds.values.push_back(row[j]);
    }
    ds.offsets.push_back(ds.indices.size());
    ds.labels.push_back(1.0);
  }
  compute_row_norms(ds);
  Problem p;
  p.data = std::make_shared<Dataset>(std::move(ds));
  p.spec = make_objective(p.data, Family::QuadraticAnchor,
                          Regularizer::RationalSquare, 0.1, radius);
  return p;
}

RunConfig theory_config(const Problem& p, std::uint64_t seed) {
  RunConfig cfg;
  cfg.objective = &p.spec;
  cfg.mode = Mode::TheoryA;
  cfg.eps = 0.3;
  cfg.delta = 0.1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("n = 1: the recursive estimate equals the true gradient to 1e-12") {
  const auto p = anchor_problem(1, 6, 5.0, 301);
  auto cfg = theory_config(p, 7);
  cfg.monitor_deviation = true;
  const auto tr = prob_sarah(cfg);
  CHECK(tr.stopped);
  CHECK(tr.deviation.checks > 0);
  CHECK(tr.deviation.violations == 0);
  CHECK(std::sqrt(tr.deviation.max_err_sq) <= 1e-12);
}

TEST_CASE("debug full batch: every estimate equals the true gradient") {
  const auto p = anchor_problem(12, 5, 5.0, 302);
  auto cfg = theory_config(p, 8);
  cfg.debug_full_batch = true;
  cfg.monitor_deviation = true;
  const auto tr = prob_sarah(cfg);
  CHECK(tr.deviation.checks > 0);
  CHECK(tr.deviation.violations == 0);
  CHECK(std::sqrt(tr.deviation.max_err_sq) <= 1e-12);
}

TEST_CASE("oracle traffic matches both the trace counter and the cost formula") {
  const auto p = anchor_problem(40, 4, 5.0, 303);
  const Objective obj(p.spec);
  const CountingOracle counter(obj);
  auto cfg = theory_config(p, 9);
  cfg.oracle = &counter;
  cfg.monitor_gradient = false;  // keep the counter free of monitor traffic
  cfg.max_outer = 6;
  const auto tr = prob_sarah(cfg);

  long long want = 0;
  for (const auto& o : tr.outers) {
    CHECK(o.ifo_added ==
          (long long)o.B + 2 * (long long)o.b * (long long)o.K);
    want += o.ifo_added;
  }
  CHECK(tr.ifo == want);
  CHECK(counter.evals() == want);
  CHECK(ifo_cost(tr) == want);
  CHECK(tr.monitor_evals == 0);
}

TEST_CASE("gradient monitoring is billed separately from the run") {
  const auto p = anchor_problem(30, 4, 5.0, 304);
  const Objective obj(p.spec);
  const CountingOracle counter(obj);
  auto cfg = theory_config(p, 10);
  cfg.oracle = &counter;
  cfg.max_outer = 4;
  const auto tr = prob_sarah(cfg);
  CHECK(tr.monitor_evals > 0);
  CHECK(counter.evals() == tr.ifo + tr.monitor_evals);
  CHECK(tr.grad_norm_sq_final >= 0.0);
}

TEST_CASE("same seed gives byte-identical traces, different seed diverges") {
  const auto p = anchor_problem(25, 5, 5.0, 305);
  auto cfg = theory_config(p, 11);
  cfg.max_outer = 5;
  const auto a = prob_sarah(cfg);
  const auto b = prob_sarah(cfg);
  CHECK(a.to_json_string() == b.to_json_string());
  cfg.seed = 12;
  const auto c = prob_sarah(cfg);
  CHECK(a.to_json_string() != c.to_json_string());
}

TEST_CASE("a stopped run's logged rule quantities satisfy both inequalities") {
  const auto p = anchor_problem(15, 4, 5.0, 306);
  for (auto mode : {Mode::TheoryA, Mode::TheoryB}) {
    auto cfg = theory_config(p, 13);
    cfg.mode = mode;
    const auto tr = prob_sarah(cfg);
    REQUIRE(tr.stopped);
    CHECK(tr.rule1_lhs <= tr.rule1_rhs);
    CHECK(tr.rule2_lhs <= tr.rule2_rhs);
    CHECK(tr.rule1_rhs ==
          doctest::Approx(cfg.eps * cfg.eps / 5.0).epsilon(1e-14));
    CHECK(tr.rule2_rhs ==
          doctest::Approx(cfg.eps * cfg.eps / 2.0).epsilon(1e-14));
    CHECK(tr.stop_outer >= 1);
    CHECK(tr.k_hat >= 0);
    // The returned point is the argmin iterate, whose gradient should meet
    // the target on this easy problem.
    CHECK(tr.grad_norm_sq_final <= cfg.eps * cfg.eps);
  }
}

TEST_CASE("the returned iterate is the smallest-index norm minimizer") {
  const auto p = anchor_problem(15, 4, 5.0, 307);
  auto cfg = theory_config(p, 14);
  cfg.record_steps = true;
  const auto tr = prob_sarah(cfg);
  REQUIRE(tr.stopped);
  REQUIRE(tr.k_hat >= 0);
  // Collect ||nu_k||^2, k = 0..K-1, of the stopping outer iteration.
  std::vector<double> nus;
  for (const auto& s : tr.steps)
    if (s.j == tr.stop_outer) nus.push_back(s.nu_norm_sq);
  REQUIRE(!nus.empty());
  const auto K = tr.outers.back().K;
  REQUIRE(nus.size() == K + 1);  // k = 0..K recorded
  double best = nus[0];
  long long best_k = 0;
  for (std::size_t k = 1; k + 1 <= K; ++k)  // argmin over k < K only
    if (nus[k] < best) {
      best = nus[k];
      best_k = (long long)k;
    }
  CHECK(tr.k_hat == best_k);
  // And the logged mean matches the step records.
  double mean = 0.0;
  for (std::size_t k = 0; k < K; ++k) mean += nus[k];
  mean /= (double)K;
  CHECK(tr.rule1_lhs == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("rejects inadmissible runs and missing step sizes") {
  const auto p = anchor_problem(10, 3, 5.0, 308);
  auto cfg = theory_config(p, 15);
  cfg.eps = 0.5;  // > 1/e
  CHECK_THROWS_AS((void)prob_sarah(cfg), ConfigError);
  cfg = theory_config(p, 15);
  cfg.mode = Mode::Experiment;  // needs eta > 0
  CHECK_THROWS_AS((void)prob_sarah(cfg), ConfigError);
  cfg.eta = 0.01;  // needs a budget or a cap
  CHECK_THROWS_AS((void)prob_sarah(cfg), ConfigError);
  cfg.epoch_budget = 2.0;
  CHECK_NOTHROW((void)prob_sarah(cfg));
  RunConfig empty;
  CHECK_THROWS_AS((void)prob_sarah(empty), ConfigError);
}

TEST_CASE("experiment mode respects the epoch budget within one granule") {
  const auto p = anchor_problem(64, 4, 5.0, 309);
  RunConfig cfg;
  cfg.objective = &p.spec;
  cfg.mode = Mode::Experiment;
  cfg.eta = 0.05;
  cfg.epoch_budget = 3.0;
  cfg.seed = 16;
  const auto tr = prob_sarah(cfg);
  CHECK_FALSE(tr.stopped);  // no stopping rule in experiment mode
  CHECK(tr.ifo >= 3 * 64);
  // Budget is checked between outer iterations, so the overshoot is at most
  // one outer iteration's cost.
  CHECK(tr.ifo - tr.outers.back().ifo_added < 3 * 64);
  // Epoch snapshots cover every completed epoch.
  REQUIRE(tr.epochs.size() >= 3);
  for (std::size_t e = 0; e < tr.epochs.size(); ++e)
    CHECK(tr.epochs[e].epoch == (long long)e + 1);
}

TEST_CASE("full-batch sgd is deterministic gradient descent") {
  const auto p = anchor_problem(20, 4, 50.0, 310);
  RunConfig cfg;
  cfg.objective = &p.spec;
  cfg.mode = Mode::Experiment;
  cfg.eta = 0.2;
  cfg.max_outer = 25;
  cfg.seed = 17;
  BaselineParams bp;
  bp.eta = 0.2;
  bp.batch = 64;  // >= n: exact full-gradient steps
  const auto a = sgd(cfg, bp);
  cfg.seed = 999;  // seed must not matter for deterministic steps
  const auto b = sgd(cfg, bp);
  CHECK(a.epochs.size() == b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i)
    CHECK(a.epochs[i].grad_norm_sq == b.epochs[i].grad_norm_sq);

  // Independent replay of the descent recursion.
  const Objective obj(p.spec);
  std::vector<double> x(p.spec.data->d, 0.0), g(p.spec.data->d);
  for (int t = 0; t < 25; ++t) {
    obj.full_gradient(x, g);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] -= 0.2 * g[j];
    project(x, p.spec.radius);
  }
  for (std::size_t j = 0; j < x.size(); ++j)
    CHECK(a.x_final[j] == doctest::Approx(x[j]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("svrg's first inner step starts from the exact full gradient") {
  const auto p = anchor_problem(18, 4, 5.0, 311);
  RunConfig cfg;
  cfg.objective = &p.spec;
  cfg.mode = Mode::Experiment;
  cfg.eta = 0.05;
  cfg.max_outer = 2;
  cfg.seed = 18;
  cfg.record_steps = true;
  BaselineParams bp;
  bp.eta = 0.05;
  bp.batch = 3;
  const auto tr = svrg(cfg, bp);
  REQUIRE(!tr.steps.empty());
  const Objective obj(p.spec);
  const std::vector<double> origin(p.spec.data->d, 0.0);
  std::vector<double> g(p.spec.data->d);
  obj.full_gradient(origin, g);
  const double nsq = kernels::active().nrm2sq(g.data(), g.size());
  CHECK(tr.steps.front().nu_norm_sq == nsq);  // bitwise: same code path
}

TEST_CASE("baselines complete within budget and report their traffic") {
  const auto p = anchor_problem(50, 4, 5.0, 312);
  RunConfig cfg;
  cfg.objective = &p.spec;
  cfg.mode = Mode::Experiment;
  cfg.eta = 0.05;
  cfg.epoch_budget = 4.0;
  cfg.seed = 19;
  BaselineParams bp;
  bp.eta = 0.05;
  bp.batch = 4;
  for (auto* fn : {&sgd, &svrg, &scsg}) {
    const auto tr = (*fn)(cfg, bp);
    CHECK(tr.ifo >= 4 * 50);
    CHECK(ifo_cost(tr) == tr.ifo);
    CHECK(tr.epochs.size() >= 4);
    CHECK(!tr.x_final.empty());
    double nrm = 0.0;
    for (double v : tr.x_final) nrm += v * v;
    CHECK(std::sqrt(nrm) <= p.spec.radius + 1e-12);
  }
}

TEST_CASE("unbiasedness: the estimator update matches the mean difference") {
  // Logistic gradients vary per sample (anchor differences would not).
  const auto base = anchor_problem(30, 4, 5.0, 313);
  const auto spec = make_objective(base.data, Family::Logistic,
                                   Regularizer::RationalSquare, 0.1, 5.0);
  const Objective obj(spec);
  const std::size_t d = spec.data->d;
  Rng rng(20);
  std::vector<double> x(d), y(d);
  rng.fill_ball(x, 2.0);
  rng.fill_ball(y, 2.0);

  // Exact mean difference over all samples.
  std::vector<double> exact(d, 0.0);
  {
    std::vector<std::uint32_t> all(spec.data->n);
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    obj.accumulate_mean_diff(all, x, y, exact);
  }

  // Monte Carlo over with-replacement batches.
  std::vector<double> acc(d, 0.0), nu(d);
  std::vector<std::uint32_t> batch;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    sample_with_replacement(rng, (std::uint32_t)spec.data->n, 5, batch);
    std::fill(nu.begin(), nu.end(), 0.0);
    obj.accumulate_mean_diff(batch, x, y, nu);
    for (std::size_t j = 0; j < d; ++j) acc[j] += nu[j];
  }
  for (std::size_t j = 0; j < d; ++j)
    CHECK(acc[j] / trials ==
          doctest::Approx(exact[j]).epsilon(0.05).scale(0.1));
}

TEST_CASE("json serialization carries the run identity") {
  const auto p = anchor_problem(10, 3, 5.0, 314);
  auto cfg = theory_config(p, 21);
  cfg.max_outer = 2;
  const auto tr = prob_sarah(cfg);
  const auto s = tr.to_json_string();
  CHECK(s.find("\"algorithm\"") != std::string::npos);
  CHECK(s.find("prob_sarah") != std::string::npos);
  CHECK(s.find("\"ifo\"") != std::string::npos);
  CHECK(s.find("\"deviation\"") != std::string::npos);
}
