#include "probsarah/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "probsarah/error.hpp"
#include "probsarah/kernels.hpp"
#include "probsarah/rng.hpp"
#include "probsarah/sha1.hpp"

namespace probsarah {
namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("unknown key \"" + it.key() + "\" in " + ctx);
  }
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(std::string("cannot open ") + what + ": " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw ConfigError(std::string("cannot read ") + what + ": " + path);
  return std::move(ss).str();
}

Family family_from(const std::string& s) {
  if (s == "logistic") return Family::Logistic;
  if (s == "quadratic_anchor") return Family::QuadraticAnchor;
  throw ConfigError("unknown objective family \"" + s + "\"");
}
const char* family_name(Family f) {
  return f == Family::Logistic ? "logistic" : "quadratic_anchor";
}

Regularizer reg_from(const std::string& s) {
  if (s == "rational_square") return Regularizer::RationalSquare;
  if (s == "fourth_root") return Regularizer::FourthRoot;
  throw ConfigError("unknown regularizer \"" + s + "\"");
}
const char* reg_name(Regularizer r) {
  return r == Regularizer::RationalSquare ? "rational_square" : "fourth_root";
}

Setting setting_from(const std::string& s) {
  if (s == "A") return Setting::A;
  if (s == "B") return Setting::B;
  throw ConfigError("setting must be \"A\" or \"B\"");
}

Mode mode_from(const std::string& s, Setting setting) {
  if (s == "theory") return setting == Setting::A ? Mode::TheoryA : Mode::TheoryB;
  if (s == "theory_a") return Mode::TheoryA;
  if (s == "theory_b") return Mode::TheoryB;
  if (s == "experiment") return Mode::Experiment;
  throw ConfigError("unknown mode \"" + s + "\"");
}
const char* mode_name(Mode m) {
  switch (m) {
    case Mode::TheoryA: return "theory_a";
    case Mode::TheoryB: return "theory_b";
    case Mode::Experiment: return "experiment";
  }
  return "experiment";
}

SyntheticSpec synthetic_from(const json& j) {
  check_keys(j, {"kind", "n", "d", "anchor_radius", "nnz", "margin",
                 "flip_prob", "seed"},
             "data.synthetic");
  SyntheticSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.n = j.at("n").get<std::size_t>();
  s.d = j.at("d").get<std::size_t>();
  if (j.contains("anchor_radius")) s.anchor_radius = j["anchor_radius"].get<double>();
  if (j.contains("nnz")) s.nnz = j["nnz"].get<std::size_t>();
  if (j.contains("margin")) s.margin = j["margin"].get<double>();
  if (j.contains("flip_prob")) s.flip_prob = j["flip_prob"].get<double>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
  return {{"kind", s.kind},          {"n", s.n},
          {"d", s.d},                {"anchor_radius", s.anchor_radius},
          {"nnz", s.nnz},            {"margin", s.margin},
          {"flip_prob", s.flip_prob}, {"seed", s.seed}};
}

// Config echo for summary.json.  out_dir is runtime plumbing, not an
// experiment input; leaving it out keeps summaries byte-comparable across
// output locations.
json config_to_json(const ExperimentConfig& cfg) {
  json data;
  if (cfg.data.is_synthetic())
    data["synthetic"] = synthetic_to_json(cfg.data.synthetic);
  else
    data["path"] = cfg.data.path;
  json algos = json::array();
  for (const auto& a : cfg.algorithms)
    algos.push_back({{"name", a.name},
                     {"label", a.label},
                     {"mode", mode_name(a.mode)},
                     {"eta", a.eta},
                     {"batch", a.batch},
                     {"checkpoint", a.checkpoint},
                     {"inner_len", a.inner_len}});
  return {{"data", std::move(data)},
          {"normalize", cfg.normalize},
          {"objective",
           {{"family", family_name(cfg.family)},
            {"regularizer", reg_name(cfg.reg)},
            {"lambda", cfg.lambda},
            {"radius", cfg.radius},
            {"mu", cfg.mu}}},
          {"algorithms", std::move(algos)},
          {"runs", cfg.runs},
          {"epochs", cfg.epochs},
          {"epoch_budget", cfg.epoch_budget},
          {"eps", cfg.eps},
          {"delta", cfg.delta},
          {"delta_eval", cfg.delta_eval},
          {"quantile_levels", cfg.quantile_levels},
          {"setting", cfg.setting == Setting::A ? "A" : "B"},
          {"seed", cfg.seed},
          {"monitor_deviation", cfg.monitor_deviation}};
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(cfg.delta_eval > 0.0 && cfg.delta_eval < 1.0))
    throw ConfigError("delta_eval must lie in (0, 1)");
  for (double q : cfg.quantile_levels)
    if (!(q > 0.0 && q < 1.0))
      throw ConfigError("quantile levels must lie in (0, 1)");
  if (cfg.data.is_synthetic()) {
    const auto& s = cfg.data.synthetic;
    if (s.kind != "quadratic_anchor" && s.kind != "sparse_logistic")
      throw ConfigError("unknown synthetic kind \"" + s.kind + "\"");
    if (s.n < 1 || s.d < 1)
      throw ConfigError("synthetic data needs n >= 1 and d >= 1");
    if (s.kind == "sparse_logistic" && (s.nnz < 1 || s.nnz > s.d))
      throw ConfigError("sparse_logistic needs 1 <= nnz <= d");
    if (!(s.flip_prob >= 0.0 && s.flip_prob < 1.0))
      throw ConfigError("flip_prob must lie in [0, 1)");
    if (!(s.anchor_radius > 0.0))
      throw ConfigError("anchor_radius must be positive");
  }
  std::vector<std::string> labels;
  for (const auto& a : cfg.algorithms) {
    if (a.name != "prob_sarah" && a.name != "sgd" && a.name != "svrg" &&
        a.name != "scsg")
      throw ConfigError("unknown algorithm \"" + a.name + "\"");
    const std::string label = a.label.empty() ? a.name : a.label;
    if (std::find(labels.begin(), labels.end(), label) != labels.end())
      throw ConfigError("duplicate algorithm label \"" + label + "\"");
    labels.push_back(label);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::shared_ptr<Dataset> make_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1)
    throw ConfigError("synthetic data needs n >= 1 and d >= 1");
  auto ds = std::make_shared<Dataset>();
  ds->n = spec.n;
  ds->d = spec.d;
  ds->offsets.reserve(spec.n + 1);
  ds->offsets.push_back(0);

  if (spec.kind == "quadratic_anchor") {
    Rng rng(derive_seed(spec.seed, "synth-qa", 0));
    std::vector<double> row(spec.d);
    for (std::size_t i = 0; i < spec.n; ++i) {
      rng.fill_ball(row, spec.anchor_radius);
      for (std::size_t t = 0; t < spec.d; ++t) {
        ds->indices.push_back(static_cast<std::uint32_t>(t + 1));
        ds->values.push_back(row[t]);
      }
      ds->offsets.push_back(ds->indices.size());
      ds->labels.push_back(1.0);
    }
  } else if (spec.kind == "sparse_logistic") {
    if (spec.nnz < 1 || spec.nnz > spec.d)
      throw ConfigError("sparse_logistic needs 1 <= nnz <= d");
    Rng rng(derive_seed(spec.seed, "synth-sl", 0));
    // Hidden direction scaled so margins have standard deviation `margin`.
    std::vector<double> truth(spec.d);
    const double scale = spec.margin / std::sqrt(static_cast<double>(spec.nnz));
    for (auto& t : truth) t = scale * rng.normal();
    std::vector<std::uint32_t> cols, scratch;
    for (std::size_t i = 0; i < spec.n; ++i) {
      sample_without_replacement(rng, static_cast<std::uint32_t>(spec.d),
                                 static_cast<std::uint32_t>(spec.nnz), scratch,
                                 cols);
      double z = 0.0;
      for (auto c : cols) {
        ds->indices.push_back(c + 1);
        ds->values.push_back(1.0);
        z += truth[c];
      }
      ds->offsets.push_back(ds->indices.size());
      double y = z >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform01() < spec.flip_prob) y = -y;
      ds->labels.push_back(y);
    }
  } else {
    throw ConfigError("unknown synthetic kind \"" + spec.kind + "\"");
  }
  compute_row_norms(*ds);
  return ds;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(root,
               {"data", "normalize", "objective", "algorithms", "runs",
                "epochs", "epoch_budget", "eps", "delta", "delta_eval",
                "quantile_levels", "setting", "seed", "monitor_deviation",
                "out"},
               "config");
    ExperimentConfig cfg;
    if (!root.contains("data"))
      throw ConfigError("config needs a \"data\" section");
    const json& jd = root["data"];
    check_keys(jd, {"path", "synthetic"}, "data");
    if (jd.contains("path") == jd.contains("synthetic"))
      throw ConfigError("data needs exactly one of \"path\" or \"synthetic\"");
    if (jd.contains("path"))
      cfg.data.path = jd["path"].get<std::string>();
    else
      cfg.data.synthetic = synthetic_from(jd["synthetic"]);

    if (root.contains("normalize")) cfg.normalize = root["normalize"].get<bool>();
    if (root.contains("setting"))
      cfg.setting = setting_from(root["setting"].get<std::string>());

    if (root.contains("objective")) {
      const json& jo = root["objective"];
      check_keys(jo, {"family", "regularizer", "lambda", "radius", "mu"},
                 "objective");
      if (jo.contains("family"))
        cfg.family = family_from(jo["family"].get<std::string>());
      if (jo.contains("regularizer"))
        cfg.reg = reg_from(jo["regularizer"].get<std::string>());
      if (jo.contains("lambda")) cfg.lambda = jo["lambda"].get<double>();
      if (jo.contains("radius")) cfg.radius = jo["radius"].get<double>();
      if (jo.contains("mu")) cfg.mu = jo["mu"].get<double>();
    }

    if (root.contains("algorithms")) {
      for (const json& ja : root["algorithms"]) {
        check_keys(ja,
                   {"name", "label", "mode", "eta", "batch", "checkpoint",
                    "inner_len"},
                   "algorithms[]");
        AlgoConfig a;
        a.name = ja.at("name").get<std::string>();
        if (ja.contains("label")) a.label = ja["label"].get<std::string>();
        if (ja.contains("mode"))
          a.mode = mode_from(ja["mode"].get<std::string>(), cfg.setting);
        if (ja.contains("eta")) a.eta = ja["eta"].get<double>();
        if (ja.contains("batch")) a.batch = ja["batch"].get<std::size_t>();
        if (ja.contains("checkpoint"))
          a.checkpoint = ja["checkpoint"].get<std::size_t>();
        if (ja.contains("inner_len"))
          a.inner_len = ja["inner_len"].get<std::size_t>();
        cfg.algorithms.push_back(std::move(a));
      }
    }

    if (root.contains("runs")) cfg.runs = root["runs"].get<std::size_t>();
    if (root.contains("epochs")) cfg.epochs = root["epochs"].get<std::size_t>();
    if (root.contains("epoch_budget"))
      cfg.epoch_budget = root["epoch_budget"].get<double>();
    if (root.contains("eps")) cfg.eps = root["eps"].get<double>();
    if (root.contains("delta")) cfg.delta = root["delta"].get<double>();
    if (root.contains("delta_eval"))
      cfg.delta_eval = root["delta_eval"].get<double>();
    if (root.contains("quantile_levels"))
      cfg.quantile_levels =
          root["quantile_levels"].get<std::vector<double>>();
    if (root.contains("seed")) {
      cfg.seed = root["seed"].get<std::uint64_t>();
      cfg.seed_from_config = true;
    }
    if (root.contains("monitor_deviation"))
      cfg.monitor_deviation = root["monitor_deviation"].get<bool>();
    if (root.contains("out")) cfg.out_dir = root["out"].get<std::string>();

    validate_config(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path, "config file"));
}

std::size_t round_pow2(double b) {
  if (!(b > 1.0)) return 1;
  const long long e = std::llround(std::log2(b));
  if (e <= 0) return 1;
  return std::size_t{1} << std::min<long long>(e, 62);
}

std::size_t baseline_matching(std::size_t n, std::size_t epochs) {
  if (n < 1) throw ConfigError("baseline matching needs n >= 1");
  if (epochs < 1) throw ConfigError("baseline matching needs epochs >= 1");
  // Walk the empirical schedule to the midpoint epoch and read off the
  // inner batch in use there.
  const double half =
      0.5 * static_cast<double>(epochs) * static_cast<double>(n);
  double ifo = 0.0;
  std::size_t b = 1;
  for (long long j = 1;; ++j) {
    const ScheduleParams sp = schedule_experiment(j, n, 1.0);
    ifo += static_cast<double>(sp.B) +
           2.0 * static_cast<double>(sp.b) * static_cast<double>(sp.K);
    b = sp.b;
    if (ifo >= half) break;
  }
  return round_pow2(static_cast<double>(b));
}

DeltaFEstimate estimate_delta_f(const ObjectiveSpec& spec) {
  const Dataset& ds = *spec.data;
  const std::size_t d = ds.d;
  const double R = spec.radius;
  const double maxr = ds.max_row_norm();
  const double lambda = spec.lambda;

  // sup Phi over the ball: per-coordinate cap for RationalSquare, a
  // Cauchy-Schwarz bound d^(3/4) sqrt(R) for FourthRoot.
  const double phi_max =
      spec.reg == Regularizer::RationalSquare
          ? static_cast<double>(d) * R * R / (1.0 + R * R)
          : std::pow(static_cast<double>(d), 0.75) * std::sqrt(R);

  if (spec.family == Family::QuadraticAnchor) {
    // f(x) = 0.5||x||^2 - x.abar + c0 + rho(x): separable up to constants,
    // so the unconstrained minimizer solves a scalar equation per
    // coordinate.
    std::vector<double> abar(d, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i) {
      const auto row = ds.row(i);
      for (std::size_t t = 0; t < row.idx.size(); ++t)
        abar[row.idx[t] - 1] += row.val[t];
    }
    const auto& ops = kernels::active();
    ops.scal(1.0 / static_cast<double>(ds.n), abar.data(), d);

    bool exact = lambda < 4.0;  // scalar equations are monotone below 4
    std::vector<double> xstar(d, 0.0);
    if (exact) {
      for (std::size_t t = 0; t < d; ++t) {
        const double a = std::abs(abar[t]);
        if (a == 0.0) continue;
        double root = 0.0;
        if (spec.reg == Regularizer::RationalSquare || lambda == 0.0) {
          // g(t) = t + lambda t/(1+t^2)^2 increases from 0 through a.
          double lo = 0.0, hi = a;
          for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + hi); ++it) {
            const double m = 0.5 * (lo + hi);
            const double opm = 1.0 + m * m;
            const double g = m + lambda * m / (opm * opm);
            (g < a ? lo : hi) = m;
          }
          root = 0.5 * (lo + hi);
        } else {
          // FourthRoot: 0 is always a local minimum (the sqrt cusp);
          // the other candidate is the larger root of t + lambda/(4 sqrt t)
          // = a, which exists only past the convexity knee.
          const double knee = std::pow(lambda / 8.0, 2.0 / 3.0);
          auto g = [&](double t) { return t + lambda / (4.0 * std::sqrt(t)); };
          double cand = 0.0;
          if (knee < a && g(knee) < a) {
            double lo = knee, hi = a;
            for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + hi); ++it) {
              const double m = 0.5 * (lo + hi);
              (g(m) < a ? lo : hi) = m;
            }
            cand = 0.5 * (lo + hi);
          }
          if (cand > 0.0) {
            const double h_cand =
                0.5 * cand * cand - a * cand + 0.5 * lambda * std::sqrt(cand);
            if (h_cand < 0.0) root = cand;  // h(0) = 0
          }
        }
        xstar[t] = std::copysign(root, abar[t]);
      }
    }
    double fmin = 0.0;  // f >= 0 always; a valid fallback lower bound
    if (exact && std::sqrt(ops.nrm2sq(xstar.data(), d)) <= R)
      fmin = loss(spec, xstar);
    else
      exact = false;
    const double sup = 0.5 * (R + maxr) * (R + maxr) + 0.5 * lambda * phi_max;
    return {std::max(0.0, sup - fmin), exact};
  }

  // Logistic: probe descent from the origin; 2x safety factor on the
  // observed decrease.
  Objective oracle(spec);
  std::vector<double> x(d, 0.0), g(d, 0.0);
  const double f0 = oracle.loss(x);
  double fmin = f0;
  const double step = 1.0 / spec.L;
  for (int it = 0; it < 20; ++it) {
    oracle.full_gradient(x, g);
    kernels::active().axpy(-step, g.data(), x.data(), d);
    project(x, R);
    fmin = std::min(fmin, oracle.loss(x));
  }
  return {std::max(0.0, 2.0 * (f0 - fmin)), false};
}

std::string schedule_table_csv(Setting s, const ScheduleInputs& in,
                               long long jmax) {
  std::string out = "j,B,K,b,l,q,tau,delta_prime,eps_j\n";
  for (long long j = 1; j <= jmax; ++j) {
    const ScheduleParams p = schedule_params(s, j, in);
    out += std::to_string(p.j);
    out += ',';
    out += std::to_string(p.B);
    out += ',';
    out += std::to_string(p.K);
    out += ',';
    out += std::to_string(p.b);
    out += ',';
    out += format_double(p.l);
    out += ',';
    out += format_double(p.q);
    out += ',';
    out += format_double(p.tau);
    out += ',';
    out += format_double(p.delta_prime);
    out += ',';
    out += format_double(p.eps_j);
    out += '\n';
  }
  return out;
}

std::string experiment_schedule_csv(std::size_t n, double eta,
                                    long long jmax) {
  std::string out = "j,B,K,b,l,q,tau,delta_prime,eps_j\n";
  for (long long j = 1; j <= jmax; ++j) {
    const ScheduleParams p = schedule_experiment(j, n, eta);
    out += std::to_string(p.j);
    out += ',';
    out += std::to_string(p.B);
    out += ',';
    out += std::to_string(p.K);
    out += ',';
    out += std::to_string(p.b);
    out += ",0,0,0,0,0\n";
  }
  return out;
}

std::string stop_bounds_csv(double eps, double delta, std::size_t n, double L,
                            double delta_f, double alpha_m) {
  const StopBounds sb = stop_bounds_a(eps, delta, n, L, delta_f, alpha_m);
  const long long t5 = stop_bound_b(eps, n, L, delta_f);
  std::string out = "c1,c2,c3,c4,T1,T2,T3,T4,outer_cap,T5\n";
  out += format_double(sb.c1);
  out += ',';
  out += format_double(sb.c2);
  out += ',';
  out += format_double(sb.c3);
  out += ',';
  out += format_double(sb.c4);
  out += ',';
  out += std::to_string(sb.T1);
  out += ',';
  out += std::to_string(sb.T2);
  out += ',';
  out += std::to_string(sb.T3);
  out += ',';
  out += std::to_string(sb.T4);
  out += ',';
  out += std::to_string(sb.outer_cap);
  out += ',';
  out += std::to_string(t5);
  out += '\n';
  return out;
}

QuantileReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  QuantileReport rep;
  rep.config = cfg;

  std::shared_ptr<Dataset> ds;
  if (cfg.data.is_synthetic()) {
    ds = make_synthetic(cfg.data.synthetic);
    rep.dataset_source = "synthetic:" + cfg.data.synthetic.kind;
    rep.dataset_sha1 = git_blob_sha1(serialize_libsvm(*ds));
  } else {
    const std::string raw = read_file(cfg.data.path, "dataset file");
    try {
      ds = std::make_shared<Dataset>(parse_libsvm(raw));
    } catch (const ParseError& e) {
      throw ParseError(cfg.data.path + ": " + e.what());
    }
    rep.dataset_source = cfg.data.path;
    rep.dataset_sha1 = git_blob_sha1(raw);
  }
  if (cfg.normalize) normalize_rows(*ds);
  rep.n = ds->n;
  rep.d = ds->d;
  rep.max_row_norm = ds->max_row_norm();

  const ObjectiveSpec spec = make_objective(ds, cfg.family, cfg.reg,
                                            cfg.lambda, cfg.radius, cfg.mu);
  rep.L = spec.L;
  rep.alpha_m = spec.alpha_m;
  rep.d1 = spec.d1;
  const DeltaFEstimate dfe = estimate_delta_f(spec);
  rep.delta_f = dfe.value;
  rep.delta_f_exact = dfe.exact;

  const ScheduleInputs sch{ds->n, cfg.eps,      cfg.delta,
                           spec.L, spec.alpha_m, spec.d1};
  for (const auto& a : cfg.algorithms)
    if (a.name == "prob_sarah" && a.mode != Mode::Experiment)
      validate_admissible(sch);

  const double budget =
      cfg.epoch_budget > 0.0 ? cfg.epoch_budget
                             : static_cast<double>(cfg.epochs);
  const std::vector<double> levels =
      cfg.quantile_levels.empty()
          ? std::vector<double>{1.0 - cfg.delta_eval}
          : cfg.quantile_levels;
  const double eps_sq = cfg.eps * cfg.eps;

  long long max_outer_seen = 1;
  bool theory_schedule = false;
  double experiment_eta = 0.0;

  for (const auto& a : cfg.algorithms) {
    const std::string label = a.label.empty() ? a.name : a.label;
    std::vector<RunTrace> traces;
    traces.reserve(cfg.runs);

    BaselineParams bp;
    bp.eta = a.eta;
    bp.checkpoint = a.checkpoint;
    bp.inner_len = a.inner_len;
    if (a.name != "prob_sarah")
      bp.batch = a.batch > 0 ? a.batch : baseline_matching(ds->n, cfg.epochs);

    for (std::size_t r = 0; r < cfg.runs; ++r) {
      RunConfig rc;
      rc.objective = &spec;
      rc.mode = a.mode;
      rc.eps = cfg.eps;
      rc.delta = cfg.delta;
      rc.eta = a.mode == Mode::Experiment ? a.eta : 0.0;
      rc.epoch_budget = budget;
      rc.delta_f = rep.delta_f;
      rc.monitor_gradient = true;
      rc.monitor_deviation = cfg.monitor_deviation &&
                             a.name == "prob_sarah" &&
                             a.mode != Mode::Experiment;
      rc.record_steps = false;
      rc.seed = derive_seed(cfg.seed, label, r);

      RunTrace tr;
      if (a.name == "prob_sarah")
        tr = prob_sarah(rc);
      else if (a.name == "sgd")
        tr = sgd(rc, bp);
      else if (a.name == "svrg")
        tr = svrg(rc, bp);
      else
        tr = scsg(rc, bp);
      traces.push_back(std::move(tr));
    }

    AlgoReport ar;
    ar.label = label;
    ar.runs = cfg.runs;
    for (const auto& tr : traces) {
      if (tr.stopped) {
        ++ar.stopped;
        if (tr.grad_norm_sq_final <= eps_sq) ++ar.successes;
      } else if (a.name == "prob_sarah" && a.mode != Mode::Experiment) {
        ++ar.censored;
      }
      ar.total_ifo += tr.ifo;
      ar.monitor_evals += tr.monitor_evals;
      ar.deviation_checks += tr.deviation.checks;
      ar.deviation_violations += tr.deviation.violations;
      if (a.name == "prob_sarah" && !tr.outers.empty())
        max_outer_seen = std::max(max_outer_seen, tr.outers.back().j);
    }
    ar.success_rate = static_cast<double>(ar.successes) /
                      static_cast<double>(cfg.runs);
    ar.mean_ifo = static_cast<double>(ar.total_ifo) /
                  static_cast<double>(cfg.runs);
    rep.algo_reports.push_back(ar);

    if (a.name == "prob_sarah") {
      if (a.mode != Mode::Experiment)
        theory_schedule = true;
      else if (experiment_eta == 0.0)
        experiment_eta = a.eta;
    }

    // Quantile trajectories over the epoch grid; runs that ended early keep
    // their final monitored value (conservative carry-forward).
    std::vector<double> values(cfg.runs);
    for (std::size_t e = 1; e <= cfg.epochs; ++e) {
      for (std::size_t r = 0; r < cfg.runs; ++r) {
        const RunTrace& tr = traces[r];
        values[r] = e <= tr.epochs.size()
                        ? tr.epochs[e - 1].grad_norm_sq
                        : tr.grad_norm_sq_final;
      }
      std::sort(values.begin(), values.end());
      for (double q : levels) {
        // rank ceil(q * R); the tiny nudge keeps exact integer products from
        // rounding up a rank.
        auto rank = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(cfg.runs) - 1e-9));
        rank = std::clamp<std::size_t>(rank, 1, cfg.runs);
        rep.rows.push_back({label, static_cast<long long>(e), q,
                            values[rank - 1]});
      }
    }
    rep.traces.push_back(std::move(traces));
  }

  const long long jmax = std::min<long long>(std::max(max_outer_seen, 1ll), 500);
  if (theory_schedule)
    rep.schedule_csv = schedule_table_csv(cfg.setting, sch, jmax);
  else if (experiment_eta > 0.0)
    rep.schedule_csv = experiment_schedule_csv(ds->n, experiment_eta, jmax);
  else
    rep.schedule_csv = "j,B,K,b,l,q,tau,delta_prime,eps_j\n";
  rep.schedule_sha1 = sha1_hex(rep.schedule_csv);
  return rep;
}

void emit_files(const QuantileReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + out_dir +
                             ": " + ec.message());

  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out)
      throw std::runtime_error("cannot write " + path);
  };

  std::string csv = "algorithm,epoch,quantile_level,grad_norm_sq\n";
  for (const auto& row : rep.rows) {
    csv += row.algorithm;
    csv += ',';
    csv += std::to_string(row.epoch);
    csv += ',';
    csv += format_double(row.level);
    csv += ',';
    csv += format_double(row.grad_norm_sq);
    csv += '\n';
  }
  write_file("quantiles.csv", csv);

  json algos = json::array();
  for (const auto& ar : rep.algo_reports)
    algos.push_back({{"label", ar.label},
                     {"runs", ar.runs},
                     {"stopped", ar.stopped},
                     {"successes", ar.successes},
                     {"success_rate", ar.success_rate},
                     {"censored", ar.censored},
                     {"total_ifo", ar.total_ifo},
                     {"mean_ifo", ar.mean_ifo},
                     {"monitor_evals", ar.monitor_evals},
                     {"deviation_checks", ar.deviation_checks},
                     {"deviation_violations", ar.deviation_violations}});
  json summary = {
      {"artifact_version", "1"},
      {"config", config_to_json(rep.config)},
      {"dataset",
       {{"source", rep.dataset_source},
        {"sha1", rep.dataset_sha1},
        {"n", rep.n},
        {"d", rep.d},
        {"max_row_norm", rep.max_row_norm},
        {"normalized", rep.config.normalize}}},
      {"constants",
       {{"L", rep.L},
        {"alpha_m", rep.alpha_m},
        {"d1", rep.d1},
        {"delta_f", rep.delta_f},
        {"delta_f_exact", rep.delta_f_exact},
        {"eta_theory", 1.0 / (4.0 * rep.L)}}},
      {"success_threshold_sq", rep.config.eps * rep.config.eps},
      {"quantile_convention",
       "ascending order statistic of rank ceil(level * runs)"},
      {"seed_derivation",
       "splitmix64(splitmix64(splitmix64(master) ^ fnv1a64(label)) ^ run)"},
      {"schedule_sha1", rep.schedule_sha1},
      {"algorithms", std::move(algos)}};
  write_file("summary.json", summary.dump(2) + "\n");
  write_file("schedule.csv", rep.schedule_csv);
}

}  // namespace probsarah
