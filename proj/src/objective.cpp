#include "probsarah/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "probsarah/error.hpp"
#include "probsarah/kernels.hpp"

namespace probsarah {
namespace {

// -y / (1 + exp(y * w.x)), evaluated without overflow for any margin.
double logistic_coef(double y, double margin) {
  const double z = y * margin;
  if (z > 0) {
    const double t = std::exp(-z);
    return -y * t / (1.0 + t);
  }
  return -y / (1.0 + std::exp(z));
}

double logistic_term(double y, double margin) {
  const double z = y * margin;
  if (z > 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

double reg_grad_coord(Regularizer reg, double lambda, double mu, double x) {
  if (reg == Regularizer::RationalSquare) {
    const double t = 1.0 + x * x;
    return lambda * x / (t * t);
  }
  (void)mu;
  if (x == 0.0) return 0.0;  // subgradient choice at the singular point
  return std::copysign(lambda / (4.0 * std::sqrt(std::fabs(x))), x);
}

void reg_accum(const ObjectiveSpec& spec, std::span<const double> x,
               std::span<double> out) {
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] += reg_grad_coord(spec.reg, spec.lambda, spec.mu, x[j]);
}

void reg_diff_accum(const ObjectiveSpec& spec, std::span<const double> x_new,
                    std::span<const double> x_old, std::span<double> out) {
  for (std::size_t j = 0; j < x_new.size(); ++j) {
    out[j] += reg_grad_coord(spec.reg, spec.lambda, spec.mu, x_new[j]) -
              reg_grad_coord(spec.reg, spec.lambda, spec.mu, x_old[j]);
  }
}

std::vector<double>& scratch_buffer(std::size_t d) {
  thread_local std::vector<double> buf;
  buf.assign(d, 0.0);
  return buf;
}

}  // namespace

DerivedConstants derive_constants(const Dataset& ds, Family family,
                                  Regularizer reg, double lambda,
                                  double radius, double mu) {
  const double maxnorm = ds.max_row_norm();
  const double sqd = std::sqrt(static_cast<double>(ds.d));
  double c_phi, g_phi;
  if (reg == Regularizer::RationalSquare) {
    c_phi = 1.0;  // sup |phi''| / 2 with phi(t) = t^2/(1+t^2)
    g_phi = (3.0 * std::sqrt(3.0) / 16.0) * sqd;  // sup |t|/(1+t^2)^2 * sqrt d
  } else {
    // Valid on {x : min_j |x_j| >= mu} only; the map is singular at 0.
    c_phi = 1.0 / (8.0 * std::pow(mu, 1.5));
    g_phi = sqd / (4.0 * std::sqrt(mu));
  }
  if (family == Family::Logistic) {
    return {0.25 * maxnorm * maxnorm + lambda * c_phi,
            maxnorm + lambda * g_phi};
  }
  return {1.0 + lambda * c_phi, radius + maxnorm + lambda * g_phi};
}

ObjectiveSpec make_objective(std::shared_ptr<const Dataset> data, Family family,
                             Regularizer reg, double lambda, double radius,
                             double mu) {
  if (!data || data->n == 0) throw ConfigError("objective needs a dataset");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ConfigError("lambda must be finite and >= 0");
  if (!(radius >= 0.5) || !std::isfinite(radius))
    throw ConfigError("radius must be >= 0.5 (feasible diameter >= 1)");
  if (reg == Regularizer::FourthRoot && !(mu > 0.0))
    throw ConfigError("FourthRoot regularizer needs mu > 0");
  ObjectiveSpec spec;
  spec.data = std::move(data);
  spec.family = family;
  spec.reg = reg;
  spec.lambda = lambda;
  spec.radius = radius;
  spec.mu = mu;
  const auto dc =
      derive_constants(*spec.data, family, reg, lambda, radius, mu);
  spec.L = dc.L;
  spec.alpha_m = dc.alpha_m;
  spec.d1 = 2.0 * radius;
  return spec;
}

void project(std::span<double> x, double radius) {
  const auto& k = kernels::active();
  const double nsq = k.nrm2sq(x.data(), x.size());
  if (nsq > radius * radius)
    k.scal(radius / std::sqrt(nsq), x.data(), x.size());
}

double reg_value(const ObjectiveSpec& spec, std::span<const double> x) {
  double acc = 0.0;
  if (spec.reg == Regularizer::RationalSquare) {
    for (double c : x) acc += c * c / (1.0 + c * c);
  } else {
    for (double c : x) acc += std::sqrt(std::fabs(c));
  }
  return 0.5 * spec.lambda * acc;
}

void reg_gradient(const ObjectiveSpec& spec, std::span<const double> x,
                  std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  reg_accum(spec, x, out);
}

double sample_loss(const ObjectiveSpec& spec, std::size_t i,
                   std::span<const double> x) {
  const auto& k = kernels::active();
  const auto r = spec.data->row(i);
  if (spec.family == Family::Logistic) {
    const double margin = k.sparse_dot(r.idx.data(), r.val.data(),
                                       r.idx.size(), x.data());
    return logistic_term(spec.data->labels[i], margin) + reg_value(spec, x);
  }
  const double cross =
      k.sparse_dot(r.idx.data(), r.val.data(), r.idx.size(), x.data());
  const double rn = spec.data->row_norms[i];
  return 0.5 * (k.nrm2sq(x.data(), x.size()) - 2.0 * cross + rn * rn) +
         reg_value(spec, x);
}

double loss(const ObjectiveSpec& spec, std::span<const double> x) {
  const auto& k = kernels::active();
  const std::size_t n = spec.data->n;
  double acc = 0.0;
  if (spec.family == Family::Logistic) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = spec.data->row(i);
      const double margin = k.sparse_dot(r.idx.data(), r.val.data(),
                                         r.idx.size(), x.data());
      acc += logistic_term(spec.data->labels[i], margin);
    }
  } else {
    const double xsq = k.nrm2sq(x.data(), x.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = spec.data->row(i);
      const double cross = k.sparse_dot(r.idx.data(), r.val.data(),
                                        r.idx.size(), x.data());
      const double rn = spec.data->row_norms[i];
      acc += 0.5 * (xsq - 2.0 * cross + rn * rn);
    }
  }
  return acc / static_cast<double>(n) + reg_value(spec, x);
}

void sample_gradient(const ObjectiveSpec& spec, std::size_t i,
                     std::span<const double> x, std::span<double> out) {
  const auto& k = kernels::active();
  const auto r = spec.data->row(i);
  if (spec.family == Family::Logistic) {
    std::fill(out.begin(), out.end(), 0.0);
    const double margin = k.sparse_dot(r.idx.data(), r.val.data(),
                                       r.idx.size(), x.data());
    const double coef = logistic_coef(spec.data->labels[i], margin);
    k.sparse_axpy(coef, r.idx.data(), r.val.data(), r.idx.size(), out.data());
  } else {
    std::copy(x.begin(), x.end(), out.begin());
    k.sparse_axpy(-1.0, r.idx.data(), r.val.data(), r.idx.size(), out.data());
  }
  reg_accum(spec, x, out);
}

void GradientOracle::mean_gradient(std::span<const std::uint32_t> idx,
                                   std::span<const double> x,
                                   std::span<double> out) const {
  std::vector<double> tmp(dim(), 0.0);
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto i : idx) {
    sample_gradient(i, x, tmp);
    kernels::active().axpy(1.0, tmp.data(), out.data(), out.size());
  }
  kernels::active().scal(1.0 / static_cast<double>(idx.size()), out.data(),
                         out.size());
}

void GradientOracle::accumulate_mean_diff(std::span<const std::uint32_t> idx,
                                          std::span<const double> x_new,
                                          std::span<const double> x_old,
                                          std::span<double> nu) const {
  std::vector<double> acc(dim(), 0.0), tmp(dim(), 0.0);
  for (const auto i : idx) {
    sample_gradient(i, x_new, tmp);
    kernels::active().axpy(1.0, tmp.data(), acc.data(), acc.size());
    sample_gradient(i, x_old, tmp);
    kernels::active().axpy(-1.0, tmp.data(), acc.data(), acc.size());
  }
  kernels::active().axpy(1.0 / static_cast<double>(idx.size()), acc.data(),
                         nu.data(), nu.size());
}

void GradientOracle::full_gradient(std::span<const double> x,
                                   std::span<double> out) const {
  std::vector<std::uint32_t> idx(sample_count());
  std::iota(idx.begin(), idx.end(), 0u);
  mean_gradient(idx, x, out);
}

Objective::Objective(const ObjectiveSpec& spec)
    : spec_(spec), identity_(spec.data->n) {
  std::iota(identity_.begin(), identity_.end(), 0u);
}

double Objective::loss(std::span<const double> x) const {
  return probsarah::loss(spec_, x);
}

void Objective::sample_gradient(std::size_t i, std::span<const double> x,
                                std::span<double> out) const {
  probsarah::sample_gradient(spec_, i, x, out);
}

void Objective::mean_gradient(std::span<const std::uint32_t> idx,
                              std::span<const double> x,
                              std::span<double> out) const {
  const auto& k = kernels::active();
  const auto& ds = *spec_.data;
  const double inv = 1.0 / static_cast<double>(idx.size());
  if (spec_.family == Family::Logistic) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto i : idx) {
      const auto r = ds.row(i);
      const double margin =
          k.sparse_dot(r.idx.data(), r.val.data(), r.idx.size(), x.data());
      const double coef = logistic_coef(ds.labels[i], margin);
      k.sparse_axpy(coef, r.idx.data(), r.val.data(), r.idx.size(),
                    out.data());
    }
    k.scal(inv, out.data(), out.size());
  } else {
    auto& acc = scratch_buffer(ds.d);
    for (const auto i : idx) {
      const auto r = ds.row(i);
      k.sparse_axpy(1.0, r.idx.data(), r.val.data(), r.idx.size(), acc.data());
    }
    std::copy(x.begin(), x.end(), out.begin());
    k.axpy(-inv, acc.data(), out.data(), out.size());
  }
  reg_accum(spec_, x, out);
}

void Objective::accumulate_mean_diff(std::span<const std::uint32_t> idx,
                                     std::span<const double> x_new,
                                     std::span<const double> x_old,
                                     std::span<double> nu) const {
  const auto& k = kernels::active();
  const auto& ds = *spec_.data;
  if (spec_.family == Family::Logistic) {
    auto& acc = scratch_buffer(ds.d);
    for (const auto i : idx) {
      const auto r = ds.row(i);
      const double m_new =
          k.sparse_dot(r.idx.data(), r.val.data(), r.idx.size(), x_new.data());
      const double m_old =
          k.sparse_dot(r.idx.data(), r.val.data(), r.idx.size(), x_old.data());
      const double dcoef = logistic_coef(ds.labels[i], m_new) -
                           logistic_coef(ds.labels[i], m_old);
      k.sparse_axpy(dcoef, r.idx.data(), r.val.data(), r.idx.size(),
                    acc.data());
    }
    k.axpy(1.0 / static_cast<double>(idx.size()), acc.data(), nu.data(),
           nu.size());
  } else {
    // Anchor terms cancel sample-wise: each difference is x_new - x_old.
    for (std::size_t j = 0; j < nu.size(); ++j)
      nu[j] += x_new[j] - x_old[j];
  }
  reg_diff_accum(spec_, x_new, x_old, nu);
}

void Objective::full_gradient(std::span<const double> x,
                              std::span<double> out) const {
  mean_gradient(identity_, x, out);
}

}  // namespace probsarah
