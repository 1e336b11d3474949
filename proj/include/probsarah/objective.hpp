#pragma once

#include <memory>
#include <span>
#include <vector>

#include "probsarah/dataset.hpp"

namespace probsarah {

// Finite-sum objective f(x) = (1/n) sum_i f_i(x) over the ball ||x|| <= radius.
//
// Families:
//   Logistic:        f_i(x) = log(1 + exp(-y_i w_i.x)) + rho(x)
//   QuadraticAnchor: f_i(x) = 0.5 ||x - a_i||^2 + rho(x)   (a_i = row i)
//
// Regularizer rho(x) = (lambda/2) * Phi(x):
//   RationalSquare: Phi(x) = sum_j x_j^2 / (1 + x_j^2)       (smooth)
//   FourthRoot:     Phi(x) = sum_j sqrt(|x_j|)               (singular at 0)
enum class Family { Logistic, QuadraticAnchor };
enum class Regularizer { RationalSquare, FourthRoot };

struct ObjectiveSpec {
  std::shared_ptr<const Dataset> data;
  Family family = Family::Logistic;
  Regularizer reg = Regularizer::RationalSquare;
  double lambda = 0.1;
  double radius = 50.0;  // feasible ball radius
  double mu = 1e-3;      // FourthRoot: constants hold on {x : min_j |x_j| >= mu}
  // Derived smoothness / gradient-norm constants; see derive_constants.
  double L = 0.0;
  double alpha_m = 0.0;
  double d1 = 0.0;  // feasible-set diameter, 2 * radius
};

// Smoothness constant L and gradient-norm bound alpha_m over the feasible
// ball.  Closed forms (row norms r_i, dimension d):
//   Logistic:        L = max_i r_i^2 / 4 + lambda * c_phi
//                    alpha_m = max_i r_i + lambda * g_phi
//   QuadraticAnchor: L = 1 + lambda * c_phi
//                    alpha_m = radius + max_i r_i + lambda * g_phi
// with curvature/gradient factors of rho/lambda:
//   RationalSquare: c_phi = 1,                  g_phi = (3 sqrt 3 / 16) sqrt d
//   FourthRoot:     c_phi = mu^(-3/2) / 8,      g_phi = mu^(-1/2) sqrt d / 4
// For FourthRoot both hold only outside the singular set (|x_j| >= mu).
struct DerivedConstants {
  double L;
  double alpha_m;
};
DerivedConstants derive_constants(const Dataset& ds, Family family,
                                  Regularizer reg, double lambda,
                                  double radius, double mu);

// Builds a validated spec; throws ConfigError on inadmissible parameters
// (lambda < 0, radius < 0.5, non-finite inputs).
ObjectiveSpec make_objective(std::shared_ptr<const Dataset> data, Family family,
                             Regularizer reg, double lambda, double radius,
                             double mu = 1e-3);

// Euclidean projection onto the radius ball (in place).
void project(std::span<double> x, double radius);

double loss(const ObjectiveSpec& spec, std::span<const double> x);
double sample_loss(const ObjectiveSpec& spec, std::size_t i,
                   std::span<const double> x);
void sample_gradient(const ObjectiveSpec& spec, std::size_t i,
                     std::span<const double> x, std::span<double> out);

// Value and gradient of the regularizer rho alone (used by tests).
double reg_value(const ObjectiveSpec& spec, std::span<const double> x);
void reg_gradient(const ObjectiveSpec& spec, std::span<const double> x,
                  std::span<double> out);

// Abstract per-sample gradient oracle.  The optimizers consume this
// interface; tests wrap it to count evaluations independently.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;
  virtual std::size_t sample_count() const = 0;
  virtual std::size_t dim() const = 0;

  virtual void sample_gradient(std::size_t i, std::span<const double> x,
                               std::span<double> out) const = 0;
  virtual double loss(std::span<const double> x) const = 0;

  // mean over idx of grad f_i(x); one evaluation per index.
  virtual void mean_gradient(std::span<const std::uint32_t> idx,
                             std::span<const double> x,
                             std::span<double> out) const;
  // nu += mean over idx of [grad f_i(x_new) - grad f_i(x_old)]; two
  // evaluations per index.
  virtual void accumulate_mean_diff(std::span<const std::uint32_t> idx,
                                    std::span<const double> x_new,
                                    std::span<const double> x_old,
                                    std::span<double> nu) const;
  // mean over all samples in natural order; n evaluations.
  virtual void full_gradient(std::span<const double> x,
                             std::span<double> out) const;
};

// Oracle backed by an ObjectiveSpec.  The batched entry points share one
// regularizer evaluation across the batch, so mean_gradient over the full
// index range is bitwise identical to full_gradient.
class Objective final : public GradientOracle {
 public:
  explicit Objective(const ObjectiveSpec& spec);

  std::size_t sample_count() const override { return spec_.data->n; }
  std::size_t dim() const override { return spec_.data->d; }
  void sample_gradient(std::size_t i, std::span<const double> x,
                       std::span<double> out) const override;
  double loss(std::span<const double> x) const override;
  void mean_gradient(std::span<const std::uint32_t> idx,
                     std::span<const double> x,
                     std::span<double> out) const override;
  void accumulate_mean_diff(std::span<const std::uint32_t> idx,
                            std::span<const double> x_new,
                            std::span<const double> x_old,
                            std::span<double> nu) const override;
  void full_gradient(std::span<const double> x,
                     std::span<double> out) const override;

  const ObjectiveSpec& spec() const { return spec_; }

 private:
  const ObjectiveSpec& spec_;
  std::vector<std::uint32_t> identity_;  // 0..n-1, for full_gradient
};

}  // namespace probsarah
