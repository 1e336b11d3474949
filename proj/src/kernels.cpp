#include "probsarah/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace probsarah::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double nrm2sq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sparse_dot_scalar(const std::uint32_t* idx, const double* val,
                         std::size_t nnz, const double* dense) {
  double acc = 0.0;
  for (std::size_t t = 0; t < nnz; ++t) acc += val[t] * dense[idx[t] - 1];
  return acc;
}

void sparse_axpy_scalar(double a, const std::uint32_t* idx, const double* val,
                        std::size_t nnz, double* dense) {
  for (std::size_t t = 0; t < nnz; ++t) dense[idx[t] - 1] += a * val[t];
}

constexpr Ops kScalar{dot_scalar,    nrm2sq_scalar,     axpy_scalar,
                      scal_scalar,   sparse_dot_scalar, sparse_axpy_scalar,
                      "scalar"};

const Ops& select() {
  const char* env = std::getenv("PROBSARAH_KERNELS");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return kScalar;
  const Ops* vec = avx2();
  if (want == "avx2") return vec ? *vec : kScalar;
  return vec ? *vec : kScalar;
}

}  // namespace

const Ops& scalar() { return kScalar; }

const Ops& active() {
  static const Ops& chosen = select();
  return chosen;
}

}  // namespace probsarah::kernels
