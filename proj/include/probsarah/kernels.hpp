#pragma once

#include <cstddef>
#include <cstdint>

namespace probsarah::kernels {

// Vector primitives behind the objective and the optimizers.  Two
// implementations exist: a scalar reference and an AVX2 variant, selected
// once at startup.  Elementwise ops (axpy, scal, sparse_axpy) are bitwise
// identical across backends; reductions (dot, nrm2sq, sparse_dot) may differ
// only by summation order.
//
// Sparse arguments carry 1-based feature ids, matching the dataset layout.
struct Ops {
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*nrm2sq)(const double* x, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x *= a
  void (*scal)(double a, double* x, std::size_t n);
  // sum_t val[t] * dense[idx[t] - 1]
  double (*sparse_dot)(const std::uint32_t* idx, const double* val,
                       std::size_t nnz, const double* dense);
  // dense[idx[t] - 1] += a * val[t]
  void (*sparse_axpy)(double a, const std::uint32_t* idx, const double* val,
                      std::size_t nnz, double* dense);
  const char* name;
};

// Scalar reference implementations.
const Ops& scalar();

// AVX2 implementations, or nullptr when the build target or the CPU lacks
// AVX2 support.
const Ops* avx2();

// Backend used by the rest of the library.  Chosen on first use: the
// PROBSARAH_KERNELS environment variable ("scalar" or "avx2") wins when set
// and satisfiable, otherwise the best available backend is used.  The choice
// is fixed for the lifetime of the process so results are reproducible.
const Ops& active();

}  // namespace probsarah::kernels
