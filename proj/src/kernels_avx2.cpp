// AVX2 variants.  This translation unit is the only one compiled with
// -mavx2; nothing here executes vector instructions unless the runtime CPU
// check in avx2() passed.  FMA is deliberately not used so that elementwise
// ops round exactly like the scalar reference.

#include "probsarah/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define PROBSARAH_KERNELS_X86 1
#include <immintrin.h>
#endif

namespace probsarah::kernels {

#ifdef PROBSARAH_KERNELS_X86
namespace {

double hsum(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                         _mm256_loadu_pd(y + i)));
    a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4),
                                         _mm256_loadu_pd(y + i + 4)));
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double nrm2sq_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = _mm256_loadu_pd(x + i);
    const __m256d v1 = _mm256_loadu_pd(x + i + 4);
    a0 = _mm256_add_pd(a0, _mm256_mul_pd(v0, v0));
    a1 = _mm256_add_pd(a1, _mm256_mul_pd(v1, v1));
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yi = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(
        y + i, _mm256_add_pd(yi, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

double sparse_dot_avx2(const std::uint32_t* idx, const double* val,
                       std::size_t nnz, const double* dense) {
  __m256d acc = _mm256_setzero_pd();
  const __m128i one = _mm_set1_epi32(1);
  std::size_t t = 0;
  for (; t + 4 <= nnz; t += 4) {
    __m128i id =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + t));
    id = _mm_sub_epi32(id, one);  // ids are 1-based
    const __m256d g = _mm256_i32gather_pd(dense, id, 8);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(val + t), g));
  }
  double out = hsum(acc);
  for (; t < nnz; ++t) out += val[t] * dense[idx[t] - 1];
  return out;
}

// No scatter before AVX-512; the elementwise accumulate stays scalar.
void sparse_axpy_ref(double a, const std::uint32_t* idx, const double* val,
                     std::size_t nnz, double* dense) {
  for (std::size_t t = 0; t < nnz; ++t) dense[idx[t] - 1] += a * val[t];
}

constexpr Ops kAvx2{dot_avx2,  nrm2sq_avx2,     axpy_avx2,      scal_avx2,
                    sparse_dot_avx2, sparse_axpy_ref, "avx2"};

}  // namespace

const Ops* avx2() {
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &kAvx2 : nullptr;
}
#else
const Ops* avx2() { return nullptr; }
#endif

}  // namespace probsarah::kernels
