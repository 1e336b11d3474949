#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "probsarah/kernels.hpp"
#include "probsarah/rng.hpp"

using namespace probsarah;

namespace {

// Independent reference reductions, accumulated in long double so they are
// strictly more accurate than either backend.
long double ref_dot(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) s += (long double)x[i] * y[i];
  return s;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& e : v) e = scale * (rng.uniform01() - 0.5);
  return v;
}

}  // namespace

TEST_CASE("scalar reductions match a long double reference") {
  const auto& ops = kernels::scalar();
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 17u, 256u, 1000u}) {
    auto x = random_vec(rng, n, 2.0);
    auto y = random_vec(rng, n, 3.0);
    const long double d = ref_dot(x, y);
    CHECK(ops.dot(x.data(), y.data(), n) ==
          doctest::Approx((double)d).epsilon(1e-13));
    CHECK(ops.nrm2sq(x.data(), n) ==
          doctest::Approx((double)ref_dot(x, x)).epsilon(1e-13));
  }
}

TEST_CASE("scalar elementwise ops match direct loops bitwise") {
  const auto& ops = kernels::scalar();
  Rng rng(12);
  for (std::size_t n : {1u, 5u, 8u, 33u}) {
    auto x = random_vec(rng, n, 1.0);
    auto y = random_vec(rng, n, 1.0);
    auto y2 = y;
    ops.axpy(0.37, x.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) y2[i] += 0.37 * x[i];
    CHECK(std::memcmp(y.data(), y2.data(), n * sizeof(double)) == 0);

    auto z = x;
    ops.scal(-1.75, z.data(), n);
    for (std::size_t i = 0; i < n; ++i) x[i] *= -1.75;
    CHECK(std::memcmp(z.data(), x.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("sparse kernels agree with dense equivalents") {
  const auto& ops = kernels::scalar();
  Rng rng(13);
  const std::size_t d = 40;
  auto dense = random_vec(rng, d, 1.0);
  // 1-based ids, strictly increasing.
  std::vector<std::uint32_t> idx = {1, 2, 7, 8, 9, 23, 40};
  auto val = random_vec(rng, idx.size(), 2.0);

  long double want = 0.0L;
  for (std::size_t t = 0; t < idx.size(); ++t)
    want += (long double)val[t] * dense[idx[t] - 1];
  CHECK(ops.sparse_dot(idx.data(), val.data(), idx.size(), dense.data()) ==
        doctest::Approx((double)want).epsilon(1e-14));

  auto got = dense;
  ops.sparse_axpy(0.5, idx.data(), val.data(), idx.size(), got.data());
  auto want_vec = dense;
  for (std::size_t t = 0; t < idx.size(); ++t)
    want_vec[idx[t] - 1] += 0.5 * val[t];
  CHECK(std::memcmp(got.data(), want_vec.data(), d * sizeof(double)) == 0);
}

TEST_CASE("avx2 backend matches scalar: bitwise elementwise, tolerance reductions") {
  const kernels::Ops* v = kernels::avx2();
  if (v == nullptr) {
    MESSAGE("avx2 backend unavailable on this build/CPU; skipping");
    return;
  }
  const auto& s = kernels::scalar();
  Rng rng(14);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u,
                        64u, 100u, 257u, 1024u}) {
    auto x = random_vec(rng, n, 4.0);
    auto y = random_vec(rng, n, 4.0);

    // Reductions: summation order may differ, so compare against the long
    // double reference with a tight relative tolerance.
    const double ref = (double)ref_dot(x, y);
    CHECK(v->dot(x.data(), y.data(), n) == doctest::Approx(ref).epsilon(1e-13));
    CHECK(v->nrm2sq(x.data(), n) ==
          doctest::Approx((double)ref_dot(x, x)).epsilon(1e-13));

    // Elementwise: must be bitwise identical to scalar.
    auto ys = y, yv = y;
    s.axpy(1.0 / 3.0, x.data(), ys.data(), n);
    v->axpy(1.0 / 3.0, x.data(), yv.data(), n);
    CHECK(std::memcmp(ys.data(), yv.data(), n * sizeof(double)) == 0);

    auto xs = x, xv = x;
    s.scal(0.123456789, xs.data(), n);
    v->scal(0.123456789, xv.data(), n);
    CHECK(std::memcmp(xs.data(), xv.data(), n * sizeof(double)) == 0);
  }

  // Sparse paths.
  const std::size_t d = 64;
  auto dense = random_vec(rng, d, 1.0);
  std::vector<std::uint32_t> idx;
  for (std::uint32_t i = 1; i <= d; i += 3) idx.push_back(i);
  auto val = random_vec(rng, idx.size(), 1.0);
  CHECK(v->sparse_dot(idx.data(), val.data(), idx.size(), dense.data()) ==
        doctest::Approx(s.sparse_dot(idx.data(), val.data(), idx.size(),
                                     dense.data()))
            .epsilon(1e-13));
  auto ds = dense, dv = dense;
  s.sparse_axpy(-0.25, idx.data(), val.data(), idx.size(), ds.data());
  v->sparse_axpy(-0.25, idx.data(), val.data(), idx.size(), dv.data());
  CHECK(std::memcmp(ds.data(), dv.data(), d * sizeof(double)) == 0);
}

TEST_CASE("active backend is one of the known implementations") {
  const auto& a = kernels::active();
  const std::string name = a.name;
  CHECK((name == "scalar" || name == "avx2"));
  // Repeated calls return the same backend.
  CHECK(&kernels::active() == &a);
}
