#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "probsarah/rng.hpp"

using namespace probsarah;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
  Rng c(43);
  bool differs = false;
  Rng d(42);
  for (int i = 0; i < 10; ++i) differs |= (c.next() != d.next());
  CHECK(differs);
}

TEST_CASE("derive_seed is stable and sensitive to tag and index") {
  // Frozen: any change here silently reshuffles every experiment.
  const std::uint64_t s = derive_seed(1, "algo", 0);
  CHECK(s == derive_seed(1, "algo", 0));
  CHECK(s != derive_seed(1, "algo", 1));
  CHECK(s != derive_seed(1, "other", 0));
  CHECK(s != derive_seed(2, "algo", 0));
  // Spelled-out composition, as documented in the run manifest.
  CHECK(derive_seed(7, "x", 3) ==
        splitmix64(splitmix64(splitmix64(7) ^ fnv1a64("x")) ^ 3));
}

TEST_CASE("uniform01 stays in [0,1) and has the right mean") {
  Rng rng(7);
  double sum = 0.0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / trials == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below(n) is in range and covers small supports") {
  Rng rng(8);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto v = rng.below(5);
    REQUIRE(v < 5);
    ++counts[v];
  }
  for (int c : counts) CHECK(c > 9000);  // ~10000 each, loose band
  CHECK(rng.below(1) == 0);
}

TEST_CASE("normal has mean 0 and variance 1") {
  Rng rng(9);
  long double sum = 0.0L, sumsq = 0.0L;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += (long double)z * z;
  }
  // mean of 2e5 standard normals has sd ~ 0.0022; 0.01 is a 4.5-sigma band
  CHECK((double)(sum / trials) == doctest::Approx(0.0).epsilon(0.01).scale(1.0));
  CHECK((double)(sumsq / trials) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("fill_sphere gives unit vectors, fill_ball stays inside") {
  Rng rng(10);
  std::vector<double> v(17);
  for (int rep = 0; rep < 50; ++rep) {
    rng.fill_sphere(v);
    double nsq = 0.0;
    for (double c : v) nsq += c * c;
    CHECK(std::sqrt(nsq) == doctest::Approx(1.0).epsilon(1e-12));

    rng.fill_ball(v, 2.5);
    nsq = 0.0;
    for (double c : v) nsq += c * c;
    CHECK(std::sqrt(nsq) <= 2.5 + 1e-12);
  }
}

TEST_CASE("sample_without_replacement is sorted, distinct, in range") {
  Rng rng(11);
  std::vector<std::uint32_t> scratch, out;
  for (int rep = 0; rep < 200; ++rep) {
    const std::uint32_t n = 1 + (std::uint32_t)rng.below(60);
    const std::uint32_t k = (std::uint32_t)rng.below(n + 1);
    sample_without_replacement(rng, n, k, scratch, out);
    REQUIRE(out.size() == k);
    std::set<std::uint32_t> seen(out.begin(), out.end());
    CHECK(seen.size() == k);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] < n);
      if (i) CHECK(out[i - 1] < out[i]);
    }
  }
  // k == n must be the identity set.
  sample_without_replacement(rng, 12, 12, scratch, out);
  for (std::uint32_t i = 0; i < 12; ++i) CHECK(out[i] == i);
}

TEST_CASE("sample_without_replacement is uniform over pairs") {
  // n=4 choose 2: each unordered pair should appear ~1/6 of the time.
  Rng rng(12);
  std::vector<std::uint32_t> scratch, out;
  std::vector<int> counts(16, 0);
  const int trials = 60000;
  for (int i = 0; i < trials; ++i) {
    sample_without_replacement(rng, 4, 2, scratch, out);
    ++counts[out[0] * 4 + out[1]];
  }
  int nonzero = 0;
  for (int c : counts)
    if (c) {
      ++nonzero;
      CHECK(c == doctest::Approx(trials / 6.0).epsilon(0.08));
    }
  CHECK(nonzero == 6);
}

TEST_CASE("sample_with_replacement is sorted and in range") {
  Rng rng(13);
  std::vector<std::uint32_t> out;
  sample_with_replacement(rng, 9, 500, out);
  REQUIRE(out.size() == 500);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] < 9);
    if (i) CHECK(out[i - 1] <= out[i]);
  }
}
