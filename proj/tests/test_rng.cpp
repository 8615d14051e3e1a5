#include <catch_amalgamated.hpp>

#include <vector>

#include "kips/math.hpp"
#include "kips/rng.hpp"

using namespace kips;

TEST_CASE("same key reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ") {
  Rng a(Rng::derive(1, 0)), b(Rng::derive(1, 1));
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
  CHECK(equal == 0);
}

TEST_CASE("uniform moments") {
  Rng rng(3);
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.next_double();
  const double mean = pairwise_mean(xs);
  CHECK(mean == Catch::Approx(0.5).margin(5.0 / std::sqrt(12.0 * n)));
  for (double x : xs) {
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("uniform_int covers the range without bias") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  const int n = 140000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(rng.uniform_int(1, 7)) - 1]++;
  const double expected = n / 7.0;
  const double tol = 5.0 * std::sqrt(expected);  // ~5 sigma
  for (int c : counts) CHECK(std::abs(c - expected) < tol);
}

TEST_CASE("normal moments") {
  Rng rng(9);
  const int n = 200000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.normal();
  CHECK(pairwise_mean(xs) == Catch::Approx(0.0).margin(5.0 / std::sqrt(double(n))));
  CHECK(sample_variance(xs) == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("categorical respects the probability vector") {
  Rng rng(13);
  Vector p(3);
  p << 0.5, 0.3, 0.2;
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(rng.categorical(p))]++;
  for (int k = 0; k < 3; ++k) {
    const double expected = n * p[k];
    CHECK(std::abs(counts[static_cast<std::size_t>(k)] - expected) <
          5.0 * std::sqrt(expected));
  }
}
