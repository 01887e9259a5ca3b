#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "isodist/exact_sum.hpp"

using isodist::ExactSum;

namespace {

// Oracle: values that are multiples of 2^-40 below 2^40 in magnitude sum
// exactly in a 128-bit integer; the int128 -> double conversion is correctly
// rounded (nearest, ties to even) and the final 2^-40 scaling is exact.
double int128_sum(const std::vector<double>& xs) {
  __int128 acc = 0;
  for (double x : xs) acc += static_cast<__int128>(std::ldexp(x, 40));
  return std::ldexp(static_cast<double>(acc), -40);
}

std::vector<double> random_grid_values(std::mt19937_64& g, std::size_t n) {
  std::uniform_int_distribution<std::int64_t> mant(-(std::int64_t{1} << 53), std::int64_t{1} << 53);
  std::uniform_int_distribution<int> shift(0, 26);
  std::vector<double> v(n);
  for (auto& x : v) x = std::ldexp(static_cast<double>(mant(g)), shift(g) - 40);
  return v;
}

}  // namespace

TEST_SUITE("exact_sum") {
  TEST_CASE("matches the 128-bit integer oracle") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 300; ++trial) {
      auto xs = random_grid_values(g, 1 + trial % 97);
      ExactSum s;
      for (double x : xs) s.add(x);
      CHECK(s.value() == int128_sum(xs));
    }
  }

  TEST_CASE("order and grouping do not change the result") {
    std::mt19937_64 g(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = nd(g) * std::pow(10.0, static_cast<int>(g() % 30) - 15);
    ExactSum fwd;
    for (double x : xs) fwd.add(x);
    auto ys = xs;
    std::shuffle(ys.begin(), ys.end(), g);
    ExactSum a, b;
    for (std::size_t i = 0; i < ys.size(); ++i) (i % 3 == 0 ? a : b).add(ys[i]);
    a.merge(b);
    CHECK(a.value() == fwd.value());
  }

  TEST_CASE("cancellation keeps small terms") {
    ExactSum s;
    s += std::ldexp(1.0, 100);
    s += 1.0;
    s += -std::ldexp(1.0, 100);
    CHECK(s.value() == 1.0);
    ExactSum t;
    t += 1e308;
    t += 1e308;
    t += -1e308;
    CHECK(t.value() == 1e308);
  }

  TEST_CASE("round to nearest even on exact ties") {
    ExactSum s;
    s += 1.0;
    s += std::ldexp(1.0, -53);  // exactly half an ulp of 1
    CHECK(s.value() == 1.0);
    s += std::ldexp(1.0, -80);  // now just above the tie
    CHECK(s.value() == std::nextafter(1.0, 2.0));
  }

  TEST_CASE("subnormals and zero") {
    ExactSum s;
    CHECK(s.is_zero());
    CHECK(s.value() == 0.0);
    const double tiny = std::numeric_limits<double>::denorm_min();
    for (int i = 0; i < 1000; ++i) s += tiny;
    CHECK(s.value() == 1000 * tiny);
    s += -1000 * tiny;
    CHECK(s.is_zero());
  }

  TEST_CASE("many additions between carries") {
    ExactSum s;
    for (int i = 0; i < 3'000'000; ++i) s += 0.1;
    int e = 0;
    const double m = std::frexp(0.1, &e);  // 0.1 = m 2^e, m 2^53 integral
    const auto mi = static_cast<__int128>(std::ldexp(m, 53));
    const double expect = std::ldexp(static_cast<double>(mi * 3'000'000), e - 53);
    CHECK(s.value() == expect);
  }
}
