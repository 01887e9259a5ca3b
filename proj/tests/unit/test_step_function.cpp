#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "isodist/step_function.hpp"

using namespace isodist;

namespace {

// sign(x - num/den) in 128-bit integers; x = m 2^e with |m| < 2^53.
int exact_sign(double x, std::int64_t num, std::int64_t den) {
  int e = 0;
  const double fr = std::frexp(x, &e);
  const auto m = static_cast<__int128>(std::ldexp(fr, 53));
  e -= 53;
  if (e >= 0) {
    // |x| >= 2^53 > |num/den| unless x == 0
    const __int128 lhs = m * (static_cast<__int128>(1) << std::min(e, 60)) * den;
    const __int128 rhs = num;
    return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
  }
  if (e < -70) {
    // x is far below 1/den in magnitude: only the sign of num matters unless num == 0
    if (num != 0) return num > 0 ? -1 : 1;
    return m > 0 ? 1 : m < 0 ? -1 : 0;
  }
  const __int128 lhs = m * den;
  const __int128 rhs = static_cast<__int128>(num) << (-e);
  return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
}

// max{t : h(t) >= a} by scanning a dense grid plus every knot.
double dense_inverse(const StepFunction& h, double a) {
  std::vector<double> ts;
  for (int i = 0; i <= 20000; ++i) ts.push_back(i / 20000.0);
  for (double k : h.knots()) ts.push_back(k);
  double best = 0.0;
  bool any = false;
  for (double t : ts)
    if (h(t) >= a) {
      best = any ? std::max(best, t) : t;
      any = true;
    }
  return any ? best : 0.0;
}

}  // namespace

TEST_SUITE("step_function") {
  TEST_CASE("compare_to_fraction agrees with 128-bit arithmetic") {
    std::mt19937_64 g(3);
    for (int trial = 0; trial < 20000; ++trial) {
      const std::int64_t den = 1 + static_cast<std::int64_t>(g() % 5000);
      const std::int64_t num = static_cast<std::int64_t>(g() % (den + 1));
      double x = static_cast<double>(num) / static_cast<double>(den);
      switch (trial % 4) {
        case 1: x = std::nextafter(x, 2.0); break;
        case 2: x = std::nextafter(x, -1.0); break;
        case 3: x = std::uniform_real_distribution<double>(0.0, 1.0)(g); break;
        default: break;
      }
      REQUIRE(compare_to_fraction(x, num, den) == exact_sign(x, num, den));
    }
  }

  TEST_CASE("j/K rounding is resolved exactly") {
    // 0.1 * 3 style rounding: (double)(3/10) is below or above 3/10, never equal
    CHECK(compare_to_fraction(0.3, 3, 10) == exact_sign(0.3, 3, 10));
    CHECK(compare_to_fraction(0.5, 1, 2) == 0);
    CHECK(compare_to_fraction(0.0, 0, 7) == 0);
    CHECK(compare_to_fraction(1.0, 7, 7) == 0);
  }

  TEST_CASE("left and right continuity at knots") {
    StepFunction l(Continuity::Left, {0.25, 0.5}, {3.0, 2.0, 1.0}, true);
    CHECK(l(0.0) == 3.0);
    CHECK(l(0.25) == 3.0);
    CHECK(l(std::nextafter(0.25, 1.0)) == 2.0);
    CHECK(l(0.5) == 2.0);
    CHECK(l(1.0) == 1.0);
    StepFunction r(Continuity::Right, {0.25, 0.5}, {3.0, 2.0, 1.0});
    CHECK(r(std::nextafter(0.25, 0.0)) == 3.0);
    CHECK(r(0.25) == 2.0);
    CHECK(r(0.5) == 1.0);
    CHECK_THROWS_AS(l(1.5), std::domain_error);
    CHECK_THROWS_AS(l(-0.1), std::domain_error);
  }

  TEST_CASE("grid knots evaluate exactly at j/K") {
    // K = 10: the double nearest 3/10 lies below 3/10, so it belongs to bin 3
    auto f = StepFunction::on_grid(Continuity::Left, 10, {1, 2, 3, 4, 5, 6, 7, 8, 9},
                                   {10, 9, 8, 7, 6, 5, 4, 3, 2, 1}, true);
    for (int j = 1; j <= 10; ++j) {
      const double t = j / 10.0;
      const int expected_piece = compare_to_fraction(t, j, 10) <= 0 ? j : j + 1;
      CHECK(f(t) == 11 - expected_piece);
    }
  }

  TEST_CASE("canonical form merges equal neighbours and duplicate knots") {
    StepFunction f(Continuity::Left, {0.2, 0.2, 0.6}, {3.0, 9.0, 2.0, 2.0}, true);
    CHECK(f.piece_count() == 2);
    CHECK(f(0.2) == 3.0);
    CHECK(f(0.3) == 2.0);
    CHECK_THROWS_AS(StepFunction(Continuity::Left, {0.5, 0.2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction(Continuity::Left, {0.5}, {1}), std::invalid_argument);
  }

  TEST_CASE("generalized inverse matches a dense scan") {
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(g() % 12);
      std::vector<double> knots(n), vals(n + 1);
      for (auto& k : knots) k = std::round(u(g) * 1000) / 1000;
      std::sort(knots.begin(), knots.end());
      for (auto& v : vals) v = std::round(u(g) * 20) / 10;
      std::sort(vals.rbegin(), vals.rend());
      StepFunction h(Continuity::Left, knots, vals, true);
      std::vector<double> as{-1.0, 5.0};
      for (double v : vals) as.insert(as.end(), {v, v + 0.05, v - 0.05});
      for (double a : as) CHECK(generalized_inverse(h, a) == dense_inverse(h, a));
    }
  }

  TEST_CASE("generalized inverse edge conventions") {
    StepFunction h(Continuity::Left, {0.5}, {2.0, 1.0}, true);
    CHECK(generalized_inverse(h, 3.0) == 0.0);  // sup of the empty set
    CHECK(generalized_inverse(h, 0.5) == 1.0);
    CHECK(generalized_inverse(h, 2.0) == 0.5);
    CHECK(generalized_inverse(h, 1.0) == 1.0);
    StepFunction r(Continuity::Right, {0.5}, {2.0, 1.0}, true);
    CHECK_THROWS_AS(generalized_inverse(r, 1.0), std::invalid_argument);
  }

  TEST_CASE("extend_inverse of a continuous decreasing function") {
    auto mu = [](double x) { return 1.0 - x * x / 2 - x / 2; };
    CHECK(extend_inverse(mu, 2.0) == 0.0);
    CHECK(extend_inverse(mu, -1.0) == 1.0);
    for (double x : {0.1, 0.37, 0.5, 0.9}) CHECK(std::abs(extend_inverse(mu, mu(x)) - x) <= 2e-12);
  }

  TEST_CASE("JSON round trip") {
    StepFunction f(Continuity::Left, {0.125, 0.75}, {1.5, 0.25, -1.0}, true);
    const auto g2 = StepFunction::from_json(f.to_json());
    for (double t : {0.0, 0.125, 0.2, 0.75, 0.8, 1.0}) CHECK(g2(t) == f(t));
    CHECK(g2.nonincreasing());
  }
}
