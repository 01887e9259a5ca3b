#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "isodist/chernoff.hpp"
#include "isodist/stats.hpp"

using namespace isodist;

namespace {

// sup_x |F(x) - P(-Z <= x)| from one sample.
double symmetry_gap(std::vector<double> z) {
  std::vector<double> neg(z.size());
  std::transform(z.begin(), z.end(), neg.begin(), [](double v) { return -v; });
  return ks_two_sample(z, neg);
}

}  // namespace

TEST_SUITE("chernoff") {
  TEST_CASE("identical seeds give identical draws, independent of jobs") {
    ChernoffConfig c;
    c.samples = 500;
    c.seed = 42;
    const auto a = sample_chernoff(c);
    const auto b = sample_chernoff(c);
    c.jobs = 3;
    const auto p = sample_chernoff(c);
    CHECK(a == b);
    CHECK(a == p);
    c.seed = 43;
    CHECK(sample_chernoff(c) != a);
  }

  TEST_CASE("draws lie on the grid inside the window") {
    ChernoffConfig c;
    c.samples = 200;
    for (double z : sample_chernoff(c)) {
      CHECK(std::abs(z) <= c.half_width);
      CHECK(std::abs(z / c.step - std::round(z / c.step)) < 1e-6);
    }
  }

  TEST_CASE("symmetry and spread") {
    ChernoffConfig c;
    c.samples = 100000;
    c.seed = 7;
    const auto z = sample_chernoff(c);
    CHECK(symmetry_gap(z) <= 0.01);
    CHECK(std::abs(mean(z)) <= 0.01);
    // Var(argmax W(u) - u^2) = 0.2636 (Groeneboom-Wellner tables), sd 0.5134
    CHECK(sample_sd(z) == doctest::Approx(0.5134).epsilon(0.02));
  }

  TEST_CASE("truncation at M = 3 vs M = 4 barely matters") {
    ChernoffConfig c3;
    c3.samples = 20000;
    c3.seed = 9;
    ChernoffConfig c4 = c3;
    c4.half_width = 4.0;
    // the M = 4 path extends the M = 3 path, so the two samples are coupled
    CHECK(ks_two_sample(sample_chernoff(c3), sample_chernoff(c4)) <= 0.005);
  }

  TEST_CASE("scaling law argmax{a W - b u^2} = (a/b)^{2/3} Z") {
    ChernoffConfig c;
    c.samples = 20000;
    c.seed = 3;
    for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}, std::pair{0.5, 3.0}}) {
      const auto r = scaled_argmax_check(a, b, c);
      CHECK(r.expected_ratio == doctest::Approx(std::pow(a / b, 2.0 / 3.0)));
      CHECK(r.sd_ratio == doctest::Approx(r.expected_ratio).epsilon(0.04));
      CHECK(r.ks <= 0.03);
    }
  }

  TEST_CASE("configuration checks") {
    ChernoffConfig c;
    c.step = 0.007;  // 3 / 0.007 is not an integer
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.step = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    ChernoffConfig ok;
    CHECK(ok.steps() == 600);
  }

  TEST_CASE("limit scales") {
    // mu = 1 - x, uniform X, sigma = 0.5: both scales are exactly 1
    const auto m = ModelSpec::homogeneous_linear(0.5);
    CHECK(limit_scale_inverse(m, 0.5) == doctest::Approx(1.0));
    CHECK(limit_scale_direct(m, 0.5) == doctest::Approx(1.0));
    // sigma = 0.3: inverse (0.6)^{2/3}, direct (0.36)^{1/3}
    const auto m3 = ModelSpec::homogeneous_linear(0.3);
    CHECK(limit_scale_inverse(m3, 0.3) == doctest::Approx(std::pow(0.6, 2.0 / 3.0)));
    CHECK(limit_scale_direct(m3, 0.3) == doctest::Approx(std::cbrt(0.36)));
    // noiseless: both zero
    const auto m0 = ModelSpec::homogeneous_linear(0.0);
    CHECK(limit_scale_inverse(m0, 0.5) == 0.0);
    CHECK(limit_scale_direct(m0, 0.5) == 0.0);
    // linear density b = 1 at t = 0.75: f = 1.25, sigma_inf^2 = sigma^2 f
    ModelSpec mb = ModelSpec::homogeneous_linear(0.4);
    mb.mu = MonotoneFn::linear(1.0, -1.5);
    mb.pops[0].density = Density::linear(1.0);
    const double f = 1.25, s2 = 0.16 * f;
    CHECK(limit_scale_inverse(mb, 0.75) == doctest::Approx(std::pow(2 * std::sqrt(s2) / (1.5 * f), 2.0 / 3.0)));
    CHECK(limit_scale_direct(mb, 0.75) == doctest::Approx(std::cbrt(4 * s2 * 1.5 / (f * f))));
    // corner
    ModelSpec mc = ModelSpec::homogeneous_linear(0.3);
    mc.mu = MonotoneFn::tabulated({0, 0.5, 1}, {1, 0.5, -0.25});
    CHECK_THROWS_AS(limit_scale_inverse(mc, 0.5), std::domain_error);
    CHECK_THROWS_AS(limit_scale_direct(mc, 0.5), std::domain_error);
  }
}
