#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "isodist/models.hpp"
#include "isodist/rng.hpp"

namespace isodist {

struct ChernoffConfig {
  double half_width = 3.0;  // M
  double step = 0.005;      // h
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;

  /// Throws std::invalid_argument unless M > 0, h > 0 and M/h is an integer.
  void validate() const;
  std::size_t steps() const;
};

/// Grid argmax of a W(u) - b u^2 over [-M, M] for one two-sided Brownian path
/// with increments of variance h, drawn alternately right and left of 0 (so
/// that paths for a larger M extend those for a smaller one). Greatest tie.
double scaled_argmax_draw(Engine& eng, double a, double b, double half_width, double step);

/// Draw i uses the stream derive_seed(cfg.seed, {i}).
std::vector<double> sample_chernoff(const ChernoffConfig& cfg);

/// Draws of argmax{a W(u) - b u^2} on [-M s, M s] with step h min(1, s),
/// s = (a/b)^{2/3}, so that the window and resolution follow the scale.
std::vector<double> sample_scaled_argmax(double a, double b, const ChernoffConfig& cfg);

struct ScaledArgmaxCheck {
  double ks = 0.0;
  double sd_ratio = 0.0;     // sd(direct) / sd(Z)
  double expected_ratio = 0.0;  // (a/b)^{2/3}
};

/// Compares direct draws of argmax{a W - b u^2} with (a/b)^{2/3} Z drawn from
/// an independent stream.
ScaledArgmaxCheck scaled_argmax_check(double a, double b, const ChernoffConfig& cfg);

/// (2 sigma_inf(t) / (|mu'(t)| f_inf(t)))^{2/3}; throws std::domain_error if
/// mu has no derivative at t.
double limit_scale_inverse(const ModelSpec& model, double t);
/// (4 sigma_inf^2(t) |mu'(t)| / f_inf(t)^2)^{1/3}.
double limit_scale_direct(const ModelSpec& model, double t);

}  // namespace isodist
