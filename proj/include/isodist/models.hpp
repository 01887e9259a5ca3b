#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace isodist {

/// Covariate density on [0,1] of the form f(x) = 1 + b (x - 1/2), |b| <= 2.
/// Uniform is b = 0; a mixture (1-eps) f0 + eps f1 of two such densities is
/// again of this form with b = (1-eps) b0 + eps b1, which keeps the CDF and
/// quantile in closed form.
class Density {
 public:
  static Density uniform();
  static Density linear(double slope);
  static Density mixture(double eps, const Density& f0, const Density& f1);

  double pdf(double x) const { return 1.0 + slope_ * (x - 0.5); }
  double cdf(double x) const;
  double quantile(double u) const;
  double slope() const { return slope_; }
  double sup() const { return 1.0 + 0.5 * std::abs(slope_); }
  double inf() const { return 1.0 - 0.5 * std::abs(slope_); }

  nlohmann::json to_json() const { return spec_; }
  static Density from_json(const nlohmann::json& j);

 private:
  double slope_ = 0.0;
  nlohmann::json spec_;
};

/// Strictly decreasing piecewise-linear regression function on [0,1].
class MonotoneFn {
 public:
  /// mu(x) = intercept + slope * x with slope < 0.
  static MonotoneFn linear(double intercept, double slope);
  /// Linear interpolation through (xs[i], ys[i]); xs runs from 0 to 1.
  static MonotoneFn tabulated(std::vector<double> xs, std::vector<double> ys);
  /// Coincides with `base` outside (x0 - eps0, x0 + eps0). Inside, three
  /// linear segments: base(x0-eps0) -> base(x0) on [x0-eps0, x0], slope -c on
  /// [x0, x0+eps0/2], then back to base(x0+eps0). The inverse at base(x0)
  /// stays x0 for every c.
  static MonotoneFn smooth_perturbed(const MonotoneFn& base, double x0, double eps0, double c);

  double operator()(double x) const;
  /// Derivative where it exists; nullopt at corners (one-sided at 0 and 1).
  std::optional<double> derivative(double x) const;
  /// Closed-form inverse, extended by 0 above mu(0) and 1 below mu(1).
  double inverse(double a) const;

  double min_abs_slope() const;
  double max_abs_slope() const;
  std::size_t corner_count() const;
  double sup_abs() const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

  nlohmann::json to_json() const { return spec_; }
  static MonotoneFn from_json(const nlohmann::json& j);

 private:
  enum class Kind { Linear, Tabulated, Perturbed };

  MonotoneFn(std::vector<double> xs, std::vector<double> ys, nlohmann::json spec);
  double segment_slope(std::size_t i) const;

  Kind kind_ = Kind::Tabulated;
  double intercept_ = 0.0;
  double slope_ = 0.0;
  std::shared_ptr<const MonotoneFn> base_;  // perturbed: evaluated outside (lo_, hi_)
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> xs_;  // nodes of the piecewise-linear representation
  std::vector<double> ys_;
  nlohmann::json spec_;
};

/// mu^{-1}(a) by bisection to 1e-12, extended to the real line.
double extend_g(const MonotoneFn& mu, double a);

enum class NoiseKind { Gaussian, Bernoulli };

struct PopulationSpec {
  Density density = Density::uniform();
  double sigma = 0.0;  // conditional sd of the noise
  NoiseKind noise = NoiseKind::Gaussian;
  double share = 1.0;  // n_j / N
};

/// Growing family of sub-populations: m = floor(N^{1/4}), f_j = (1-eps_j) f0 +
/// eps_j f1 with eps_j = eps1 / j, equal blocks of floor(N/m) with the
/// remainder on the last population, i.i.d. noise of sd sigma.
struct GrowingMixture {
  Density f0 = Density::uniform();
  Density f1 = Density::uniform();
  double eps1 = 0.5;
  double sigma = 0.5;
  NoiseKind noise = NoiseKind::Gaussian;

  std::size_t population_count(std::size_t n) const;
};

struct ModelConstants {
  double c1 = 0.5;  // inf f_X >
  double c2 = 2.0;  // sup f_X <=
  double c3 = 0.5;  // |slope| >
  double c4 = 2.0;  // |slope| <
  double c5 = 2.0;  // sup |mu| <=
};

/// Declared pointwise limits: f_inf = density, sigma_inf^2(u) = sigma^2 f_inf(u).
struct LimitSpec {
  Density density = Density::uniform();
  double sigma = 0.0;
};

struct ModelSpec {
  MonotoneFn mu = MonotoneFn::linear(1.0, -1.0);
  std::vector<PopulationSpec> pops;
  std::optional<GrowingMixture> growing;
  ModelConstants constants;
  std::optional<LimitSpec> limit;

  /// Static population list at sample size n (resolves a growing family).
  ModelSpec at(std::size_t n) const;

  /// Mixture density f_X(u) = sum_j share_j f_j(u). Requires a static model.
  double mixture_density(double u) const;
  double mixture_cdf(double u) const;
  /// sigma_X^2(u) = sum_j share_j sigma_j^2 f_j(u).
  double sigma_x_sq(double u) const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);

  /// mu(x) = 1 - x, one uniform population with Gaussian noise of sd sigma.
  static ModelSpec homogeneous_linear(double sigma);
};

struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::uint32_t> pop;

  std::size_t size() const { return x.size(); }
};

/// Counts summing to n by largest remainder (ties to the lower index).
std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& shares, std::size_t n);

/// N pairs, population blocks in order; population j draws from the stream
/// derive_seed(seed, {j}). Throws std::invalid_argument (naming A4) when a
/// population would receive no observations, or when shares do not sum to 1.
Dataset generate_dataset(const ModelSpec& model, std::size_t n, std::uint64_t seed);

double f_infinity(const ModelSpec& model, double u);
double sigma_infinity_sq(const ModelSpec& model, double u);

enum class CheckCategory { Hard, Asymptotic, Limit };

struct AssumptionCheck {
  std::string id;
  CheckCategory category = CheckCategory::Hard;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct AssumptionThresholds {
  double bins_ratio_min = 2.0;    // K N^{-1/3}
  double lambda_ratio_min = 0.5;  // lambda N^{1/3} (log N)^{-3}
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;

  bool hard_ok() const;
  const AssumptionCheck& get(const std::string& id) const;
  nlohmann::json to_json() const;
};

AssumptionReport validate_assumptions(const ModelSpec& model, std::size_t n, std::size_t k,
                                      const AssumptionThresholds& thresholds = {});

/// ceil(N^{1/3} ln N), at least 1.
std::size_t default_bin_count(std::size_t n);

}  // namespace isodist
