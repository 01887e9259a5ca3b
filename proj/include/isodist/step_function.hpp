#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace isodist {

enum class Continuity { Left, Right };

/// Sign of x - num/den, decided on the exact binary64 value of x.
/// Requires den > 0 and |num|, den < 2^53.
int compare_to_fraction(double x, std::int64_t num, std::int64_t den);

/// Piecewise-constant function on [0,1].
///
/// With knots k_1 < ... < k_n the pieces are [0,k_1], (k_1,k_2], ..., (k_n,1]
/// for Left continuity and [0,k_1), [k_1,k_2), ..., [k_n,1] for Right. Knots that
/// come from a regular K-grid are additionally stored as integer numerators so
/// that evaluation exactly at j/K never depends on rounding of j/K.
///
/// Construction coalesces: duplicate knots drop the empty piece between them,
/// empty end pieces are dropped, and adjacent pieces with equal values merge.
class StepFunction {
 public:
  StepFunction(Continuity side, std::vector<double> knots, std::vector<double> values,
               bool nonincreasing = false);

  /// Knots at numerators[i] / denominator.
  static StepFunction on_grid(Continuity side, std::int64_t denominator,
                              std::vector<std::int64_t> numerators, std::vector<double> values,
                              bool nonincreasing = false);

  static StepFunction constant(double value) { return StepFunction(Continuity::Left, {}, {value}); }

  /// Value at t in [0,1]; throws std::domain_error outside.
  double eval(double t) const;
  double operator()(double t) const { return eval(t); }

  std::size_t piece_index(double t) const;

  Continuity side() const { return side_; }
  bool nonincreasing() const { return nonincreasing_; }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  std::size_t piece_count() const { return values_.size(); }
  std::optional<std::int64_t> grid_denominator() const { return grid_den_; }
  std::span<const std::int64_t> grid_numerators() const { return grid_num_; }

  nlohmann::json to_json() const;
  static StepFunction from_json(const nlohmann::json& j);

 private:
  StepFunction() = default;
  void canonicalize();
  bool knot_below(std::size_t i, double t) const;   // knot_i < t
  bool knot_at_most(std::size_t i, double t) const; // knot_i <= t

  Continuity side_ = Continuity::Left;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::optional<std::int64_t> grid_den_;
  std::vector<std::int64_t> grid_num_;
  bool nonincreasing_ = false;
};

inline double eval(const StepFunction& f, double t) { return f.eval(t); }

/// max{t in [0,1] : h(t) >= a}, with sup of the empty set taken as 0.
/// h must be left-continuous and flagged nonincreasing.
double generalized_inverse(const StepFunction& h, double a);

/// Inverse of a strictly decreasing continuous mu, extended by 0 above mu(0)
/// and 1 below mu(1). Bisection to `tol`.
double extend_inverse(const std::function<double(double)>& mu, double a, double tol = 1e-12);

}  // namespace isodist
