#include "isodist/step_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace isodist {

int compare_to_fraction(double x, std::int64_t num, std::int64_t den) {
  const auto d = static_cast<double>(den);
  const auto n = static_cast<double>(num);
  const double p = x * d;
  if (p < n) return -1;
  if (p > n) return 1;
  // x*d == p + err exactly
  const double err = std::fma(x, d, -p);
  return (err > 0.0) - (err < 0.0);
}

StepFunction::StepFunction(Continuity side, std::vector<double> knots, std::vector<double> values,
                           bool nonincreasing)
    : side_(side), knots_(std::move(knots)), values_(std::move(values)), nonincreasing_(nonincreasing) {
  canonicalize();
}

StepFunction StepFunction::on_grid(Continuity side, std::int64_t denominator,
                                   std::vector<std::int64_t> numerators, std::vector<double> values,
                                   bool nonincreasing) {
  if (denominator <= 0) throw std::invalid_argument("StepFunction: grid denominator must be positive");
  StepFunction f;
  f.side_ = side;
  f.nonincreasing_ = nonincreasing;
  f.grid_den_ = denominator;
  f.knots_.reserve(numerators.size());
  for (auto k : numerators) f.knots_.push_back(static_cast<double>(k) / static_cast<double>(denominator));
  f.grid_num_ = std::move(numerators);
  f.values_ = std::move(values);
  f.canonicalize();
  return f;
}

void StepFunction::canonicalize() {
  if (values_.size() != knots_.size() + 1)
    throw std::invalid_argument("StepFunction: need exactly one more value than knots");
  for (double v : values_)
    if (std::isnan(v)) throw std::invalid_argument("StepFunction: NaN value");
  const bool grid = grid_den_.has_value();
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const bool bad = grid ? (grid_num_[i] < 0 || grid_num_[i] > *grid_den_) : !(knots_[i] >= 0.0 && knots_[i] <= 1.0);
    if (bad) throw std::invalid_argument("StepFunction: knot outside [0,1]");
    if (i > 0) {
      const bool decreasing = grid ? grid_num_[i] < grid_num_[i - 1] : knots_[i] < knots_[i - 1];
      if (decreasing) throw std::invalid_argument("StepFunction: knots must be sorted");
    }
  }

  std::vector<double> k2;
  std::vector<std::int64_t> n2;
  std::vector<double> v2{values_.front()};
  auto same_as_prev = [&](std::size_t i) {
    if (k2.empty()) return false;
    return grid ? grid_num_[i] == n2.back() : knots_[i] == k2.back();
  };
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (same_as_prev(i)) {
      // piece between duplicate knots is empty
      v2.back() = values_[i + 1];
      continue;
    }
    k2.push_back(knots_[i]);
    if (grid) n2.push_back(grid_num_[i]);
    v2.push_back(values_[i + 1]);
  }

  // empty end pieces: [0,0) for Right, (1,1] for Left
  auto at_zero = [&](std::size_t i) { return grid ? n2[i] == 0 : k2[i] == 0.0; };
  auto at_one = [&](std::size_t i) { return grid ? n2[i] == *grid_den_ : k2[i] == 1.0; };
  if (side_ == Continuity::Right && !k2.empty() && at_zero(0)) {
    k2.erase(k2.begin());
    if (grid) n2.erase(n2.begin());
    v2.erase(v2.begin());
  }
  if (side_ == Continuity::Left && !k2.empty() && at_one(k2.size() - 1)) {
    k2.pop_back();
    if (grid) n2.pop_back();
    v2.pop_back();
  }

  // merge equal neighbours
  knots_.clear();
  grid_num_.clear();
  values_.assign(1, v2.front());
  for (std::size_t i = 0; i < k2.size(); ++i) {
    if (v2[i + 1] == values_.back()) continue;
    knots_.push_back(k2[i]);
    if (grid) grid_num_.push_back(n2[i]);
    values_.push_back(v2[i + 1]);
  }

  if (nonincreasing_) {
    for (std::size_t i = 1; i < values_.size(); ++i)
      if (values_[i] > values_[i - 1]) throw std::invalid_argument("StepFunction: values not nonincreasing");
  }
}

bool StepFunction::knot_below(std::size_t i, double t) const {
  if (grid_den_) return compare_to_fraction(t, grid_num_[i], *grid_den_) > 0;
  return knots_[i] < t;
}

bool StepFunction::knot_at_most(std::size_t i, double t) const {
  if (grid_den_) return compare_to_fraction(t, grid_num_[i], *grid_den_) >= 0;
  return knots_[i] <= t;
}

std::size_t StepFunction::piece_index(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("StepFunction: t outside [0,1]");
  // number of knots strictly below t (Left) or at most t (Right)
  std::size_t lo = 0, hi = knots_.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const bool left_of_t = side_ == Continuity::Left ? knot_below(mid, t) : knot_at_most(mid, t);
    if (left_of_t)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

double StepFunction::eval(double t) const { return values_[piece_index(t)]; }

nlohmann::json StepFunction::to_json() const {
  return {{"side", side_ == Continuity::Left ? "left" : "right"}, {"knots", knots_}, {"values", values_}};
}

StepFunction StepFunction::from_json(const nlohmann::json& j) {
  const auto side_s = j.at("side").get<std::string>();
  if (side_s != "left" && side_s != "right") throw std::invalid_argument("StepFunction: bad side '" + side_s + "'");
  auto values = j.at("values").get<std::vector<double>>();
  bool monotone = std::is_sorted(values.rbegin(), values.rend());
  return StepFunction(side_s == "left" ? Continuity::Left : Continuity::Right,
                      j.at("knots").get<std::vector<double>>(), std::move(values), monotone);
}

double generalized_inverse(const StepFunction& h, double a) {
  if (h.side() != Continuity::Left || !h.nonincreasing())
    throw std::invalid_argument("generalized_inverse: needs a nonincreasing left-continuous function");
  const auto vals = h.values();
  // first piece with value < a
  const auto it = std::partition_point(vals.begin(), vals.end(), [a](double v) { return v >= a; });
  const auto qualifying = static_cast<std::size_t>(it - vals.begin());
  if (qualifying == 0) return 0.0;
  if (qualifying == vals.size()) return 1.0;
  return h.knots()[qualifying - 1];
}

double extend_inverse(const std::function<double(double)>& mu, double a, double tol) {
  const double top = mu(0.0);
  const double bottom = mu(1.0);
  if (a > top) return 0.0;
  if (a < bottom) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mu(mid) > a)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace isodist
