#include "isodist/isotonic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace isodist {

void WeightedSeries::validate() const {
  if (y.empty()) throw std::invalid_argument("WeightedSeries: empty");
  if (y.size() != w.size()) throw std::invalid_argument("WeightedSeries: y and w differ in length");
  bool any_positive = false;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!std::isfinite(w[k]) || w[k] < 0.0) throw std::invalid_argument("WeightedSeries: weights must be finite and >= 0");
    if (w[k] > 0.0) {
      any_positive = true;
      if (!std::isfinite(y[k])) throw std::invalid_argument("WeightedSeries: non-finite y at positive weight");
    }
  }
  if (!any_positive) throw std::invalid_argument("WeightedSeries: all weights are zero");
}

AntitonicFit pava_antitonic_prefix(std::span<const double> num_prefix, std::span<const double> den_prefix) {
  if (num_prefix.size() != den_prefix.size() || num_prefix.size() < 2)
    throw std::invalid_argument("pava: prefix arrays must have equal length K+1 >= 2");
  const std::size_t K = num_prefix.size() - 1;

  std::vector<Block> stack;
  stack.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double dq = den_prefix[k + 1] - den_prefix[k];
    if (dq < 0.0) throw std::invalid_argument("pava: denominator prefix must be nondecreasing");
    if (dq == 0.0) {
      if (!stack.empty()) stack.back().end = k + 1;
      continue;
    }
    Block cur{k, k + 1, (num_prefix[k + 1] - num_prefix[k]) / dq, 0.0};
    while (!stack.empty() && stack.back().value <= cur.value) {
      cur.begin = stack.back().begin;
      stack.pop_back();
      cur.value = (num_prefix[cur.end] - num_prefix[cur.begin]) / (den_prefix[cur.end] - den_prefix[cur.begin]);
    }
    stack.push_back(cur);
  }
  if (stack.empty()) throw std::invalid_argument("pava: all weights are zero");
  stack.front().begin = 0;

  AntitonicFit fit;
  fit.fitted.resize(K);
  for (auto& b : stack) {
    b.weight = den_prefix[b.end] - den_prefix[b.begin];
    for (std::size_t k = b.begin; k < b.end; ++k) fit.fitted[k] = b.value;
  }
  fit.blocks = std::move(stack);
  return fit;
}

AntitonicFit pava_antitonic_sums(std::span<const double> num, std::span<const double> den) {
  if (num.size() != den.size() || num.empty()) throw std::invalid_argument("pava: num and den must match and be nonempty");
  std::vector<double> p(num.size() + 1, 0.0), q(num.size() + 1, 0.0);
  for (std::size_t k = 0; k < num.size(); ++k) {
    if (!(den[k] >= 0.0) || !std::isfinite(den[k])) throw std::invalid_argument("pava: denominators must be finite and >= 0");
    if (den[k] == 0.0 && num[k] != 0.0) throw std::invalid_argument("pava: nonzero numerator at zero weight");
    if (!std::isfinite(num[k])) throw std::invalid_argument("pava: non-finite numerator");
    p[k + 1] = p[k] + num[k];
    q[k + 1] = q[k] + den[k];
  }
  return pava_antitonic_prefix(p, q);
}

AntitonicFit pava_antitonic(const WeightedSeries& series) {
  series.validate();
  std::vector<double> num(series.size());
  for (std::size_t k = 0; k < num.size(); ++k) num[k] = series.w[k] > 0.0 ? series.w[k] * series.y[k] : 0.0;
  return pava_antitonic_sums(num, series.w);
}

CusumDiagram CusumDiagram::from_series(const WeightedSeries& series) {
  series.validate();
  CusumDiagram d;
  d.u.assign(1, 0.0);
  d.v.assign(1, 0.0);
  for (std::size_t k = 0; k < series.size(); ++k) {
    d.u.push_back(d.u.back() + series.w[k]);
    d.v.push_back(d.v.back() + (series.w[k] > 0.0 ? series.w[k] * series.y[k] : 0.0));
  }
  return d;
}

void CusumDiagram::validate() const {
  if (u.size() != v.size() || u.size() < 2) throw std::invalid_argument("CusumDiagram: need K+1 >= 2 points");
  if (u.front() != 0.0 || v.front() != 0.0) throw std::invalid_argument("CusumDiagram: must start at the origin");
  for (std::size_t j = 1; j < u.size(); ++j)
    if (u[j] < u[j - 1]) throw std::invalid_argument("CusumDiagram: abscissae must be nondecreasing");
  if (u.back() <= 0.0) throw std::invalid_argument("CusumDiagram: degenerate (all abscissae zero)");
}

std::vector<double> lcm_left_slopes(const CusumDiagram& diagram) {
  diagram.validate();
  struct Pt {
    double u, v;
  };
  std::vector<Pt> pts;
  for (std::size_t j = 0; j < diagram.u.size(); ++j) {
    if (!pts.empty() && pts.back().u == diagram.u[j]) {
      pts.back().v = std::max(pts.back().v, diagram.v[j]);
      continue;
    }
    pts.push_back({diagram.u[j], diagram.v[j]});
  }

  std::vector<Pt> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.u - a.u) * (p.v - a.v) - (b.v - a.v) * (p.u - a.u);
      if (cross < 0.0) break;  // b strictly above chord a-p
      hull.pop_back();
    }
    hull.push_back(p);
  }

  std::vector<double> slopes;
  slopes.reserve(diagram.u.size() - 1);
  std::size_t seg = 0;
  for (std::size_t j = 1; j < diagram.u.size(); ++j) {
    const double uj = diagram.u[j];
    while (seg + 2 < hull.size() && hull[seg + 1].u < uj) ++seg;
    const auto& a = hull[seg];
    const auto& b = hull[seg + 1];
    slopes.push_back((b.v - a.v) / (b.u - a.u));
  }
  return slopes;
}

AntitonicFit brute_force_antitonic(const WeightedSeries& series) {
  series.validate();
  const std::size_t K = series.size();
  if (K > kBruteForceMaxSize) throw std::invalid_argument("brute_force_antitonic: K too large for enumeration");

  std::vector<std::size_t> pos;
  for (std::size_t k = 0; k < K; ++k)
    if (series.w[k] > 0.0) pos.push_back(k);
  const std::size_t p = pos.size();

  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<double> best(p);
  std::vector<double> cand(p);
  const std::size_t partitions = std::size_t{1} << (p - 1);
  for (std::size_t mask = 0; mask < partitions; ++mask) {
    // bit i set: cut between pos[i] and pos[i+1]
    bool feasible = true;
    double prev = std::numeric_limits<double>::infinity();
    std::size_t start = 0;
    for (std::size_t i = 0; i < p && feasible; ++i) {
      const bool cut = (i + 1 == p) || ((mask >> i) & 1u);
      if (!cut) continue;
      double swy = 0.0, sw = 0.0;
      for (std::size_t r = start; r <= i; ++r) {
        swy += series.w[pos[r]] * series.y[pos[r]];
        sw += series.w[pos[r]];
      }
      const double mean = swy / sw;
      if (mean > prev) feasible = false;
      prev = mean;
      for (std::size_t r = start; r <= i; ++r) cand[r] = mean;
      start = i + 1;
    }
    if (!feasible) continue;
    double sse = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      const double d = series.y[pos[r]] - cand[r];
      sse += series.w[pos[r]] * d * d;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = cand;
    }
  }

  AntitonicFit fit;
  fit.fitted.assign(K, best.front());
  std::size_t r = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (r < p && pos[r] == k) {
      fit.fitted[k] = best[r++];
    } else if (k > 0) {
      fit.fitted[k] = fit.fitted[k - 1];
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (fit.blocks.empty() || fit.fitted[k] != fit.blocks.back().value) {
      fit.blocks.push_back({k, k + 1, fit.fitted[k], series.w[k]});
    } else {
      fit.blocks.back().end = k + 1;
      fit.blocks.back().weight += series.w[k];
    }
  }
  return fit;
}

}  // namespace isodist
