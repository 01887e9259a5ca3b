#include "isodist/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace isodist {

namespace {

/// Greatest maximizer of num[j] - a*den[j] over the given candidate indices
/// (ascending). The incumbent is replaced when the chord slope to the
/// candidate is >= a, which is the same ratio PAVA uses for block values.
template <class Candidates>
std::size_t greatest_argmax(std::span<const double> num, std::span<const double> den, double a, Candidates&& cands) {
  std::size_t best = 0;
  cands([&](std::size_t j) {
    const double dc = den[j] - den[best];
    const double dt = num[j] - num[best];
    const bool replace = dc == 0.0 ? dt >= 0.0 : dt / dc >= a;
    if (replace) best = j;
  });
  return best;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

PooledFit pooled_fit(const Regressogram& reg) {
  const std::size_t K = reg.bins;
  if (K < 1 || reg.cum_t.size() != K + 1 || reg.cum_count.size() != K + 1)
    throw std::invalid_argument("pooled_fit: malformed regressogram");
  auto fit = pava_antitonic_prefix(reg.cum_t, reg.cum_count);

  const double n = static_cast<double>(reg.n);
  std::vector<double> fn(K + 1), lam(K + 1);
  for (std::size_t j = 0; j <= K; ++j) {
    fn[j] = reg.cum_count[j] / n;
    lam[j] = reg.cum_t[j] / n;
  }

  CusumDiagram diag{fn, lam};
  const auto slopes = lcm_left_slopes(diag);
  for (std::size_t k = 0; k < K; ++k)
    if (!close_rel(slopes[k], fit.fitted[k], 1e-10))
      throw std::logic_error("pooled_fit: PAVA and majorant slope disagree at bin " + std::to_string(k + 1));

  std::vector<std::int64_t> inner(K > 0 ? K - 1 : 0);
  std::iota(inner.begin(), inner.end(), std::int64_t{1});
  auto muhat = StepFunction::on_grid(Continuity::Left, static_cast<std::int64_t>(K), inner, fit.fitted, true);

  std::vector<std::int64_t> all(K);
  std::iota(all.begin(), all.end(), std::int64_t{1});
  auto lambda_n = StepFunction::on_grid(Continuity::Right, static_cast<std::int64_t>(K), all, lam);

  return PooledFit{reg, std::move(fit), std::move(muhat), std::move(lambda_n), std::move(fn), std::move(lam)};
}

std::size_t pooled_inverse_index(const PooledFit& fit, double a) {
  const std::size_t K = fit.bins();
  return greatest_argmax(fit.num(), fit.den(), a, [K](auto&& visit) {
    for (std::size_t j = 1; j <= K; ++j) visit(j);
  });
}

double pooled_inverse(const PooledFit& fit, double a) {
  return static_cast<double>(pooled_inverse_index(fit, a)) / static_cast<double>(fit.bins());
}

bool check_switch(const PooledFit& fit, double t, double a) {
  const bool lhs = fit.muhat(t) >= a;
  const auto j = static_cast<std::int64_t>(pooled_inverse_index(fit, a));
  const bool rhs = compare_to_fraction(t, j, static_cast<std::int64_t>(fit.bins())) <= 0;
  return lhs == rhs;
}

std::size_t v_n_index(const PooledFit& fit, double a) {
  const auto den = fit.den();
  const std::size_t K = fit.bins();
  // one candidate per distinct value of F~_N: the first grid index carrying it
  return greatest_argmax(fit.num(), den, a, [&](auto&& visit) {
    for (std::size_t j = 1; j <= K; ++j)
      if (den[j] != den[j - 1]) visit(j);
  });
}

double v_n(const PooledFit& fit, double a) { return fit.fn_grid[v_n_index(fit, a)]; }

std::size_t tilde_F_inverse_index(const PooledFit& fit, double v) {
  const auto& f = fit.fn_grid;
  const auto it = std::lower_bound(f.begin(), f.end(), v);
  if (it == f.end()) return f.size() - 1;
  return static_cast<std::size_t>(it - f.begin());
}

double tilde_F_inverse(const PooledFit& fit, double v) {
  return static_cast<double>(tilde_F_inverse_index(fit, v)) / static_cast<double>(fit.bins());
}

// ------------------------------------------------------------------ global

double GlobalFit::location(std::size_t i) const {
  if (i == 0) return 0.0;
  if (i >= xs.size()) return 1.0;
  return xs[i - 1];
}

GlobalFit global_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("global_fit: x and y differ in length");
  if (x.empty()) throw std::invalid_argument("global_fit: no observations");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b] || (x[a] == x[b] && a < b); });

  GlobalFit g;
  g.n_obs = x.size();
  g.num.push_back(0.0);
  g.den.push_back(0.0);
  for (auto i : order) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw std::domain_error("global_fit: covariate outside [0,1]");
    if (!g.xs.empty() && g.xs.back() == x[i]) {
      g.num.back() += y[i];
      g.den.back() += 1.0;
      continue;
    }
    g.xs.push_back(x[i]);
    g.num.push_back(g.num.back() + y[i]);
    g.den.push_back(g.den.back() + 1.0);
  }
  g.fit = pava_antitonic_prefix(g.num, g.den);
  std::vector<double> knots(g.xs.begin(), g.xs.end() - 1);
  g.muhat = StepFunction(Continuity::Left, std::move(knots), g.fit.fitted, true);
  return g;
}

GlobalFit global_fit(const Dataset& data) { return global_fit(data.x, data.y); }

std::size_t global_inverse_index(const GlobalFit& fit, double a) {
  const std::size_t n = fit.xs.size();
  return greatest_argmax(fit.num, fit.den, a, [n](auto&& visit) {
    for (std::size_t j = 1; j <= n; ++j) visit(j);
  });
}

double global_inverse(const GlobalFit& fit, double a) { return fit.location(global_inverse_index(fit, a)); }

bool check_switch_global(const GlobalFit& fit, double t, double a) {
  return (fit.muhat(t) >= a) == (t <= global_inverse(fit, a));
}

// -------------------------------------------------------------------- BDSE

BdseFit::BdseFit(const Dataset& data, const Allocation& alloc) {
  if (alloc.server_of.size() != data.size()) throw std::invalid_argument("bdse: allocation does not cover the dataset");
  const auto shards = alloc.shards();
  shards_.resize(shards.size());
  std::vector<double> xs, ys;
  for (std::size_t l = 0; l < shards.size(); ++l) {
    if (shards[l].empty()) continue;
    xs.clear();
    ys.clear();
    for (auto i : shards[l]) {
      xs.push_back(data.x[i]);
      ys.push_back(data.y[i]);
    }
    shards_[l] = global_fit(xs, ys);
  }
  if (std::none_of(shards_.begin(), shards_.end(), [](const auto& s) { return s.has_value(); }))
    throw std::invalid_argument("bdse: every server is empty");
}

template <class F>
BdseResult BdseFit::average(F&& per_shard, CommLedger* ledger) const {
  BdseResult r;
  double sum = 0.0;
  for (std::size_t l = 0; l < shards_.size(); ++l) {
    if (!shards_[l]) {
      ++r.empty;
      continue;
    }
    sum += per_shard(*shards_[l]);
    ++r.used;
    if (ledger) ledger->record(CommLedger::Phase::BdseTransfer, l, 1);
  }
  if (ledger) ledger->count_query(CommLedger::Phase::BdseTransfer);
  r.value = sum / static_cast<double>(r.used);
  return r;
}

BdseResult BdseFit::direct(double t0, CommLedger* ledger) const {
  return average([t0](const GlobalFit& g) { return g.muhat(t0); }, ledger);
}

BdseResult BdseFit::inverse(double a, CommLedger* ledger) const {
  return average([a](const GlobalFit& g) { return global_inverse(g, a); }, ledger);
}

BdseResult bdse_direct(const Dataset& data, const Allocation& alloc, double t0, CommLedger* ledger) {
  return BdseFit(data, alloc).direct(t0, ledger);
}

BdseResult bdse_inverse(const Dataset& data, const Allocation& alloc, double a, CommLedger* ledger) {
  return BdseFit(data, alloc).inverse(a, ledger);
}

}  // namespace isodist
