#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "isodist/cluster.hpp"
#include "isodist/isotonic.hpp"
#include "isodist/models.hpp"
#include "isodist/step_function.hpp"

namespace isodist {

/// Pooled smooth-then-isotonize fit on the K-grid.
///
/// Internally the cumulative diagram is kept unnormalized: num[j] = sum_{k<=j} T_k
/// and den[j] = sum_{k<=j} C_k, so Lambda_N(j/K) = num[j]/N and F_N(j/K) = den[j]/N.
/// PAVA block values and the inverse scan both read these same arrays.
struct PooledFit {
  Regressogram reg;
  AntitonicFit fit;
  StepFunction muhat;     // left-continuous, knots k/K
  StepFunction lambda_n;  // right-continuous, Lambda_N(j/K) on [j/K, (j+1)/K)
  std::vector<double> fn_grid;      // F_N(j/K), j = 0..K
  std::vector<double> lambda_grid;  // Lambda_N(j/K), j = 0..K

  std::size_t bins() const { return reg.bins; }
  std::span<const double> num() const { return reg.cum_t; }
  std::span<const double> den() const { return reg.cum_count; }
};

/// Throws std::logic_error if PAVA and the concave-majorant slopes disagree by
/// more than 1e-10 (relative).
PooledFit pooled_fit(const Regressogram& reg);

/// Index j in 0..K of the greatest maximizer of Lambda_N(j/K) - a F_N(j/K).
std::size_t pooled_inverse_index(const PooledFit& fit, double a);
/// U_N(a) = j/K.
double pooled_inverse(const PooledFit& fit, double a);

/// [muhat_N(t) >= a] == [t <= U_N(a)], compared exactly on the grid. Meant for
/// t in (0,1]: at t = 0 and a above every fitted value U_N(a) = 0 >= t.
bool check_switch(const PooledFit& fit, double t, double a);

/// V_N(a) as a value of F~_N, and the grid index of the chosen point.
double v_n(const PooledFit& fit, double a);
std::size_t v_n_index(const PooledFit& fit, double a);
/// F~_N^{-1}(v) = smallest grid point j/K with F_N(j/K) >= v.
std::size_t tilde_F_inverse_index(const PooledFit& fit, double v);
double tilde_F_inverse(const PooledFit& fit, double v);

/// Unit-weight antitonic fit on the sorted covariates; tied X values pool.
struct GlobalFit {
  std::size_t n_obs = 0;
  std::vector<double> xs;   // distinct sorted covariates
  std::vector<double> num;  // prefix sums of Y over xs, size xs.size()+1
  std::vector<double> den;  // prefix counts, size xs.size()+1
  AntitonicFit fit;         // one value per distinct covariate
  StepFunction muhat = StepFunction::constant(0.0);

  double lambda_at(std::size_t i) const { return num[i] / static_cast<double>(n_obs); }
  double fn_at(std::size_t i) const { return den[i] / static_cast<double>(n_obs); }
  /// Location of diagram index i: 0 for i = 0, X_(i) for 0 < i < n, 1 for i = n.
  double location(std::size_t i) const;
};

GlobalFit global_fit(std::span<const double> x, std::span<const double> y);
GlobalFit global_fit(const Dataset& data);

std::size_t global_inverse_index(const GlobalFit& fit, double a);
double global_inverse(const GlobalFit& fit, double a);
bool check_switch_global(const GlobalFit& fit, double t, double a);

struct BdseResult {
  double value = 0.0;
  std::size_t used = 0;   // servers averaged
  std::size_t empty = 0;  // servers without data, left out
};

/// Per-server antitonic fits on raw shard data.
class BdseFit {
 public:
  BdseFit(const Dataset& data, const Allocation& alloc);

  /// Mean over nonempty servers of muhat_l(t0); records one scalar per server.
  BdseResult direct(double t0, CommLedger* ledger = nullptr) const;
  /// Mean over nonempty servers of the shard inverse at a.
  BdseResult inverse(double a, CommLedger* ledger = nullptr) const;

  const std::vector<std::optional<GlobalFit>>& shards() const { return shards_; }

 private:
  template <class F>
  BdseResult average(F&& per_shard, CommLedger* ledger) const;

  std::vector<std::optional<GlobalFit>> shards_;
};

BdseResult bdse_direct(const Dataset& data, const Allocation& alloc, double t0, CommLedger* ledger = nullptr);
BdseResult bdse_inverse(const Dataset& data, const Allocation& alloc, double a, CommLedger* ledger = nullptr);

}  // namespace isodist
