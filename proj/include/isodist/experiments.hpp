#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "isodist/chernoff.hpp"
#include "isodist/cluster.hpp"
#include "isodist/models.hpp"

namespace isodist {

enum class EstimatorKind { Pooled, Global, Bdse };
enum class QueryKind { Direct, Inverse };

std::string to_string(EstimatorKind e);
std::string to_string(QueryKind q);
EstimatorKind parse_estimator(const std::string& s);

struct ExperimentConfig {
  ModelSpec model = ModelSpec::homogeneous_linear(0.3);
  std::vector<EstimatorKind> estimators{EstimatorKind::Pooled, EstimatorKind::Global};
  std::vector<std::size_t> ns{1000};
  std::size_t k = 0;  // 0: ceil(N^{1/3} ln N) at each N
  std::size_t servers = 1;
  AllocationPolicy policy = AllocationPolicy::Contiguous;
  std::vector<double> ts;  // direct query points
  std::vector<double> as;  // inverse levels
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  unsigned jobs = 0;

  std::size_t bins_for(std::size_t n) const { return k > 0 ? k : default_bin_count(n); }
  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// 41 equally spaced levels on [mu(1) + 0.05 r, mu(0) - 0.05 r], r = mu(0) - mu(1).
std::vector<double> default_a_grid(const MonotoneFn& mu);

struct ErrorColumn {
  EstimatorKind estimator;
  QueryKind kind;
  double target;  // t or a
  double truth;   // mu(t) or extend_g(mu, a)
};

/// Signed errors per replication and query column; a failed replication has
/// an all-NaN row.
struct ErrorTable {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<ErrorColumn> columns;
  std::vector<std::vector<double>> errors;  // [rep][column]
  std::vector<std::string> failures;        // one message per failed replication
  CommLedger ledger;                        // summed over replications
};

/// Replication r at sample size N uses the dataset seed derive_seed(seed, {N, r})
/// and the allocation seed derive_seed(seed, {N, r, 1}); all estimators see the
/// same data and allocation.
ErrorTable simulate_errors(const ExperimentConfig& cfg, std::size_t n);

struct RiskRow {
  EstimatorKind estimator;
  std::size_t n = 0;
  std::size_t servers = 0;
  std::size_t k = 0;
  QueryKind kind;
  double target = 0.0;
  double mse = 0.0;
  double scaled = 0.0;  // N^{2/3} mse
  double se = 0.0;      // of mse: sd(squared errors) / sqrt(R)
  std::size_t reps = 0;
  std::size_t failures = 0;
};

struct RiskReport {
  std::vector<RiskRow> rows;
  CommLedger ledger;

  const RiskRow& find(EstimatorKind e, std::size_t n, QueryKind kind, double target) const;
  /// Long format: estimator,N,m,K,target,value,se with value = N^{2/3} mse.
  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

RiskReport mc_risk(const ExperimentConfig& cfg);

struct LimitLawRow {
  EstimatorKind estimator;
  QueryKind kind;
  double scale = 0.0;
  double ks = 0.0;
  std::vector<double> standardized;
};

struct LimitLawReport {
  std::size_t n = 0;
  std::size_t k = 0;
  double t = 0.0;
  double a = 0.0;  // mu(t)
  std::size_t failures = 0;
  std::vector<LimitLawRow> rows;

  const LimitLawRow& find(EstimatorKind e, QueryKind kind) const;
  nlohmann::json to_json() const;
};

/// Standardized errors N^{1/3}(muhat(t) - mu(t)) / direct scale and
/// N^{1/3}(U(a) - g(a)) / inverse scale at a = mu(t), compared by two-sample KS
/// with Chernoff reference draws. BDSE entries in cfg.estimators are ignored.
LimitLawReport limit_law_check(const ExperimentConfig& cfg, std::size_t n, double t, const ChernoffConfig& reference);

struct SweepConfig {
  MonotoneFn base = MonotoneFn::linear(1.2, -1.2);
  double x0 = 0.5;
  double eps0 = 0.4;
  // flattest inner slope about half the base slope; 1.95 gets pruned (return slope 0.45)
  std::vector<double> c_grid{0.55, 0.725, 0.9, 1.075, 1.25, 1.425, 1.6, 1.775, 1.95};
  std::vector<std::size_t> m_grid{4, 16, 64};
  std::size_t n = 32000;
  std::size_t reps = 500;
  double sigma = 0.3;
  std::size_t k = 0;
  ModelConstants constants;
  std::uint64_t seed = 1;
  unsigned jobs = 0;

  nlohmann::json to_json() const;
  static SweepConfig from_json(const nlohmann::json& j);
};

struct SweepCell {
  std::string estimator;  // "pooled", "global" or "bdse"
  double c = 0.0;
  std::size_t m = 1;
  double mse = 0.0;
  double scaled = 0.0;
  double se = 0.0;
};

struct SweepReport {
  double a = 0.0;            // mu0(x0), the inverse target; g_c(a) = x0 for every c
  double fixed_c = 0.0;      // |mu0'(x0)|
  std::vector<double> feasible_c;
  std::vector<std::string> notes;
  std::vector<SweepCell> cells;
  std::size_t n = 0;
  std::size_t k = 0;

  const SweepCell& cell(const std::string& est, double c, std::size_t m = 1) const;
  double worst(const std::string& est, std::size_t m = 1) const;
  double fixed(const std::string& est, std::size_t m = 1) const { return cell(est, fixed_c, m).scaled; }
  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

/// Inverse risk at a = mu0(x0) for mu_c = smooth_perturbed(mu0, x0, eps0, c),
/// one uniform population, Gaussian noise. BDSE uses m equal contiguous shards.
/// Inner slopes whose perturbed function leaves (C3, C4) are pruned with a note.
SweepReport superefficiency_sweep(const SweepConfig& cfg);

struct TailReport {
  std::size_t n = 0;
  double a = 0.0;
  double truth = 0.0;
  std::size_t reps = 0;
  std::vector<double> x;
  std::vector<double> freq;       // P(|U_N(a) - g(a)| >= x)
  std::vector<double> reference;  // const / (N x^3), const fit at x[0]
  bool monotone = true;
  double mid_slope = 0.0;         // log-log slope over freq in [0.05, 0.5]
  std::size_t mid_points = 0;

  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

/// Pooled inverse at level a. An empty x_grid means 40 geometric points on
/// [0.05, 5] N^{-1/3}.
TailReport tail_diagnostic(const ExperimentConfig& cfg, std::size_t n, double a, std::vector<double> x_grid = {});

}  // namespace isodist
