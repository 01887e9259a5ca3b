#include "isodist/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "isodist/estimators.hpp"
#include "isodist/parallel.hpp"
#include "isodist/rng.hpp"
#include "isodist/stats.hpp"

namespace isodist {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mse = kNaN;
  double se = kNaN;
  std::size_t used = 0;
};

Moments squared_error_moments(const std::vector<double>& errs) {
  std::vector<double> sq;
  sq.reserve(errs.size());
  for (double e : errs)
    if (!std::isnan(e)) sq.push_back(e * e);
  Moments m;
  m.used = sq.size();
  if (sq.empty()) return m;
  m.mse = mean(sq);
  m.se = sq.size() >= 2 ? sample_sd(sq) / std::sqrt(static_cast<double>(sq.size())) : 0.0;
  return m;
}

double n23(std::size_t n) { return std::pow(static_cast<double>(n), 2.0 / 3.0); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Pooled: return "pooled";
    case EstimatorKind::Global: return "global";
    case EstimatorKind::Bdse: return "bdse";
  }
  return "?";
}

std::string to_string(QueryKind q) { return q == QueryKind::Direct ? "direct" : "inverse"; }

EstimatorKind parse_estimator(const std::string& s) {
  if (s == "pooled") return EstimatorKind::Pooled;
  if (s == "global") return EstimatorKind::Global;
  if (s == "bdse") return EstimatorKind::Bdse;
  throw std::invalid_argument("unknown estimator '" + s + "'");
}

// ------------------------------------------------------------------ config

void ExperimentConfig::validate() const {
  if (reps < 1) throw std::invalid_argument("experiment: reps must be >= 1");
  if (ns.empty()) throw std::invalid_argument("experiment: empty N list");
  for (auto n : ns)
    if (n < 1) throw std::invalid_argument("experiment: N must be >= 1");
  if (servers < 1) throw std::invalid_argument("experiment: servers must be >= 1");
  if (estimators.empty()) throw std::invalid_argument("experiment: no estimators");
  for (double t : ts)
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("experiment: query t outside [0,1]");
}

nlohmann::json ExperimentConfig::to_json() const {
  std::vector<std::string> est;
  for (auto e : estimators) est.push_back(to_string(e));
  return {{"model", model.to_json()}, {"estimators", est}, {"N", ns},  {"K", k},
          {"servers", servers},       {"alloc", to_string(policy)}, {"t", ts}, {"a", as},
          {"reps", reps},             {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("model")) c.model = ModelSpec::from_json(j.at("model"));
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& s : j.at("estimators")) c.estimators.push_back(parse_estimator(s.get<std::string>()));
  }
  if (j.contains("N")) {
    c.ns = j.at("N").is_array() ? j.at("N").get<std::vector<std::size_t>>()
                                : std::vector<std::size_t>{j.at("N").get<std::size_t>()};
  }
  c.k = j.value("K", c.k);
  c.servers = j.value("servers", c.servers);
  if (j.contains("alloc")) c.policy = parse_policy(j.at("alloc").get<std::string>());
  c.ts = j.value("t", c.ts);
  c.as = j.value("a", c.as);
  c.reps = j.value("reps", c.reps);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<double> default_a_grid(const MonotoneFn& mu) {
  const double hi = mu(0.0), lo = mu(1.0);
  const double r = hi - lo;
  const double a0 = lo + 0.05 * r, a1 = hi - 0.05 * r;
  std::vector<double> g(41);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = a0 + (a1 - a0) * static_cast<double>(i) / 40.0;
  return g;
}

// -------------------------------------------------------------- simulation

ErrorTable simulate_errors(const ExperimentConfig& cfg, std::size_t n) {
  cfg.validate();
  ErrorTable tab;
  tab.n = n;
  tab.k = cfg.bins_for(n);
  const auto& mu = cfg.model.mu;
  bool need[3] = {false, false, false};
  for (auto e : cfg.estimators) {
    need[static_cast<int>(e)] = true;
    for (double t : cfg.ts) tab.columns.push_back({e, QueryKind::Direct, t, mu(t)});
    for (double a : cfg.as) tab.columns.push_back({e, QueryKind::Inverse, a, extend_g(mu, a)});
  }

  const std::size_t R = cfg.reps;
  tab.errors.assign(R, std::vector<double>(tab.columns.size(), kNaN));
  std::vector<std::string> fail(R);
  std::vector<CommLedger> ledgers(R);

  parallel_for(R, cfg.jobs, [&](std::size_t r) {
    try {
      const Dataset d = generate_dataset(cfg.model, n, derive_seed(cfg.seed, {n, r}));
      const Allocation al = allocate(n, cfg.servers, cfg.policy, derive_seed(cfg.seed, {n, r, 1}), d.pop);
      auto& led = ledgers[r];
      std::optional<PooledFit> pf;
      std::optional<GlobalFit> gf;
      std::optional<BdseFit> bf;
      if (need[0]) pf = pooled_fit(merge_summaries(local_summaries(d, al, tab.k, &led), n));
      if (need[1]) {
        gf = global_fit(d);
        record_global_transfer(led, al);
      }
      if (need[2]) bf.emplace(d, al);
      auto& row = tab.errors[r];
      for (std::size_t c = 0; c < tab.columns.size(); ++c) {
        const auto& col = tab.columns[c];
        const bool direct = col.kind == QueryKind::Direct;
        double est = kNaN;
        switch (col.estimator) {
          case EstimatorKind::Pooled:
            est = direct ? pf->muhat(col.target) : pooled_inverse(*pf, col.target);
            break;
          case EstimatorKind::Global:
            est = direct ? gf->muhat(col.target) : global_inverse(*gf, col.target);
            break;
          case EstimatorKind::Bdse:
            est = direct ? bf->direct(col.target, &led).value : bf->inverse(col.target, &led).value;
            break;
        }
        row[c] = est - col.truth;
      }
    } catch (const std::exception& e) {
      std::fill(tab.errors[r].begin(), tab.errors[r].end(), kNaN);
      fail[r] = std::string("replication ") + std::to_string(r) + ": " + e.what();
    }
  });

  for (std::size_t r = 0; r < R; ++r) {
    tab.ledger.merge(ledgers[r]);
    if (!fail[r].empty()) tab.failures.push_back(fail[r]);
  }
  return tab;
}

RiskReport mc_risk(const ExperimentConfig& cfg) {
  RiskReport rep;
  for (auto n : cfg.ns) {
    const auto tab = simulate_errors(cfg, n);
    rep.ledger.merge(tab.ledger);
    for (std::size_t c = 0; c < tab.columns.size(); ++c) {
      std::vector<double> errs(tab.errors.size());
      for (std::size_t r = 0; r < errs.size(); ++r) errs[r] = tab.errors[r][c];
      const auto m = squared_error_moments(errs);
      const auto& col = tab.columns[c];
      rep.rows.push_back({col.estimator, n, cfg.servers, tab.k, col.kind, col.target, m.mse, n23(n) * m.mse, m.se,
                          m.used, tab.failures.size()});
    }
  }
  return rep;
}

const RiskRow& RiskReport::find(EstimatorKind e, std::size_t n, QueryKind kind, double target) const {
  for (const auto& r : rows)
    if (r.estimator == e && r.n == n && r.kind == kind && r.target == target) return r;
  throw std::out_of_range("RiskReport: no such row");
}

void RiskReport::write_csv(std::ostream& os) const {
  os << "estimator,N,m,K,target,value,se\n";
  for (const auto& r : rows) {
    const double s = n23(r.n);
    os << to_string(r.estimator) << ',' << r.n << ',' << r.servers << ',' << r.k << ','
       << (r.kind == QueryKind::Direct ? "t=" : "a=") << num(r.target) << ',' << num(r.scaled) << ',' << num(s * r.se)
       << '\n';
  }
}

nlohmann::json RiskReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"estimator", to_string(r.estimator)},
                   {"N", r.n},
                   {"m", r.servers},
                   {"K", r.k},
                   {"kind", to_string(r.kind)},
                   {"target", r.target},
                   {"mse", r.mse},
                   {"scaled_risk", r.scaled},
                   {"se", r.se},
                   {"reps", r.reps},
                   {"failures", r.failures}});
  return {{"rows", arr}, {"ledger", ledger.to_json()}};
}

// ---------------------------------------------------------------- limit law

LimitLawReport limit_law_check(const ExperimentConfig& cfg, std::size_t n, double t, const ChernoffConfig& reference) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("limit_law_check: t must be interior");
  ExperimentConfig c = cfg;
  c.estimators.erase(std::remove(c.estimators.begin(), c.estimators.end(), EstimatorKind::Bdse), c.estimators.end());
  if (c.estimators.empty()) throw std::invalid_argument("limit_law_check: needs pooled or global");
  const double a = cfg.model.mu(t);
  c.ts = {t};
  c.as = {a};

  LimitLawReport rep;
  rep.n = n;
  rep.t = t;
  rep.a = a;
  const ModelSpec resolved = cfg.model.at(n);
  const double s_dir = limit_scale_direct(resolved, t);
  const double s_inv = limit_scale_inverse(resolved, t);
  const auto tab = simulate_errors(c, n);
  rep.k = tab.k;
  rep.failures = tab.failures.size();
  const auto ref = sample_chernoff(reference);
  const double root = std::cbrt(static_cast<double>(n));
  for (std::size_t col = 0; col < tab.columns.size(); ++col) {
    LimitLawRow row;
    row.estimator = tab.columns[col].estimator;
    row.kind = tab.columns[col].kind;
    row.scale = row.kind == QueryKind::Direct ? s_dir : s_inv;
    for (const auto& e : tab.errors)
      if (!std::isnan(e[col])) row.standardized.push_back(root * e[col] / row.scale);
    row.ks = ks_two_sample(row.standardized, ref);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

const LimitLawRow& LimitLawReport::find(EstimatorKind e, QueryKind kind) const {
  for (const auto& r : rows)
    if (r.estimator == e && r.kind == kind) return r;
  throw std::out_of_range("LimitLawReport: no such row");
}

nlohmann::json LimitLawReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"estimator", to_string(r.estimator)},
                   {"kind", to_string(r.kind)},
                   {"scale", r.scale},
                   {"ks", r.ks},
                   {"samples", r.standardized.size()}});
  return {{"N", n}, {"K", k}, {"t", t}, {"a", a}, {"failures", failures}, {"rows", arr}};
}

// ------------------------------------------------------------ sweep

nlohmann::json SweepConfig::to_json() const {
  return {{"base", base.to_json()}, {"x0", x0},     {"eps0", eps0},   {"c_grid", c_grid}, {"m_grid", m_grid},
          {"N", n},                 {"reps", reps}, {"sigma", sigma}, {"K", k},           {"seed", seed},
          {"constants", {{"C3", constants.c3}, {"C4", constants.c4}}}};
}

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
  SweepConfig c;
  if (j.contains("base")) c.base = MonotoneFn::from_json(j.at("base"));
  c.x0 = j.value("x0", c.x0);
  c.eps0 = j.value("eps0", c.eps0);
  c.c_grid = j.value("c_grid", c.c_grid);
  c.m_grid = j.value("m_grid", c.m_grid);
  c.n = j.value("N", c.n);
  c.reps = j.value("reps", c.reps);
  c.sigma = j.value("sigma", c.sigma);
  c.k = j.value("K", c.k);
  c.seed = j.value("seed", c.seed);
  if (j.contains("constants")) {
    c.constants.c3 = j.at("constants").value("C3", c.constants.c3);
    c.constants.c4 = j.at("constants").value("C4", c.constants.c4);
  }
  return c;
}

SweepReport superefficiency_sweep(const SweepConfig& cfg) {
  if (cfg.reps < 1 || cfg.n < 1) throw std::invalid_argument("sweep: N and reps must be >= 1");
  SweepReport rep;
  rep.a = cfg.base(cfg.x0);
  const auto d0 = cfg.base.derivative(cfg.x0);
  if (!d0) throw std::invalid_argument("sweep: base function has a corner at x0");
  rep.fixed_c = std::abs(*d0);
  rep.n = cfg.n;
  rep.k = cfg.k > 0 ? cfg.k : default_bin_count(cfg.n);

  std::vector<double> grid = cfg.c_grid;
  if (std::find(grid.begin(), grid.end(), rep.fixed_c) == grid.end()) grid.push_back(rep.fixed_c);
  std::sort(grid.begin(), grid.end());

  std::vector<MonotoneFn> fns;
  for (double c : grid) {
    try {
      auto f = MonotoneFn::smooth_perturbed(cfg.base, cfg.x0, cfg.eps0, c);
      const double lo = f.min_abs_slope(), hi = f.max_abs_slope();
      if (!(lo > cfg.constants.c3 && hi < cfg.constants.c4)) {
        rep.notes.push_back("c=" + num(c) + " pruned: slopes [" + num(lo) + ", " + num(hi) + "] leave (C3, C4)");
        continue;
      }
      rep.feasible_c.push_back(c);
      fns.push_back(std::move(f));
    } catch (const std::invalid_argument& e) {
      rep.notes.push_back("c=" + num(c) + " pruned: " + e.what());
    }
  }
  if (std::find(rep.feasible_c.begin(), rep.feasible_c.end(), rep.fixed_c) == rep.feasible_c.end())
    throw std::invalid_argument("sweep: the unperturbed slope is not feasible");

  const std::size_t M = cfg.m_grid.size();
  const std::size_t cols = 2 + M;  // pooled, global, bdse per m
  const double scale = n23(cfg.n);
  for (std::size_t ci = 0; ci < fns.size(); ++ci) {
    ModelSpec model;
    model.mu = fns[ci];
    model.pops = {PopulationSpec{Density::uniform(), cfg.sigma, NoiseKind::Gaussian, 1.0}};
    const double truth = extend_g(model.mu, rep.a);
    std::vector<std::vector<double>> errs(cols, std::vector<double>(cfg.reps, kNaN));
    parallel_for(cfg.reps, cfg.jobs, [&](std::size_t r) {
      try {
        const Dataset d = generate_dataset(model, cfg.n, derive_seed(cfg.seed, {ci, r}));
        const Allocation one = allocate(cfg.n, 1, AllocationPolicy::Contiguous, 0);
        const auto pf = pooled_fit(merge_summaries(local_summaries(d, one, rep.k), cfg.n));
        errs[0][r] = pooled_inverse(pf, rep.a) - truth;
        errs[1][r] = global_inverse(global_fit(d), rep.a) - truth;
        for (std::size_t mi = 0; mi < M; ++mi) {
          const Allocation al = allocate(cfg.n, cfg.m_grid[mi], AllocationPolicy::Contiguous, 0);
          errs[2 + mi][r] = BdseFit(d, al).inverse(rep.a).value - truth;
        }
      } catch (const std::exception&) {
        for (auto& col : errs) col[r] = kNaN;
      }
    });
    const double c = rep.feasible_c[ci];
    for (std::size_t col = 0; col < cols; ++col) {
      const auto m = squared_error_moments(errs[col]);
      SweepCell cell;
      cell.estimator = col == 0 ? "pooled" : col == 1 ? "global" : "bdse";
      cell.c = c;
      cell.m = col < 2 ? 1 : cfg.m_grid[col - 2];
      cell.mse = m.mse;
      cell.scaled = scale * m.mse;
      cell.se = scale * m.se;
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

const SweepCell& SweepReport::cell(const std::string& est, double c, std::size_t m) const {
  for (const auto& x : cells)
    if (x.estimator == est && x.c == c && x.m == m) return x;
  throw std::out_of_range("SweepReport: no such cell");
}

double SweepReport::worst(const std::string& est, std::size_t m) const {
  double w = -std::numeric_limits<double>::infinity();
  for (const auto& x : cells)
    if (x.estimator == est && x.m == m) w = std::max(w, x.scaled);
  return w;
}

void SweepReport::write_csv(std::ostream& os) const {
  os << "estimator,N,m,K,target,value,se\n";
  for (const auto& x : cells)
    os << x.estimator << ',' << n << ',' << x.m << ',' << k << ",c=" << num(x.c) << ',' << num(x.scaled) << ',' << num(x.se)
       << '\n';
}

nlohmann::json SweepReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& x : cells)
    cs.push_back({{"estimator", x.estimator}, {"c", x.c}, {"m", x.m}, {"mse", x.mse}, {"scaled_risk", x.scaled}, {"se", x.se}});
  nlohmann::json worst_bdse = nlohmann::json::object();
  nlohmann::json fixed_ratio = nlohmann::json::object();
  for (const auto& x : cells)
    if (x.estimator == "bdse" && x.c == fixed_c) {
      worst_bdse[std::to_string(x.m)] = worst("bdse", x.m);
      fixed_ratio[std::to_string(x.m)] = x.scaled / fixed("global");
    }
  return {{"a", a},
          {"N", n},
          {"K", k},
          {"fixed_c", fixed_c},
          {"feasible_c", feasible_c},
          {"notes", notes},
          {"cells", cs},
          {"worst_bdse", worst_bdse},
          {"worst_pooled", worst("pooled")},
          {"fixed_pooled", fixed("pooled")},
          {"worst_global", worst("global")},
          {"fixed_global", fixed("global")},
          {"fixed_ratio_bdse_over_global", fixed_ratio}};
}

// --------------------------------------------------------------------- tail

TailReport tail_diagnostic(const ExperimentConfig& cfg, std::size_t n, double a, std::vector<double> x_grid) {
  ExperimentConfig c = cfg;
  c.estimators = {EstimatorKind::Pooled};
  c.ts.clear();
  c.as = {a};
  const auto tab = simulate_errors(c, n);

  TailReport rep;
  rep.n = n;
  rep.a = a;
  rep.truth = tab.columns.at(0).truth;
  std::vector<double> abs_err;
  for (const auto& row : tab.errors)
    if (!std::isnan(row[0])) abs_err.push_back(std::abs(row[0]));
  rep.reps = abs_err.size();
  if (abs_err.empty()) throw std::runtime_error("tail_diagnostic: every replication failed");
  std::sort(abs_err.begin(), abs_err.end());

  if (x_grid.empty()) {
    const double s = 1.0 / std::cbrt(static_cast<double>(n));
    for (int i = 0; i < 40; ++i) x_grid.push_back(s * 0.05 * std::pow(100.0, i / 39.0));
  }
  std::sort(x_grid.begin(), x_grid.end());
  rep.x = x_grid;
  const double R = static_cast<double>(abs_err.size());
  for (double x : x_grid) {
    const auto it = std::lower_bound(abs_err.begin(), abs_err.end(), x);
    rep.freq.push_back(static_cast<double>(abs_err.end() - it) / R);
  }
  for (std::size_t i = 1; i < rep.freq.size(); ++i)
    if (rep.freq[i] > rep.freq[i - 1]) rep.monotone = false;
  const double c0 = rep.freq.front() * static_cast<double>(n) * std::pow(x_grid.front(), 3);
  for (double x : x_grid) rep.reference.push_back(c0 / (static_cast<double>(n) * x * x * x));

  std::vector<double> mx, my;
  for (std::size_t i = 0; i < x_grid.size(); ++i)
    if (rep.freq[i] >= 0.05 && rep.freq[i] <= 0.5) {
      mx.push_back(x_grid[i]);
      my.push_back(rep.freq[i]);
    }
  rep.mid_points = mx.size();
  rep.mid_slope = loglog_slope(mx, my);
  return rep;
}

void TailReport::write_csv(std::ostream& os) const {
  os << "x,exceedance,reference\n";
  for (std::size_t i = 0; i < x.size(); ++i) os << num(x[i]) << ',' << num(freq[i]) << ',' << num(reference[i]) << '\n';
}

nlohmann::json TailReport::to_json() const {
  return {{"N", n},       {"a", a},
          {"truth", truth}, {"reps", reps},
          {"monotone", monotone}, {"mid_slope", std::isnan(mid_slope) ? nlohmann::json(nullptr) : nlohmann::json(mid_slope)},
          {"mid_points", mid_points}, {"x", x},
          {"exceedance", freq}, {"reference", reference}};
}

}  // namespace isodist
