// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any non-warning
// criterion fails. Monte Carlo criteria take minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "isodist/chernoff.hpp"
#include "isodist/cluster.hpp"
#include "isodist/estimators.hpp"
#include "isodist/experiments.hpp"
#include "isodist/isotonic.hpp"
#include "isodist/models.hpp"
#include "isodist/rng.hpp"
#include "isodist/stats.hpp"

using namespace isodist;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, bool warn_only = false) {
  const char* tag = pass ? "PASS" : (warn_only ? "WARN" : "FAIL");
  std::printf("%s %2d %-28s %s\n", tag, id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass && !warn_only) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

PooledFit fit_with(const Dataset& d, std::size_t servers, AllocationPolicy p, std::size_t K, std::uint64_t seed,
                   CommLedger* ledger = nullptr) {
  const auto alloc = allocate(d.size(), servers, p, seed, d.pop);
  return pooled_fit(merge_summaries(local_summaries(d, alloc, K, ledger), d.size()));
}

// ---------------------------------------------------------------- 1

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Engine eng(derive_seed(1001, {}));
  std::uniform_int_distribution<int> size(1, 10);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double worst_bf = 0.0, worst_lcm = 0.0;
  int with_zero = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    WeightedSeries s;
    const int K = size(eng);
    for (int k = 0; k < K; ++k) {
      s.y.push_back(z(eng) - 0.3 * k);
      s.w.push_back(eng() % 4 == 0 ? 0.0 : u(eng));
    }
    if (std::none_of(s.w.begin(), s.w.end(), [](double w) { return w > 0; })) s.w[eng() % K] = 1.0;
    if (std::count(s.w.begin(), s.w.end(), 0.0) > 0) ++with_zero;
    const auto fit = pava_antitonic(s);
    const auto bf = brute_force_antitonic(s);
    const auto lcm = lcm_left_slopes(CusumDiagram::from_series(s));
    for (int k = 0; k < K; ++k) {
      if (s.w[k] > 0) worst_bf = std::max(worst_bf, std::abs(fit.fitted[k] - bf.fitted[k]));
      worst_lcm = std::max(worst_lcm, std::abs(fit.fitted[k] - lcm[k]));
    }
  }
  const double secs = seconds_since(t0);
  report(1, "oracle-equivalence", worst_bf <= 1e-10 && worst_lcm <= 1e-10 && secs < 10.0,
         fmt("max|pava-brute|=%.3g max|pava-lcm|=%.3g zero-weight instances=%g time=%.2fs", worst_bf, worst_lcm,
             with_zero, secs));
}

// ---------------------------------------------------------------- 2

void switch_relations() {
  Engine eng(derive_seed(1002, {}));
  std::size_t fits = 0, checks = 0, bad = 0, gchecks = 0, gbad = 0, vtou = 0, vbad = 0, vfits = 0;
  std::uint64_t seed = 0;
  while (fits < 500) {
    ++seed;
    const std::size_t n = 50 + eng() % 1500;
    const std::size_t K = 4 + eng() % 60;
    const auto d = generate_dataset(ModelSpec::homogeneous_linear(0.1 + 0.1 * (eng() % 5)), n, derive_seed(1002, {seed}));
    const auto pf = fit_with(d, 1 + eng() % 8, AllocationPolicy::RoundRobin, K, seed);
    if (pf.reg.counts[0] == 0) continue;  // leading empty bin: relation fails by construction
    ++fits;
    const auto g = global_fit(d);

    // t: knots j/K, points just inside bins, data points; a: fitted values, midpoints, beyond the range
    std::vector<double> ts, as;
    for (int i = 0; i < 10; ++i) {
      const std::size_t j = std::max<std::size_t>(1, (i + 1) * K / 10);
      ts.push_back(i % 2 == 0 ? static_cast<double>(j) / K : (j - 0.5) / K);
    }
    const auto& fv = pf.fit.fitted;
    const auto& gv = g.fit.fitted;
    for (int i = 0; i < 4; ++i) as.push_back(fv[eng() % fv.size()]);
    for (int i = 0; i < 2; ++i) as.push_back(gv[eng() % gv.size()]);
    as.push_back(0.5 * (fv.front() + fv.back()));
    as.push_back(std::nextafter(fv[fv.size() / 2], 1e300));
    as.push_back(fv.front() + 1.0);
    as.push_back(fv.back() - 1.0);

    for (double t : ts)
      for (double a : as) {
        ++checks;
        if (!check_switch(pf, t, a)) ++bad;
      }
    // global: knots at order statistics and interior points
    std::vector<double> gts;
    for (int i = 0; i < 5; ++i) gts.push_back(g.xs[eng() % g.xs.size()]);
    for (int i = 0; i < 5; ++i) gts.push_back(std::uniform_real_distribution<double>(1e-9, 1.0)(eng));
    for (double t : gts)
      for (double a : as) {
        ++gchecks;
        if (!check_switch_global(g, t, a)) ++gbad;
      }

    const bool all_nonempty = std::all_of(pf.reg.counts.begin(), pf.reg.counts.end(), [](std::int64_t c) { return c > 0; });
    if (all_nonempty) ++vfits;
    for (double a : as) {
      const auto u = pooled_inverse_index(pf, a);
      ++vtou;
      if (pf.fn_grid[u] != v_n(pf, a)) ++vbad;
      if (all_nonempty) {
        ++vtou;
        if (tilde_F_inverse_index(pf, v_n(pf, a)) != u) ++vbad;
      }
    }
  }
  report(2, "switch-relations", bad == 0 && gbad == 0 && vbad == 0 && vfits >= 250,
         fmt("violations: pooled %g/%g global %g/%g VtoU %g/%g", bad, checks, gbad, gchecks, vbad, vtou) +
             fmt("; fits=%g, all bins nonempty=%g", fits, vfits));
}

// ---------------------------------------------------------------- 3

void allocation_invariance() {
  ModelSpec m = ModelSpec::homogeneous_linear(0.4);
  m.pops = {PopulationSpec{Density::uniform(), 0.4, NoiseKind::Gaussian, 0.5},
            PopulationSpec{Density::linear(1.0), 0.2, NoiseKind::Gaussian, 0.3},
            PopulationSpec{Density::linear(-0.8), 0.5, NoiseKind::Gaussian, 0.2}};
  const AllocationPolicy pols[] = {AllocationPolicy::Contiguous, AllocationPolicy::RoundRobin,
                                   AllocationPolicy::RandomUniform, AllocationPolicy::ByPopulation};
  int identical = 0;
  for (std::uint64_t s = 1; s <= 50; ++s) {
    const std::size_t n = 200 + 97 * s;
    const std::size_t K = default_bin_count(n);
    const std::size_t L = 2 + s % 9;
    const auto d = generate_dataset(m, n, derive_seed(1003, {s}));
    const auto ref = fit_with(d, L, pols[0], K, s);
    bool ok = true;
    for (int p = 1; p < 4; ++p) {
      const auto f = fit_with(d, L, pols[p], K, s + 17);
      ok = ok && f.reg == ref.reg && same_bits(f.fit.fitted, ref.fit.fitted) && f.muhat.to_json() == ref.muhat.to_json() &&
           f.lambda_n.to_json() == ref.lambda_n.to_json() && same_bits(f.fn_grid, ref.fn_grid) &&
           same_bits(f.lambda_grid, ref.lambda_grid);
    }
    identical += ok;
  }
  report(3, "allocation-invariance", identical == 50, fmt("%g/50 datasets bit-identical across 4 policies", identical));
}

// ---------------------------------------------------------------- 4

void ledger() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const std::size_t n = 500 + 311 * s, L = 1 + s % 12, K = 10 + 3 * s;
    const auto d = generate_dataset(ModelSpec::homogeneous_linear(0.3), n, derive_seed(1004, {s}));
    const auto alloc = allocate(n, L, AllocationPolicy::RandomUniform, s);
    CommLedger led;
    local_summaries(d, alloc, K, &led);
    record_global_transfer(led, alloc);
    BdseFit b(d, alloc);
    const int queries = 3;
    std::size_t used = 0;
    for (int q = 0; q < queries; ++q) used += b.inverse(0.2 + 0.3 * q, &led).used;
    ok = ok && led.total(CommLedger::Phase::Summaries) == 2 * L * K &&
         led.total(CommLedger::Phase::GlobalTransfer) == 2 * n && used == queries * L &&
         led.total(CommLedger::Phase::BdseTransfer) == queries * L && led.queries(CommLedger::Phase::BdseTransfer) == 3;
    if (s == 20)
      detail = fmt("last case L=%g K=%g N=%g: summaries=%g global=%g bdse=%g (3 queries)", L, K, n,
                   led.total(CommLedger::Phase::Summaries), led.total(CommLedger::Phase::GlobalTransfer),
                   led.total(CommLedger::Phase::BdseTransfer));
  }
  report(4, "communication-ledger", ok, detail);
}

// ---------------------------------------------------------------- 5

void losslessness() {
  double worst = 0.0;
  int cases = 0;
  for (std::uint64_t s = 1; cases < 40; ++s) {
    const std::size_t n = 20 + 5 * s;
    const auto d = generate_dataset(ModelSpec::homogeneous_linear(0.5), n, derive_seed(1005, {s}));
    const std::size_t K = n * n;
    const auto pf = fit_with(d, 3, AllocationPolicy::Contiguous, K, s);
    if (*std::max_element(pf.reg.counts.begin(), pf.reg.counts.end()) > 1) continue;
    ++cases;
    const auto g = global_fit(d);
    for (double x : d.x) worst = std::max(worst, std::abs(pf.muhat(x) - g.muhat(x)));
  }
  report(5, "losslessness", worst <= 1e-10, fmt("K=N^2, one point per bin, %g datasets: max|pooled-global|=%.3g", cases, worst));
}

// ---------------------------------------------------------------- 6

void rate_boundedness() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c;
  c.model = ModelSpec::homogeneous_linear(0.3);
  c.estimators = {EstimatorKind::Pooled};
  c.ns = {1000, 8000, 27000};
  c.ts = {0.5};
  c.as = {0.5};
  c.reps = 500;
  c.seed = 6;
  const auto rep = mc_risk(c);
  bool ok = true;
  std::string detail;
  for (auto kind : {QueryKind::Inverse, QueryKind::Direct}) {
    std::vector<double> v;
    for (auto n : c.ns) v.push_back(rep.find(EstimatorKind::Pooled, n, kind, 0.5).scaled);
    const double r1 = v[1] / v[0], r2 = v[2] / v[1];
    ok = ok && r1 >= 0.6 && r1 <= 1.6 && r2 >= 0.6 && r2 <= 1.6;
    detail += (kind == QueryKind::Inverse ? "U(0.5)" : "muhat(0.5)") +
              fmt(" %.4f/%.4f/%.4f ratios %.3f %.3f; ", v[0], v[1], v[2], r1, r2);
  }
  report(6, "rate-boundedness", ok, detail + fmt("%.0fs", seconds_since(t0)));
}

// ---------------------------------------------------------------- 7

void chernoff_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  ChernoffConfig ref;
  ref.samples = 100000;
  ref.seed = 7;
  ExperimentConfig c;
  c.estimators = {EstimatorKind::Pooled, EstimatorKind::Global};
  c.reps = 400;
  c.seed = 7;

  c.model = ModelSpec::homogeneous_linear(0.5);
  const auto hom = limit_law_check(c, 100000, 0.5, ref);
  bool ok = hom.failures == 0;
  std::string detail = "homogeneous";
  for (const auto& r : hom.rows) {
    ok = ok && r.ks <= 0.12;
    detail += " " + to_string(r.estimator) + "/" + to_string(r.kind) + fmt("=%.4f", r.ks);
  }

  c.model = ModelSpec::from_json(nlohmann::json::parse(R"({
    "mu": {"kind": "linear", "intercept": 1.0, "slope": -1.0},
    "growing": {"f0": {"kind": "uniform"}, "f1": {"kind": "linear", "slope": 1.0}, "eps1": 0.5, "sigma": 0.5}})"));
  const auto grow = limit_law_check(c, 100000, 0.5, ref);
  ok = ok && grow.failures == 0;
  detail += fmt("; growing m=%g", static_cast<double>(c.model.growing->population_count(100000)));
  for (const auto& r : grow.rows) {
    ok = ok && r.ks <= 0.15;
    detail += " " + to_string(r.estimator) + "/" + to_string(r.kind) + fmt("=%.4f", r.ks);
  }
  report(7, "chernoff-limit", ok, detail + fmt(" (KS <= 0.12 / 0.15) %.0fs", seconds_since(t0)));
}

// ---------------------------------------------------------------- 8

void bdse_superefficiency() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c;
  c.model = ModelSpec::homogeneous_linear(0.3);
  c.estimators = {EstimatorKind::Global, EstimatorKind::Bdse};
  c.ns = {32000};
  c.servers = 16;
  c.policy = AllocationPolicy::Contiguous;
  c.as = {0.5};
  c.reps = 1000;
  c.seed = 8;
  const auto rep = mc_risk(c);
  const double b = rep.find(EstimatorKind::Bdse, 32000, QueryKind::Inverse, 0.5).mse;
  const double g = rep.find(EstimatorKind::Global, 32000, QueryKind::Inverse, 0.5).mse;
  const double r = b / g;
  report(8, "bdse-superefficiency", r >= 0.24 && r <= 0.56,
         fmt("MSE bdse/global = %.4g/%.4g = %.3f (target 0.397) %.0fs", b, g, r, seconds_since(t0)));
}

// ---------------------------------------------------------------- 9

void superefficiency_reversal() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig s;  // defaults: N=32000, R=500, m in {4,16,64}
  const auto rep = superefficiency_sweep(s);
  const double w4 = rep.worst("bdse", 4), w16 = rep.worst("bdse", 16), w64 = rep.worst("bdse", 64);
  const double pw = rep.worst("pooled"), pf = rep.fixed("pooled");
  const bool ok = w4 < w16 && w16 < w64 && pw <= 2.0 * pf;
  report(9, "superefficiency-reversal", ok,
         fmt("bdse worst N^{2/3}MSE m=4/16/64: %.4f %.4f %.4f; pooled worst %.4f fixed %.4f (x%.2f)", w4, w16, w64, pw,
             pf, pw / pf) +
             fmt(" %.0fs", seconds_since(t0)));
}

// ---------------------------------------------------------------- 10

void sampler_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  ChernoffConfig coarse;
  coarse.samples = 100000;
  coarse.seed = 10;
  ChernoffConfig fine = coarse;
  fine.step = coarse.step / 2;
  fine.seed = 11;
  const auto zc = sample_chernoff(coarse);
  const auto zf = sample_chernoff(fine);
  const double sc = sample_sd(zc), sf = sample_sd(zf);
  const double rel = std::abs(sf - sc) / sf;

  ChernoffConfig sc_cfg;
  sc_cfg.samples = 100000;
  sc_cfg.seed = 12;
  const auto s1 = scaled_argmax_check(2.0, 0.5, sc_cfg);
  sc_cfg.seed = 13;
  const auto s2 = scaled_argmax_check(1.0, 3.0, sc_cfg);
  const bool ok = rel <= 0.02 && s1.ks <= 0.02 && s2.ks <= 0.02;
  report(10, "chernoff-sampler", ok,
         fmt("sd h=0.005 %.4f h=0.0025 %.4f (rel %.4f); scaling KS a/b=4: %.4f, a/b=1/3: %.4f", sc, sf, rel, s1.ks,
             s2.ks) +
             fmt(" %.0fs", seconds_since(t0)));
}

// ---------------------------------------------------------------- 11

void tail() {
  ExperimentConfig c;
  c.model = ModelSpec::homogeneous_linear(0.3);
  c.reps = 2000;
  c.seed = 11;
  const auto rep = tail_diagnostic(c, 10000, 0.5);
  const bool ok = rep.monotone && rep.mid_slope >= -4.0 && rep.mid_slope <= -2.0;
  report(11, "tail-diagnostic", ok,
         fmt("mid-range log-log slope %.3f over %g points, monotone=%g (warning only)", rep.mid_slope,
             static_cast<double>(rep.mid_points), rep.monotone ? 1.0 : 0.0),
         true);
}

}  // namespace

int main() {
  oracle_equivalence();
  switch_relations();
  allocation_invariance();
  ledger();
  losslessness();
  rate_boundedness();
  chernoff_limit();
  bdse_superefficiency();
  superefficiency_reversal();
  sampler_consistency();
  tail();
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
