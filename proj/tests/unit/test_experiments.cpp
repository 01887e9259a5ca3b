#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "isodist/experiments.hpp"

using namespace isodist;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.model = ModelSpec::homogeneous_linear(0.3);
  c.estimators = {EstimatorKind::Pooled, EstimatorKind::Global, EstimatorKind::Bdse};
  c.ns = {400};
  c.servers = 4;
  c.ts = {0.5};
  c.as = {0.5};
  c.reps = 30;
  c.seed = 11;
  c.jobs = 1;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("reruns reproduce every number, for any number of workers") {
    auto c = small_config();
    const auto a = mc_risk(c);
    const auto b = mc_risk(c);
    c.jobs = 3;
    const auto p = mc_risk(c);
    std::ostringstream sa, sb, sp;
    a.write_csv(sa);
    b.write_csv(sb);
    p.write_csv(sp);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() == sp.str());
    CHECK(a.to_json() == p.to_json());
  }

  TEST_CASE("all estimators see the same data within a replication") {
    // one server: BDSE is the global estimator
    auto c = small_config();
    c.servers = 1;
    const auto tab = simulate_errors(c, 400);
    std::size_t g = 0, b = 0;
    for (std::size_t i = 0; i < tab.columns.size(); ++i) {
      if (tab.columns[i].estimator == EstimatorKind::Global && tab.columns[i].kind == QueryKind::Inverse) g = i;
      if (tab.columns[i].estimator == EstimatorKind::Bdse && tab.columns[i].kind == QueryKind::Inverse) b = i;
    }
    for (const auto& row : tab.errors) CHECK(row[g] == row[b]);
  }

  TEST_CASE("ledger totals per replication") {
    auto c = small_config();
    c.reps = 5;
    c.k = 20;
    const auto rep = mc_risk(c);
    CHECK(rep.ledger.total(CommLedger::Phase::Summaries) == 5 * 2 * 4 * 20);
    CHECK(rep.ledger.total(CommLedger::Phase::GlobalTransfer) == 5 * 2 * 400);
    // two BDSE queries (t and a) per replication, one scalar per server each
    CHECK(rep.ledger.total(CommLedger::Phase::BdseTransfer) == 5 * 2 * 4);
  }

  TEST_CASE("noiseless model: pooled risk is tiny") {
    auto c = small_config();
    c.model = ModelSpec::homogeneous_linear(0.0);
    c.estimators = {EstimatorKind::Pooled};
    c.ns = {2000};
    c.ts = {0.3, 0.5};
    c.as = {};
    const auto rep = mc_risk(c);
    const double K = static_cast<double>(default_bin_count(2000));
    for (const auto& r : rep.rows) CHECK(r.mse <= (2.0 / K) * (2.0 / K));
  }

  TEST_CASE("standard errors shrink like 1/sqrt(R)") {
    auto c = small_config();
    c.estimators = {EstimatorKind::Pooled};
    c.ns = {100};
    c.ts = {0.5};
    c.as = {};
    c.reps = 4000;
    const auto a = mc_risk(c).rows.at(0);
    c.reps = 8000;
    const auto b = mc_risk(c).rows.at(0);
    CHECK(a.se / b.se == doctest::Approx(std::sqrt(2.0)).epsilon(0.10));
  }

  TEST_CASE("failed replications are counted and excluded") {
    auto c = small_config();
    c.model.pops = {PopulationSpec{Density::uniform(), 0.3, NoiseKind::Gaussian, 0.998},
                    PopulationSpec{Density::uniform(), 0.3, NoiseKind::Gaussian, 0.002}};
    c.ns = {100};  // the second population gets no observations
    c.reps = 4;
    const auto tab = simulate_errors(c, 100);
    CHECK(tab.failures.size() == 4);
    const auto rep = mc_risk(c);
    CHECK(rep.rows.at(0).failures == 4);
    CHECK(rep.rows.at(0).reps == 0);
  }

  TEST_CASE("config JSON round trip and validation") {
    auto c = small_config();
    c.ns = {1000, 8000};
    c.policy = AllocationPolicy::RandomUniform;
    const auto back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    auto bad = c;
    bad.reps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"estimators", {"median"}}}), std::invalid_argument);
    CHECK(c.bins_for(1000) == 70);
  }

  TEST_CASE("default level grid") {
    const auto g = default_a_grid(MonotoneFn::linear(1.0, -1.0));
    REQUIRE(g.size() == 41);
    CHECK(g.front() == doctest::Approx(0.05));
    CHECK(g.back() == doctest::Approx(0.95));
    CHECK(g[20] == doctest::Approx(0.5));
  }

  TEST_CASE("limit law report standardizes with the limit scales") {
    auto c = small_config();
    c.model = ModelSpec::homogeneous_linear(0.5);
    c.reps = 40;
    ChernoffConfig ref;
    ref.samples = 2000;
    const auto rep = limit_law_check(c, 2000, 0.5, ref);
    CHECK(rep.rows.size() == 4);  // pooled and global, direct and inverse; BDSE dropped
    for (const auto& r : rep.rows) {
      CHECK(r.scale == doctest::Approx(1.0));
      CHECK(r.standardized.size() == 40);
      CHECK((r.ks >= 0.0 && r.ks <= 1.0));
    }
    CHECK_THROWS_AS(limit_law_check(c, 2000, 0.0, ref), std::invalid_argument);
  }

  TEST_CASE("tail diagnostic") {
    auto c = small_config();
    c.reps = 200;
    const auto rep = tail_diagnostic(c, 1000, 0.5);
    CHECK(rep.x.size() == 40);
    CHECK(rep.monotone);
    for (std::size_t i = 1; i < rep.freq.size(); ++i) CHECK(rep.freq[i] <= rep.freq[i - 1]);
    // beyond every error the frequency is 0
    const auto far = tail_diagnostic(c, 1000, 0.5, {0.01, 2.0});
    CHECK(far.freq.back() == 0.0);
    CHECK(far.reference.front() == doctest::Approx(far.freq.front()));
  }

  TEST_CASE("sweep bookkeeping") {
    SweepConfig s;
    s.n = 2000;
    s.reps = 6;
    s.m_grid = {2, 4};
    s.jobs = 1;
    const auto rep = superefficiency_sweep(s);
    CHECK(rep.a == doctest::Approx(0.6));
    CHECK(rep.fixed_c == doctest::Approx(1.2));
    // c = 1.95 leaves (C3, C4): return slope 2.4 - 1.95 = 0.45
    CHECK(rep.notes.size() == 1);
    CHECK(rep.feasible_c.size() == 9);  // 8 grid values plus the unperturbed slope 1.2
    CHECK(rep.cells.size() == rep.feasible_c.size() * 4);
    CHECK(rep.worst("bdse", 4) >= rep.fixed("bdse", 4));
    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str().rfind("estimator,N,m,K,target,value,se\n", 0) == 0);
    const auto back = SweepConfig::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
  }
}
