#include "isodist/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "isodist/rng.hpp"
#include "isodist/step_function.hpp"

namespace isodist {

std::string to_string(AllocationPolicy p) {
  switch (p) {
    case AllocationPolicy::Contiguous: return "contiguous";
    case AllocationPolicy::RoundRobin: return "roundrobin";
    case AllocationPolicy::RandomUniform: return "random";
    case AllocationPolicy::ByPopulation: return "bypop";
  }
  return "?";
}

AllocationPolicy parse_policy(const std::string& s) {
  if (s == "contiguous") return AllocationPolicy::Contiguous;
  if (s == "roundrobin") return AllocationPolicy::RoundRobin;
  if (s == "random") return AllocationPolicy::RandomUniform;
  if (s == "bypop") return AllocationPolicy::ByPopulation;
  throw std::invalid_argument("unknown allocation policy '" + s + "'");
}

std::vector<std::size_t> Allocation::shard_sizes() const {
  std::vector<std::size_t> sizes(servers, 0);
  for (auto s : server_of) ++sizes[s];
  return sizes;
}

std::vector<std::vector<std::size_t>> Allocation::shards() const {
  std::vector<std::vector<std::size_t>> out(servers);
  for (std::size_t i = 0; i < server_of.size(); ++i) out[server_of[i]].push_back(i);
  return out;
}

Allocation allocate(std::size_t n, std::size_t servers, AllocationPolicy policy, std::uint64_t seed,
                    std::span<const std::uint32_t> pops) {
  if (servers < 1) throw std::invalid_argument("allocate: need L >= 1 servers");
  Allocation a;
  a.servers = servers;
  a.policy = policy;
  a.seed = seed;
  a.server_of.resize(n);
  switch (policy) {
    case AllocationPolicy::Contiguous: {
      const std::size_t block = std::max<std::size_t>(1, n / servers);
      for (std::size_t i = 0; i < n; ++i)
        a.server_of[i] = static_cast<std::uint32_t>(std::min(i / block, servers - 1));
      break;
    }
    case AllocationPolicy::RoundRobin:
      for (std::size_t i = 0; i < n; ++i) a.server_of[i] = static_cast<std::uint32_t>(i % servers);
      break;
    case AllocationPolicy::RandomUniform: {
      Engine eng = make_engine(seed, {0xa110cULL});
      std::uniform_int_distribution<std::size_t> pick(0, servers - 1);
      for (auto& s : a.server_of) s = static_cast<std::uint32_t>(pick(eng));
      break;
    }
    case AllocationPolicy::ByPopulation:
      if (pops.size() != n) throw std::invalid_argument("allocate: bypop needs one population label per point");
      for (std::size_t i = 0; i < n; ++i) a.server_of[i] = static_cast<std::uint32_t>(pops[i] % servers);
      break;
  }
  return a;
}

std::size_t bin_index(double x, std::size_t k) {
  if (k < 1) throw std::invalid_argument("bin_index: K must be >= 1");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("bin_index: x outside [0,1]");
  if (x == 0.0) return 1;
  const auto kk = static_cast<std::int64_t>(k);
  // smallest j with x <= j/K; start from the rounded guess and fix up exactly
  auto j = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(k)));
  j = std::clamp<std::int64_t>(j, 1, kk);
  while (j > 1 && compare_to_fraction(x, j - 1, kk) <= 0) --j;
  while (j < kk && compare_to_fraction(x, j, kk) > 0) ++j;
  return static_cast<std::size_t>(j);
}

// ------------------------------------------------------------------ ledger

void CommLedger::record(Phase phase, std::size_t server, std::uint64_t scalars) {
  auto& v = per_server_[static_cast<std::size_t>(phase)];
  if (v.size() <= server) v.resize(server + 1, 0);
  v[server] += scalars;
}

std::uint64_t CommLedger::total(Phase phase) const {
  std::uint64_t s = 0;
  for (auto v : per_server_[static_cast<std::size_t>(phase)]) s += v;
  return s;
}

std::uint64_t CommLedger::server_total(Phase phase, std::size_t server) const {
  const auto& v = per_server_[static_cast<std::size_t>(phase)];
  return server < v.size() ? v[server] : 0;
}

void CommLedger::merge(const CommLedger& other) {
  for (std::size_t p = 0; p < kPhases; ++p) {
    const auto& src = other.per_server_[p];
    for (std::size_t s = 0; s < src.size(); ++s) record(static_cast<Phase>(p), s, src[s]);
    queries_[p] += other.queries_[p];
  }
}

const char* CommLedger::phase_name(Phase p) {
  switch (p) {
    case Phase::Summaries: return "summaries";
    case Phase::GlobalTransfer: return "global_transfer";
    case Phase::BdseTransfer: return "bdse_transfer";
  }
  return "?";
}

nlohmann::json CommLedger::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t p = 0; p < kPhases; ++p) {
    const auto phase = static_cast<Phase>(p);
    j[phase_name(phase)] = {{"total", total(phase)}, {"per_server", per_server_[p]}, {"queries", queries_[p]}};
  }
  return j;
}

CommLedger CommLedger::from_json(const nlohmann::json& j) {
  CommLedger l;
  for (std::size_t p = 0; p < kPhases; ++p) {
    const auto phase = static_cast<Phase>(p);
    if (!j.contains(phase_name(phase))) continue;
    const auto& e = j.at(phase_name(phase));
    l.per_server_[p] = e.value("per_server", std::vector<std::uint64_t>{});
    l.queries_[p] = e.value("queries", std::uint64_t{0});
    if (e.contains("total") && e.at("total").get<std::uint64_t>() != l.total(phase))
      throw std::invalid_argument(std::string("ledger: inconsistent total for phase ") + phase_name(phase));
  }
  return l;
}

// --------------------------------------------------------------- summaries

std::int64_t BinSummaryMatrix::total_count() const {
  std::int64_t s = 0;
  for (auto v : c) s += v;
  return s;
}

void BinSummaryMatrix::write_csv(std::ostream& os) const {
  os << "l,k,T,C\n";
  char buf[64];
  for (std::size_t l = 0; l < servers; ++l)
    for (std::size_t k = 0; k < bins; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", t_at(l, k).value());
      os << (l + 1) << ',' << (k + 1) << ',' << buf << ',' << c_at(l, k) << '\n';
    }
}

BinSummaryMatrix BinSummaryMatrix::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("l,k,T,C", 0) != 0)
    throw std::invalid_argument("summaries CSV: missing header l,k,T,C");
  struct Row {
    std::size_t l, k;
    double t;
    std::int64_t c;
  };
  std::vector<Row> rows;
  std::size_t L = 0, K = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row r{};
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> r.l >> c1 >> r.k >> c2 >> r.t >> c3 >> r.c) || c1 != ',' || c2 != ',' || c3 != ',' || r.l < 1 ||
        r.k < 1 || r.c < 0)
      throw std::invalid_argument("summaries CSV: bad row '" + line + "'");
    L = std::max(L, r.l);
    K = std::max(K, r.k);
    rows.push_back(r);
  }
  BinSummaryMatrix m(L, K);
  for (const auto& r : rows) {
    m.t_at(r.l - 1, r.k - 1).add(r.t);
    m.c_at(r.l - 1, r.k - 1) += r.c;
  }
  return m;
}

BinSummaryMatrix local_summaries(const Dataset& data, const Allocation& alloc, std::size_t k, CommLedger* ledger) {
  if (alloc.server_of.size() != data.size()) throw std::invalid_argument("local_summaries: allocation does not cover the dataset");
  if (k < 1) throw std::invalid_argument("local_summaries: K must be >= 1");
  BinSummaryMatrix m(alloc.servers, k);
  // each server only touches its own row
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t l = alloc.server_of[i];
    const std::size_t b = bin_index(data.x[i], k) - 1;
    m.t_at(l, b).add(data.y[i]);
    ++m.c_at(l, b);
  }
  if (ledger)
    for (std::size_t l = 0; l < alloc.servers; ++l) ledger->record(CommLedger::Phase::Summaries, l, 2 * k);
  return m;
}

Regressogram merge_summaries(const BinSummaryMatrix& bins, std::size_t n) {
  if (n == 0) throw std::invalid_argument("merge_summaries: N must be >= 1");
  if (bins.total_count() != static_cast<std::int64_t>(n))
    throw std::invalid_argument("merge_summaries: counts do not add up to N");
  const std::size_t K = bins.bins;
  Regressogram r;
  r.bins = K;
  r.n = n;
  r.w.resize(K);
  r.ybar.resize(K);
  r.counts.resize(K);
  r.t.resize(K);
  r.cum_t.assign(K + 1, 0.0);
  r.cum_count.assign(K + 1, 0.0);
  ExactSum running;
  std::int64_t running_c = 0;
  for (std::size_t k = 0; k < K; ++k) {
    ExactSum tk;
    std::int64_t ck = 0;
    for (std::size_t l = 0; l < bins.servers; ++l) {
      tk.merge(bins.t_at(l, k));
      ck += bins.c_at(l, k);
    }
    if (ck == 0 && !tk.is_zero()) throw std::invalid_argument("merge_summaries: nonzero T in an empty bin");
    r.counts[k] = ck;
    r.t[k] = tk.value();
    r.w[k] = static_cast<double>(ck) / static_cast<double>(n);
    r.ybar[k] = ck > 0 ? r.t[k] / static_cast<double>(ck) : std::numeric_limits<double>::quiet_NaN();
    running.merge(tk);
    running_c += ck;
    r.cum_t[k + 1] = running.value();
    r.cum_count[k + 1] = static_cast<double>(running_c);
  }
  return r;
}

bool Regressogram::operator==(const Regressogram& o) const {
  auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::isnan(a[i]) && std::isnan(b[i])) continue;
      if (a[i] != b[i]) return false;
    }
    return true;
  };
  return bins == o.bins && n == o.n && counts == o.counts && same(w, o.w) && same(ybar, o.ybar) && same(t, o.t) &&
         same(cum_t, o.cum_t) && same(cum_count, o.cum_count);
}

void record_global_transfer(CommLedger& ledger, const Allocation& alloc) {
  const auto sizes = alloc.shard_sizes();
  for (std::size_t l = 0; l < sizes.size(); ++l) ledger.record(CommLedger::Phase::GlobalTransfer, l, 2 * sizes[l]);
}

}  // namespace isodist
