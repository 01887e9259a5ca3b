#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "isodist/exact_sum.hpp"
#include "isodist/models.hpp"

namespace isodist {

enum class AllocationPolicy { Contiguous, RoundRobin, RandomUniform, ByPopulation };

std::string to_string(AllocationPolicy p);
AllocationPolicy parse_policy(const std::string& s);

/// Assignment of observations to servers. Indices are 0-based internally;
/// exports (CSV, python) use 1..L.
struct Allocation {
  std::vector<std::uint32_t> server_of;
  std::size_t servers = 1;
  AllocationPolicy policy = AllocationPolicy::Contiguous;
  std::uint64_t seed = 0;

  std::vector<std::size_t> shard_sizes() const;
  /// Observation indices per server, ascending.
  std::vector<std::vector<std::size_t>> shards() const;
};

/// Contiguous: blocks of max(1, N/L) with the remainder on the last server.
/// ByPopulation: server = pop mod L (needs `pops`).
Allocation allocate(std::size_t n, std::size_t servers, AllocationPolicy policy, std::uint64_t seed,
                    std::span<const std::uint32_t> pops = {});

/// k in 1..K with x in ((k-1)/K, k/K], decided exactly; x = 0 goes to bin 1.
std::size_t bin_index(double x, std::size_t k);

/// Scalars moved between servers, per phase and per server.
class CommLedger {
 public:
  enum class Phase { Summaries = 0, GlobalTransfer = 1, BdseTransfer = 2 };
  static constexpr std::size_t kPhases = 3;

  void record(Phase phase, std::size_t server, std::uint64_t scalars);
  void count_query(Phase phase) { ++queries_[static_cast<std::size_t>(phase)]; }
  std::uint64_t total(Phase phase) const;
  std::uint64_t server_total(Phase phase, std::size_t server) const;
  std::uint64_t queries(Phase phase) const { return queries_[static_cast<std::size_t>(phase)]; }
  void merge(const CommLedger& other);

  nlohmann::json to_json() const;
  static CommLedger from_json(const nlohmann::json& j);
  static const char* phase_name(Phase p);

 private:
  std::array<std::vector<std::uint64_t>, kPhases> per_server_;
  std::array<std::uint64_t, kPhases> queries_{};
};

/// Per-server bin sums T (exact) and counts C, row-major L x K.
struct BinSummaryMatrix {
  std::size_t servers = 0;
  std::size_t bins = 0;
  std::vector<ExactSum> t;
  std::vector<std::int64_t> c;

  BinSummaryMatrix() = default;
  BinSummaryMatrix(std::size_t l, std::size_t k) : servers(l), bins(k), t(l * k), c(l * k, 0) {}

  ExactSum& t_at(std::size_t l, std::size_t k) { return t[l * bins + k]; }
  const ExactSum& t_at(std::size_t l, std::size_t k) const { return t[l * bins + k]; }
  std::int64_t& c_at(std::size_t l, std::size_t k) { return c[l * bins + k]; }
  std::int64_t c_at(std::size_t l, std::size_t k) const { return c[l * bins + k]; }
  std::int64_t total_count() const;

  /// Columns l,k,T,C (1-based l and k); T written with 17 significant digits.
  void write_csv(std::ostream& os) const;
  static BinSummaryMatrix read_csv(std::istream& is);
};

/// Per-server T_{lk}, C_{lk}. Records 2K scalars per server in the ledger.
BinSummaryMatrix local_summaries(const Dataset& data, const Allocation& alloc, std::size_t k,
                                 CommLedger* ledger = nullptr);

/// Central merge: w_k = C_k / N, ybar_k = T_k / C_k (NaN where C_k = 0).
struct Regressogram {
  std::size_t bins = 0;
  std::size_t n = 0;
  std::vector<double> w;
  std::vector<double> ybar;
  std::vector<std::int64_t> counts;
  std::vector<double> t;          // merged T_k, correctly rounded
  std::vector<double> cum_t;      // K+1 exact prefix sums of T, correctly rounded
  std::vector<double> cum_count;  // K+1 prefix sums of C

  bool nonempty(std::size_t k) const { return counts[k] > 0; }
  double grid(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(bins); }
  bool operator==(const Regressogram& o) const;
};

Regressogram merge_summaries(const BinSummaryMatrix& bins, std::size_t n);

/// Global strategy: every server ships its raw pairs (2 scalars per point).
void record_global_transfer(CommLedger& ledger, const Allocation& alloc);

}  // namespace isodist
