#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace isodist {

/// Bin means y_k with weights w_k >= 0. y_k is ignored wherever w_k == 0.
struct WeightedSeries {
  std::vector<double> y;
  std::vector<double> w;

  std::size_t size() const { return y.size(); }
  /// Throws std::invalid_argument unless sizes match, K >= 1, weights are
  /// finite and nonnegative with at least one positive.
  void validate() const;
};

/// Maximal run of positions sharing one fitted value; [begin, end) in 0-based
/// position indices.
struct Block {
  std::size_t begin = 0;
  std::size_t end = 0;
  double value = 0.0;
  double weight = 0.0;
};

struct AntitonicFit {
  std::vector<double> fitted;
  std::vector<Block> blocks;  // partition of [0, K); values strictly decreasing
};

/// Weighted nonincreasing least squares by pool-adjacent-violators.
///
/// Zero-weight positions carry no cost. They take the left slope of the least
/// concave majorant at their abscissa: the value of the block to their left, or
/// of the first block for leading zero-weight positions.
AntitonicFit pava_antitonic(const WeightedSeries& series);

/// Same fit from numerator/denominator sums per position (e.g. T_k, C_k); the
/// value of a block is (sum num)/(sum den) over it.
AntitonicFit pava_antitonic_sums(std::span<const double> num, std::span<const double> den);

/// Core solver on prefix sums (size K+1, both starting at 0). Block values are
/// computed as (num_prefix[e]-num_prefix[b]) / (den_prefix[e]-den_prefix[b]).
AntitonicFit pava_antitonic_prefix(std::span<const double> num_prefix, std::span<const double> den_prefix);

/// Points (u_j, v_j), j = 0..K, u nondecreasing, starting at the origin.
struct CusumDiagram {
  std::vector<double> u;
  std::vector<double> v;

  static CusumDiagram from_series(const WeightedSeries& series);
  void validate() const;
};

/// Left-hand slope of the least concave majorant at u_1..u_K. Where u_j equals
/// u_{j-1}, the slope is that of the majorant segment ending at u_j (or the
/// first segment when u_j = 0).
std::vector<double> lcm_left_slopes(const CusumDiagram& diagram);

/// Exhaustive search over contiguous partitions of the positive-weight
/// positions; test oracle. Throws std::invalid_argument for K > 14.
AntitonicFit brute_force_antitonic(const WeightedSeries& series);

inline constexpr std::size_t kBruteForceMaxSize = 14;

}  // namespace isodist
