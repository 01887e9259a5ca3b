#pragma once

#include <cstdint>
#include <vector>

namespace isodist {

/// Exact accumulator for sums of doubles.
///
/// Every finite double is an integer multiple of 2^-1074, so the running sum is
/// kept as a wide integer in that unit (32-bit chunks held in int64 slots with
/// lazy carries). Addition and merging are exact and therefore associative and
/// commutative; value() rounds the exact total to nearest-even exactly once.
class ExactSum {
 public:
  ExactSum() = default;

  void add(double x);
  void merge(const ExactSum& other);

  /// Correctly rounded value of the exact sum.
  double value() const;
  bool is_zero() const;

  ExactSum& operator+=(double x) {
    add(x);
    return *this;
  }

 private:
  void normalize();
  void ensure_window(std::int32_t first, std::int32_t last);

  std::int32_t lo_ = 0;                // absolute index of chunks_[0]
  std::vector<std::int64_t> chunks_;   // chunk i weighs 2^(32*(lo_+i) - 1074)
  std::uint32_t pending_ = 0;          // additions since the last carry pass
};

}  // namespace isodist
