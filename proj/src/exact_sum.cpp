#include "isodist/exact_sum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace isodist {

namespace {

using u128 = unsigned __int128;

constexpr std::uint32_t kCarryInterval = 1u << 30;
constexpr std::int64_t kChunkMask = 0xffffffffLL;

int bit_length(u128 v) {
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  if (hi != 0) return 128 - std::countl_zero(hi);
  return 64 - std::countl_zero(static_cast<std::uint64_t>(v));
}

}  // namespace

void ExactSum::ensure_window(std::int32_t first, std::int32_t last) {
  if (chunks_.empty()) {
    lo_ = first;
    chunks_.assign(static_cast<std::size_t>(last - first + 1), 0);
    return;
  }
  if (first < lo_) {
    chunks_.insert(chunks_.begin(), static_cast<std::size_t>(lo_ - first), 0);
    lo_ = first;
  }
  const auto hi = lo_ + static_cast<std::int32_t>(chunks_.size()) - 1;
  if (last > hi) chunks_.resize(chunks_.size() + static_cast<std::size_t>(last - hi), 0);
}

void ExactSum::add(double x) {
  if (x == 0.0) return;
  if (!std::isfinite(x)) throw std::domain_error("ExactSum: non-finite summand");

  int exp2 = 0;
  const double frac = std::frexp(x, &exp2);
  auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
  int e = exp2 - 53;
  if (e < -1074) {
    // subnormal: the dropped low bits are zero
    mant >>= (-1074 - e);
    e = -1074;
  }
  const int pos = e + 1074;
  const std::int32_t idx = pos / 32;
  const int off = pos % 32;
  const bool neg = mant < 0;
  const u128 mag = static_cast<u128>(static_cast<std::uint64_t>(neg ? -mant : mant)) << off;

  ensure_window(idx, idx + 2);
  auto* c = chunks_.data() + (idx - lo_);
  for (int j = 0; j < 3; ++j) {
    const auto part = static_cast<std::int64_t>(static_cast<std::uint64_t>(mag >> (32 * j)) & 0xffffffffULL);
    c[j] += neg ? -part : part;
  }
  if (++pending_ >= kCarryInterval) normalize();
}

void ExactSum::merge(const ExactSum& other) {
  if (other.chunks_.empty()) return;
  ExactSum o = other;
  o.normalize();
  normalize();
  const auto ohi = o.lo_ + static_cast<std::int32_t>(o.chunks_.size()) - 1;
  ensure_window(o.lo_, ohi);
  for (std::size_t i = 0; i < o.chunks_.size(); ++i)
    chunks_[static_cast<std::size_t>(o.lo_ - lo_) + i] += o.chunks_[i];
  normalize();
}

void ExactSum::normalize() {
  pending_ = 0;
  if (chunks_.empty()) return;
  for (std::size_t i = 0; i + 1 < chunks_.size(); ++i) {
    const std::int64_t carry = chunks_[i] >> 32;  // floor division
    chunks_[i] &= kChunkMask;
    chunks_[i + 1] += carry;
  }
  // Top chunk keeps the sign; widen until it fits in a signed 32-bit range.
  while (chunks_.back() >= (1LL << 31) || chunks_.back() < -(1LL << 31)) {
    const std::int64_t carry = chunks_.back() >> 32;
    chunks_.back() &= kChunkMask;
    chunks_.push_back(carry);
  }
}

bool ExactSum::is_zero() const {
  ExactSum c = *this;
  c.normalize();
  return std::all_of(c.chunks_.begin(), c.chunks_.end(), [](std::int64_t v) { return v == 0; });
}

double ExactSum::value() const {
  ExactSum c = *this;
  c.normalize();
  if (c.chunks_.empty()) return 0.0;

  const bool negative = c.chunks_.back() < 0;
  if (negative) {
    for (auto& v : c.chunks_) v = -v;
    c.normalize();
  }

  auto h = static_cast<std::int64_t>(c.chunks_.size()) - 1;
  while (h >= 0 && c.chunks_[static_cast<std::size_t>(h)] == 0) --h;
  if (h < 0) return 0.0;

  const std::int64_t base = std::max<std::int64_t>(h - 2, 0);
  u128 window = 0;
  for (auto j = h; j >= base; --j)
    window = (window << 32) | static_cast<u128>(static_cast<std::uint32_t>(c.chunks_[static_cast<std::size_t>(j)]));
  bool sticky = false;
  for (std::int64_t j = 0; j < base; ++j) sticky = sticky || c.chunks_[static_cast<std::size_t>(j)] != 0;

  const int lsb = 32 * static_cast<int>(c.lo_ + base) - 1074;
  const int nbits = bit_length(window);
  double out = 0.0;
  if (nbits <= 53) {
    // only reachable with base == 0, hence no sticky bits: exact
    out = std::ldexp(static_cast<double>(static_cast<std::uint64_t>(window)), lsb);
  } else {
    const int shift = nbits - 53;
    auto q = static_cast<std::uint64_t>(window >> shift);
    const u128 rem = window & ((static_cast<u128>(1) << shift) - 1);
    const u128 half = static_cast<u128>(1) << (shift - 1);
    if (rem > half || (rem == half && (sticky || (q & 1u)))) ++q;
    out = std::ldexp(static_cast<double>(q), lsb + shift);
  }
  return negative ? -out : out;
}

}  // namespace isodist
