#pragma once

#include <cstdint>
#include <vector>

#include "falconpack/errors.hpp"

namespace falconpack {

// Element of Z_q[X]/(X^N + 1) with q = 2^q_bits. Reduction mod q is a mask,
// so all arithmetic below is exact.
struct RingPoly {
  uint32_t q_bits = 59;
  std::vector<uint64_t> coeffs;

  RingPoly() = default;
  RingPoly(int64_t n, uint32_t q_bits_) : q_bits(q_bits_), coeffs(static_cast<size_t>(n), 0) {}

  int64_t degree_n() const { return static_cast<int64_t>(coeffs.size()); }
  uint64_t q_mask() const {
    return q_bits >= 64 ? ~uint64_t{0} : ((uint64_t{1} << q_bits) - 1);
  }
  bool is_zero() const;

  bool operator==(const RingPoly&) const = default;
};

RingPoly poly_add(const RingPoly& a, const RingPoly& b);
RingPoly poly_sub(const RingPoly& a, const RingPoly& b);
RingPoly poly_negate(const RingPoly& a);

// Negacyclic product via Karatsuba over the integer coefficients, folded
// mod (X^N + 1) and masked mod q.
RingPoly poly_mul_negacyclic(const RingPoly& a, const RingPoly& b);

// Quadratic reference multiplier, kept as the independent oracle for the
// optimized path.
RingPoly poly_mul_negacyclic_schoolbook(const RingPoly& a, const RingPoly& b);

// Little-endian u64 serialization with an (N, q_bits) header.
std::vector<uint8_t> poly_to_bytes(const RingPoly& p);
RingPoly poly_from_bytes(const std::vector<uint8_t>& bytes);

// Packs each value into exactly `bits` bits, little-endian bit order.
// The output occupies ceil(count * bits / 8) bytes.
std::vector<uint8_t> pack_bits(const std::vector<uint64_t>& values, uint32_t bits);
std::vector<uint64_t> unpack_bits(const uint8_t* data, size_t size_bytes, size_t count,
                                  uint32_t bits);

inline size_t packed_size_bytes(size_t count, uint32_t bits) {
  return (count * bits + 7) / 8;
}

}  // namespace falconpack
