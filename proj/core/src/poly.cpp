#include "falconpack/poly.hpp"

#include <algorithm>
#include <cstring>

namespace falconpack {

namespace {

void check_same_params(const RingPoly& a, const RingPoly& b, const char* op) {
  if (a.coeffs.size() != b.coeffs.size() || a.q_bits != b.q_bits) {
    throw parameter_mismatch(std::string(op) + ": operand (N, q) parameters differ");
  }
}

constexpr size_t kKaratsubaCutoff = 32;

// c += a * b, plain integer polynomial product over Z_2^64 (masked later).
void schoolbook_acc(const uint64_t* a, const uint64_t* b, size_t n, uint64_t* c) {
  for (size_t i = 0; i < n; ++i) {
    const uint64_t ai = a[i];
    if (ai == 0) continue;
    for (size_t j = 0; j < n; ++j) c[i + j] += ai * b[j];
  }
}

// Karatsuba over Z_2^64; writes the (2n-1)-coefficient product into c,
// scratch must hold 4n words.
void karatsuba(const uint64_t* a, const uint64_t* b, size_t n, uint64_t* c, uint64_t* scratch) {
  if (n <= kKaratsubaCutoff || (n & 1) != 0) {
    std::fill(c, c + 2 * n - 1, 0);
    schoolbook_acc(a, b, n, c);
    return;
  }
  const size_t h = n / 2;
  uint64_t* asum = scratch;            // h
  uint64_t* bsum = scratch + h;        // h
  uint64_t* mid = scratch + 2 * h;     // 2h - 1
  uint64_t* next = scratch + 4 * h;

  for (size_t i = 0; i < h; ++i) {
    asum[i] = a[i] + a[h + i];
    bsum[i] = b[i] + b[h + i];
  }

  std::fill(c, c + 2 * n - 1, 0);
  karatsuba(a, b, h, c, next);                  // low in c[0 .. 2h-2]
  karatsuba(a + h, b + h, h, c + 2 * h, next);  // high in c[2h .. 4h-2]
  karatsuba(asum, bsum, h, mid, next);

  // Subtract low and high from mid before touching c; the second loop
  // aliases c[i] for i >= h.
  for (size_t i = 0; i < 2 * h - 1; ++i) mid[i] -= c[i] + c[2 * h + i];
  for (size_t i = 0; i < 2 * h - 1; ++i) c[h + i] += mid[i];
}

}  // namespace

bool RingPoly::is_zero() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](uint64_t v) { return v == 0; });
}

RingPoly poly_add(const RingPoly& a, const RingPoly& b) {
  check_same_params(a, b, "poly_add");
  RingPoly out = a;
  const uint64_t m = a.q_mask();
  for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] = (a.coeffs[i] + b.coeffs[i]) & m;
  return out;
}

RingPoly poly_sub(const RingPoly& a, const RingPoly& b) {
  check_same_params(a, b, "poly_sub");
  RingPoly out = a;
  const uint64_t m = a.q_mask();
  for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] = (a.coeffs[i] - b.coeffs[i]) & m;
  return out;
}

RingPoly poly_negate(const RingPoly& a) {
  RingPoly out = a;
  const uint64_t m = a.q_mask();
  for (auto& v : out.coeffs) v = (0 - v) & m;
  return out;
}

RingPoly poly_mul_negacyclic_schoolbook(const RingPoly& a, const RingPoly& b) {
  check_same_params(a, b, "poly_mul_negacyclic");
  const size_t n = a.coeffs.size();
  RingPoly out(static_cast<int64_t>(n), a.q_bits);
  const uint64_t m = a.q_mask();
  for (size_t i = 0; i < n; ++i) {
    const uint64_t ai = a.coeffs[i];
    if (ai == 0) continue;
    for (size_t j = 0; j < n; ++j) {
      const uint64_t prod = ai * b.coeffs[j];
      const size_t k = i + j;
      if (k < n) {
        out.coeffs[k] += prod;
      } else {
        out.coeffs[k - n] -= prod;
      }
    }
  }
  for (auto& v : out.coeffs) v &= m;
  return out;
}

RingPoly poly_mul_negacyclic(const RingPoly& a, const RingPoly& b) {
  check_same_params(a, b, "poly_mul_negacyclic");
  const size_t n = a.coeffs.size();
  if (n <= kKaratsubaCutoff) return poly_mul_negacyclic_schoolbook(a, b);

  std::vector<uint64_t> full(2 * n - 1, 0);
  std::vector<uint64_t> scratch(4 * n, 0);
  karatsuba(a.coeffs.data(), b.coeffs.data(), n, full.data(), scratch.data());

  RingPoly out(static_cast<int64_t>(n), a.q_bits);
  const uint64_t m = a.q_mask();
  for (size_t k = 0; k < n; ++k) out.coeffs[k] = full[k];
  for (size_t k = n; k < 2 * n - 1; ++k) out.coeffs[k - n] -= full[k];
  for (auto& v : out.coeffs) v &= m;
  return out;
}

std::vector<uint8_t> poly_to_bytes(const RingPoly& p) {
  std::vector<uint8_t> out;
  out.reserve(16 + 8 * p.coeffs.size());
  auto put_u64 = [&out](uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  };
  put_u64(static_cast<uint64_t>(p.degree_n()));
  put_u64(p.q_bits);
  for (uint64_t v : p.coeffs) put_u64(v);
  return out;
}

RingPoly poly_from_bytes(const std::vector<uint8_t>& bytes) {
  size_t pos = 0;
  auto get_u64 = [&bytes, &pos]() {
    if (pos + 8 > bytes.size()) throw io_error("poly_from_bytes: truncated input");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  };
  const uint64_t n = get_u64();
  const uint64_t q_bits = get_u64();
  if (q_bits < 2 || q_bits > 64) throw io_error("poly_from_bytes: bad q_bits");
  RingPoly p(static_cast<int64_t>(n), static_cast<uint32_t>(q_bits));
  for (auto& v : p.coeffs) v = get_u64();
  if (pos != bytes.size()) throw io_error("poly_from_bytes: trailing bytes");
  const uint64_t m = p.q_mask();
  for (uint64_t v : p.coeffs) {
    if ((v & ~m) != 0) throw io_error("poly_from_bytes: coefficient exceeds modulus");
  }
  return p;
}

std::vector<uint8_t> pack_bits(const std::vector<uint64_t>& values, uint32_t bits) {
  if (bits == 0 || bits > 64) throw io_error("pack_bits: bits out of range");
  std::vector<uint8_t> out(packed_size_bytes(values.size(), bits), 0);
  size_t bitpos = 0;
  for (uint64_t v : values) {
    for (uint32_t b = 0; b < bits; ++b) {
      if ((v >> b) & 1) out[bitpos >> 3] |= static_cast<uint8_t>(1u << (bitpos & 7));
      ++bitpos;
    }
  }
  return out;
}

std::vector<uint64_t> unpack_bits(const uint8_t* data, size_t size_bytes, size_t count,
                                  uint32_t bits) {
  if (bits == 0 || bits > 64) throw io_error("unpack_bits: bits out of range");
  if (size_bytes < packed_size_bytes(count, bits)) throw io_error("unpack_bits: input too short");
  std::vector<uint64_t> out(count, 0);
  size_t bitpos = 0;
  for (size_t i = 0; i < count; ++i) {
    uint64_t v = 0;
    for (uint32_t b = 0; b < bits; ++b) {
      if ((data[bitpos >> 3] >> (bitpos & 7)) & 1) v |= uint64_t{1} << b;
      ++bitpos;
    }
    out[i] = v;
  }
  return out;
}

}  // namespace falconpack
