#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "falconpack/poly.hpp"
#include "falconpack/tensor.hpp"

namespace falconpack {

// Symmetric LPR-style RLWE over Z_q[X]/(X^N + 1) with q = 2^q_bits and the
// plaintext in the low l bits of each coefficient:
//
//   Enc(m) = (b, a),  b = a*s + 2^l * e + m,  s ternary, e centered binomial.
//
// Since 2^l divides q, reducing the phase b - a*s mod 2^l recovers m exactly
// no matter how large the accumulated noise grows; the tracked bound below
// certifies that the 128-bit noise accounting stayed in range. Parameters
// are simulation-grade and carry no security claim.

inline constexpr int kNoiseEta = 4;  // centered binomial parameter, |e| <= 4

struct RlweKey {
  HeParams params;
  RingPoly secret;
};

struct RlweCiphertext {
  RingPoly b;
  RingPoly a;
  uint32_t l = 32;
  unsigned __int128 noise_bound = 0;
};

struct LweCiphertext {
  std::vector<uint64_t> a;
  uint64_t b = 0;
  uint32_t q_bits = 59;
  uint32_t l = 32;
  unsigned __int128 noise_bound = 0;
};

// Largest certified noise magnitude; beyond it decrypt refuses to answer.
unsigned __int128 noise_budget_limit();

RlweKey rlwe_keygen(const HeParams& params, std::mt19937_64& rng);

// m coefficients must already be reduced mod 2^l.
RlweCiphertext rlwe_encrypt(const RlweKey& key, const RingPoly& m, std::mt19937_64& rng);

// Returns the plaintext reduced mod 2^l. Throws noise_budget_error when the
// tracked bound exceeds the certified limit.
RingPoly rlwe_decrypt(const RlweKey& key, const RlweCiphertext& ct);

// ct holds Enc(m); afterwards it holds Enc(m + m2 mod 2^l).
void hom_add_plain(RlweCiphertext& ct, const RingPoly& m2);

// ct holds Enc(m); afterwards it holds Enc(m * w mod (X^N+1, 2^l)).
void hom_mul_plain(RlweCiphertext& ct, const RingPoly& w);

// Pulls the single-coefficient ciphertext at `index` out of a ring
// ciphertext: lwe_decrypt(extract_lwe(Enc(m), i)) = m[i] mod 2^l.
LweCiphertext extract_lwe(const RlweCiphertext& ct, int64_t index);

// Shifts the underlying plaintext by -r mod 2^l (r taken mod q).
void lwe_sub_scalar(LweCiphertext& ct, uint64_t r);

uint64_t lwe_decrypt(const RlweKey& key, const LweCiphertext& ct);

// Uniform draw over Z_q; exact because q is a power of two.
uint64_t sample_mod_q(std::mt19937_64& rng, uint64_t q_mask);

}  // namespace falconpack
