#include "falconpack/rlwe.hpp"

#include <bit>

namespace falconpack {

namespace {

constexpr unsigned __int128 kBudgetLimit = (static_cast<unsigned __int128>(1)) << 126;

uint64_t ternary_coeff(std::mt19937_64& rng, uint64_t q_mask) {
  for (;;) {
    const uint64_t v = rng() & 3;
    if (v == 0) return 0;
    if (v == 1) return 1;
    if (v == 2) return q_mask;  // -1 mod q
  }
}

// Centered binomial with parameter eta = 4, lifted into Z_q.
uint64_t cbd_coeff(std::mt19937_64& rng, uint64_t q_mask) {
  const uint64_t bits = rng();
  const int pos = std::popcount(bits & 0xFull);
  const int neg = std::popcount((bits >> 4) & 0xFull);
  return static_cast<uint64_t>(pos - neg) & q_mask;
}

unsigned __int128 saturating_mul(unsigned __int128 a, unsigned __int128 b) {
  if (a == 0 || b == 0) return 0;
  if (a > kBudgetLimit / b) return kBudgetLimit;
  return a * b;
}

void check_params(const RlweCiphertext& ct) {
  if (ct.b.coeffs.size() != ct.a.coeffs.size() || ct.b.q_bits != ct.a.q_bits) {
    throw parameter_mismatch("rlwe: ciphertext component parameters differ");
  }
}

}  // namespace

unsigned __int128 noise_budget_limit() { return kBudgetLimit; }

uint64_t sample_mod_q(std::mt19937_64& rng, uint64_t q_mask) { return rng() & q_mask; }

RlweKey rlwe_keygen(const HeParams& params, std::mt19937_64& rng) {
  params.validate();
  RlweKey key;
  key.params = params;
  key.secret = RingPoly(params.n, params.q_bits);
  const uint64_t qm = params.q_mask();
  for (auto& c : key.secret.coeffs) c = ternary_coeff(rng, qm);
  return key;
}

RlweCiphertext rlwe_encrypt(const RlweKey& key, const RingPoly& m, std::mt19937_64& rng) {
  if (m.degree_n() != key.params.n || m.q_bits != key.params.q_bits) {
    throw parameter_mismatch("rlwe_encrypt: message parameters differ from key");
  }
  const uint64_t qm = key.params.q_mask();
  const uint64_t pm = key.params.p_mask();

  RlweCiphertext ct;
  ct.l = key.params.l;
  ct.a = RingPoly(key.params.n, key.params.q_bits);
  for (auto& c : ct.a.coeffs) c = sample_mod_q(rng, qm);

  ct.b = poly_mul_negacyclic(ct.a, key.secret);
  for (size_t i = 0; i < ct.b.coeffs.size(); ++i) {
    const uint64_t e = cbd_coeff(rng, qm);
    const uint64_t lifted_noise = (e << key.params.l) & qm;
    ct.b.coeffs[i] = (ct.b.coeffs[i] + lifted_noise + (m.coeffs[i] & pm)) & qm;
  }
  ct.noise_bound = kNoiseEta;
  return ct;
}

RingPoly rlwe_decrypt(const RlweKey& key, const RlweCiphertext& ct) {
  check_params(ct);
  if (ct.b.degree_n() != key.params.n || ct.b.q_bits != key.params.q_bits) {
    throw parameter_mismatch("rlwe_decrypt: ciphertext parameters differ from key");
  }
  if (ct.noise_bound >= kBudgetLimit) {
    throw noise_budget_error("rlwe_decrypt: tracked noise bound exceeds the certified budget");
  }
  const RingPoly as = poly_mul_negacyclic(ct.a, key.secret);
  RingPoly m = poly_sub(ct.b, as);
  const uint64_t pm = key.params.p_mask();
  for (auto& c : m.coeffs) c &= pm;
  return m;
}

void hom_add_plain(RlweCiphertext& ct, const RingPoly& m2) {
  check_params(ct);
  ct.b = poly_add(ct.b, m2);
}

void hom_mul_plain(RlweCiphertext& ct, const RingPoly& w) {
  check_params(ct);
  ct.b = poly_mul_negacyclic(ct.b, w);
  ct.a = poly_mul_negacyclic(ct.a, w);
  unsigned __int128 weight_l1 = 0;
  for (uint64_t c : w.coeffs) {
    weight_l1 += c;
    if (weight_l1 >= kBudgetLimit) {
      weight_l1 = kBudgetLimit;
      break;
    }
  }
  ct.noise_bound = saturating_mul(ct.noise_bound, weight_l1);
}

LweCiphertext extract_lwe(const RlweCiphertext& ct, int64_t index) {
  check_params(ct);
  const int64_t n = ct.b.degree_n();
  if (index < 0 || index >= n) throw dimension_error("extract_lwe: index out of range");
  const uint64_t qm = ct.b.q_mask();

  LweCiphertext lwe;
  lwe.q_bits = ct.b.q_bits;
  lwe.l = ct.l;
  lwe.noise_bound = ct.noise_bound;
  lwe.b = ct.b.coeffs[static_cast<size_t>(index)];
  lwe.a.resize(static_cast<size_t>(n));
  // (a*s)[i] = sum_{t <= i} a[i-t] s[t] - sum_{t > i} a[N+i-t] s[t]
  for (int64_t t = 0; t < n; ++t) {
    if (t <= index) {
      lwe.a[static_cast<size_t>(t)] = ct.a.coeffs[static_cast<size_t>(index - t)];
    } else {
      lwe.a[static_cast<size_t>(t)] = (0 - ct.a.coeffs[static_cast<size_t>(n + index - t)]) & qm;
    }
  }
  return lwe;
}

void lwe_sub_scalar(LweCiphertext& ct, uint64_t r) {
  const uint64_t qm = ct.q_bits >= 64 ? ~uint64_t{0} : ((uint64_t{1} << ct.q_bits) - 1);
  ct.b = (ct.b - r) & qm;
}

uint64_t lwe_decrypt(const RlweKey& key, const LweCiphertext& ct) {
  if (static_cast<int64_t>(ct.a.size()) != key.params.n || ct.q_bits != key.params.q_bits) {
    throw parameter_mismatch("lwe_decrypt: ciphertext parameters differ from key");
  }
  if (ct.noise_bound >= kBudgetLimit) {
    throw noise_budget_error("lwe_decrypt: tracked noise bound exceeds the certified budget");
  }
  const uint64_t qm = key.params.q_mask();
  uint64_t acc = 0;
  for (size_t t = 0; t < ct.a.size(); ++t) acc += ct.a[t] * key.secret.coeffs[t];
  return (ct.b - acc) & qm & key.params.p_mask();
}

}  // namespace falconpack
