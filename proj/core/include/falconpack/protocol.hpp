#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "falconpack/packing.hpp"
#include "falconpack/rlwe.hpp"
#include "falconpack/tensor.hpp"
#include "falconpack/tiling.hpp"

namespace falconpack {

enum class Party { client, server };
enum class Backend { ideal, rlwe };

std::string to_string(Backend b);
std::optional<Backend> backend_from_string(const std::string& name);

// One party's additive share of a tensor over Z_{2^l}.
struct Share {
  Party party = Party::client;
  Tensor value;
};

// Uniform client share; the server share completes the sum mod 2^l.
std::pair<Share, Share> share_tensor(const Tensor& x, std::mt19937_64& rng);
Tensor reconstruct(const Share& a, const Share& b);

// In-memory byte pipe carrying framed messages:
// 4-byte little-endian length, 1 type byte, payload.
class ByteChannel {
 public:
  void send(uint8_t type, const std::vector<uint8_t>& payload);
  std::pair<uint8_t, std::vector<uint8_t>> recv();
  bool empty() const { return queue_.empty(); }
  uint64_t total_bytes() const { return total_bytes_; }
  uint64_t payload_bytes() const { return payload_bytes_; }

 private:
  std::deque<std::vector<uint8_t>> queue_;
  uint64_t total_bytes_ = 0;
  uint64_t payload_bytes_ = 0;
};

constexpr uint8_t kMsgInputCt = 0x01;
constexpr uint8_t kMsgOutputCt = 0x02;

struct Transcript {
  uint64_t seed = 0;
  Backend backend = Backend::rlwe;
  uint64_t client_to_server_bytes = 0;  // framed
  uint64_t server_to_client_bytes = 0;
  uint64_t input_ct_bytes = 0;   // ciphertext payloads only
  uint64_t output_ct_bytes = 0;
  int64_t input_ciphertexts = 0;
  int64_t output_ciphertexts = 0;
  int64_t hom_mult_count = 0;
  int64_t hom_add_count = 0;

  std::string to_json() const;
};

struct SecureConvResult {
  Share y_client;
  Share y_server;
  Transcript transcript;
};

// Two-party depthwise convolution: the client contributes an encrypted input
// share, the server adds its own share, multiplies by the packed weights,
// re-masks every output coefficient with fresh randomness R, and keeps
// R mod 2^l as its output share. Both state machines run in-process over
// ByteChannels; everything is deterministic in `seed`.
SecureConvResult secure_dwconv(const Share& x_client, const Share& x_server, const Tensor& w,
                               const ConvDims& dims, const HeParams& params, Backend backend,
                               uint64_t seed, std::optional<TileChoice> tile = std::nullopt);

}  // namespace falconpack
