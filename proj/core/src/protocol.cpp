#include "falconpack/protocol.hpp"

#include <algorithm>
#include <cassert>

#include <json.hpp>

namespace falconpack {

std::string to_string(Backend b) { return b == Backend::ideal ? "ideal" : "rlwe"; }

std::optional<Backend> backend_from_string(const std::string& name) {
  if (name == "ideal") return Backend::ideal;
  if (name == "rlwe") return Backend::rlwe;
  return std::nullopt;
}

std::pair<Share, Share> share_tensor(const Tensor& x, std::mt19937_64& rng) {
  Share client{Party::client, Tensor(x.shape, x.bit_width)};
  Share server{Party::server, Tensor(x.shape, x.bit_width)};
  const uint64_t m = x.mask();
  for (size_t i = 0; i < x.data.size(); ++i) {
    client.value.data[i] = rng() & m;
    server.value.data[i] = (x.data[i] - client.value.data[i]) & m;
  }
  return {std::move(client), std::move(server)};
}

Tensor reconstruct(const Share& a, const Share& b) {
  if (a.party == b.party) throw parameter_mismatch("reconstruct: both shares from the same party");
  return tensor_add(a.value, b.value);
}

void ByteChannel::send(uint8_t type, const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> frame;
  frame.reserve(5 + payload.size());
  const uint32_t len = static_cast<uint32_t>(1 + payload.size());
  for (int i = 0; i < 4; ++i) frame.push_back(static_cast<uint8_t>(len >> (8 * i)));
  frame.push_back(type);
  frame.insert(frame.end(), payload.begin(), payload.end());
  total_bytes_ += frame.size();
  payload_bytes_ += payload.size();
  queue_.push_back(std::move(frame));
}

std::pair<uint8_t, std::vector<uint8_t>> ByteChannel::recv() {
  if (queue_.empty()) throw io_error("ByteChannel: recv on empty channel");
  std::vector<uint8_t> frame = std::move(queue_.front());
  queue_.pop_front();
  if (frame.size() < 5) throw io_error("ByteChannel: malformed frame");
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(frame[static_cast<size_t>(i)]) << (8 * i);
  if (len + 4 != frame.size()) throw io_error("ByteChannel: length prefix disagrees with frame");
  const uint8_t type = frame[4];
  return {type, std::vector<uint8_t>(frame.begin() + 5, frame.end())};
}

std::string Transcript::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["backend"] = falconpack::to_string(backend);
  j["client_to_server_bytes"] = client_to_server_bytes;
  j["server_to_client_bytes"] = server_to_client_bytes;
  j["input_ct_bytes"] = input_ct_bytes;
  j["output_ct_bytes"] = output_ct_bytes;
  j["input_ciphertexts"] = input_ciphertexts;
  j["output_ciphertexts"] = output_ciphertexts;
  j["hom_mult_count"] = hom_mult_count;
  j["hom_add_count"] = hom_add_count;
  return j.dump();
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(const std::vector<uint8_t>& in, size_t& pos) {
  if (pos + 4 > in.size()) throw io_error("protocol: truncated message");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

// Visits the output coefficients of one piece in the canonical order both
// parties use on the wire: filters by ascending unit, then row-major output.
template <typename Fn>
void for_each_used(const PackingLayout& layout, const WeightPiece& piece, int64_t real,
                   Fn&& fn) {
  const ConvDims& d = layout.dims;
  const int64_t hw = d.h * d.w;
  const int64_t origin = d.w * (d.r - 1) + d.r - 1;
  for (const auto& f : piece.slots) {
    if (f.unit >= real) continue;
    const int64_t base = (f.slot + f.unit) * hw + origin;
    for (int64_t i = 0; i < d.out_h(); ++i) {
      for (int64_t j = 0; j < d.out_w(); ++j) {
        fn(f.unit, i, j, base + i * d.s * d.w + j * d.s);
      }
    }
  }
}

Tensor slice_block(const Tensor& x, int64_t lo, int64_t count, int64_t padded) {
  Tensor out({padded, x.shape[1], x.shape[2]}, x.bit_width);
  const int64_t plane = x.shape[1] * x.shape[2];
  for (int64_t ch = 0; ch < count; ++ch) {
    std::copy_n(x.data.begin() + (lo + ch) * plane, plane, out.data.begin() + ch * plane);
  }
  return out;
}

struct ClientState {
  const PackingLayout& layout;
  Backend backend;
  std::mt19937_64 rng;
  RlweKey key;  // rlwe backend only
  Transcript* transcript;

  void send_inputs(const Tensor& x_share, ByteChannel& to_server) {
    const ConvDims& d = layout.dims;
    const HeParams& p = layout.params;
    for (int64_t b = 0; b < layout.n_x; ++b) {
      const int64_t real = std::min(layout.units_x, d.c - b * layout.units_x);
      const Tensor block = slice_block(x_share, b * layout.units_x, real, layout.units_x);
      const RingPoly xp = pack_input_dw(block, p);
      std::vector<uint8_t> payload;
      put_u32(payload, static_cast<uint32_t>(b));
      if (backend == Backend::rlwe) {
        const RlweCiphertext ct = rlwe_encrypt(key, xp, rng);
        const auto bb = pack_bits(ct.b.coeffs, p.q_bits);
        const auto ab = pack_bits(ct.a.coeffs, p.q_bits);
        transcript->input_ct_bytes += bb.size() + ab.size();
        payload.insert(payload.end(), bb.begin(), bb.end());
        payload.insert(payload.end(), ab.begin(), ab.end());
      } else {
        const auto bb = pack_bits(xp.coeffs, p.q_bits);
        transcript->input_ct_bytes += bb.size();
        payload.insert(payload.end(), bb.begin(), bb.end());
      }
      to_server.send(kMsgInputCt, payload);
      ++transcript->input_ciphertexts;
    }
  }

  Tensor receive_outputs(ByteChannel& from_server) {
    const ConvDims& d = layout.dims;
    const HeParams& p = layout.params;
    const uint64_t qm = p.q_mask();
    const uint64_t pmask = p.p_mask();
    const size_t poly_bytes = packed_size_bytes(static_cast<size_t>(p.n), p.q_bits);
    Tensor y({d.c, d.out_h(), d.out_w()}, p.l);

    for (int64_t b = 0; b < layout.n_x; ++b) {
      const int64_t real = std::min(layout.units_x, d.c - b * layout.units_x);
      for (size_t t = 0; t < layout.pieces.size(); ++t) {
        const auto& piece = layout.pieces[t];
        int64_t used = 0;
        for (const auto& f : piece.slots) used += (f.unit < real) ? d.out_h() * d.out_w() : 0;
        if (used == 0) continue;

        auto [type, payload] = from_server.recv();
        if (type != kMsgOutputCt) throw io_error("protocol: unexpected message type");
        size_t pos = 0;
        (void)get_u32(payload, pos);

        std::vector<uint64_t> phase_at;  // b - a*s at every coefficient (rlwe)
        std::vector<uint64_t> bvals;
        if (backend == Backend::rlwe) {
          if (payload.size() < pos + poly_bytes) throw io_error("protocol: truncated output ct");
          RingPoly a(p.n, p.q_bits);
          a.coeffs = unpack_bits(payload.data() + pos, poly_bytes, static_cast<size_t>(p.n),
                                 p.q_bits);
          pos += poly_bytes;
          const RingPoly as = poly_mul_negacyclic(a, key.secret);
          phase_at = as.coeffs;
          bvals = unpack_bits(payload.data() + pos, payload.size() - pos,
                              static_cast<size_t>(used), p.q_bits);
        } else {
          bvals = unpack_bits(payload.data() + pos, payload.size() - pos,
                              static_cast<size_t>(used), p.q_bits);
        }

        size_t vi = 0;
        for_each_used(layout, piece, real, [&](int64_t unit, int64_t i, int64_t j, int64_t idx) {
          uint64_t v = bvals[vi++];
          if (backend == Backend::rlwe) v = (v - phase_at[static_cast<size_t>(idx)]) & qm;
          y.at({b * layout.units_x + unit, i, j}) = v & pmask;
        });
      }
    }
    return y;
  }
};

struct ServerState {
  const PackingLayout& layout;
  Backend backend;
  std::mt19937_64 rng;
  const Tensor& x_share;
  const Tensor& weights;
  Transcript* transcript;

  Tensor run(ByteChannel& from_client, ByteChannel& to_client) {
    const ConvDims& d = layout.dims;
    const HeParams& p = layout.params;
    const uint64_t qm = p.q_mask();
    const size_t poly_bytes = packed_size_bytes(static_cast<size_t>(p.n), p.q_bits);

    // Fresh masks over Z_q for every output coefficient; R mod 2^l is the
    // server's output share.
    Tensor mask_q({d.c, d.out_h(), d.out_w()}, 64);
    for (auto& v : mask_q.data) v = sample_mod_q(rng, qm);

    uint32_t out_index = 0;
    for (int64_t b = 0; b < layout.n_x; ++b) {
      auto [type, payload] = from_client.recv();
      if (type != kMsgInputCt) throw io_error("protocol: unexpected message type");
      size_t pos = 0;
      (void)get_u32(payload, pos);

      const int64_t real = std::min(layout.units_x, d.c - b * layout.units_x);
      const Tensor xblock = slice_block(x_share, b * layout.units_x, real, layout.units_x);
      const RingPoly xsp = pack_input_dw(xblock, p);

      Tensor wblock({layout.units_x, d.r, d.r}, weights.bit_width);
      for (int64_t ch = 0; ch < real; ++ch) {
        for (int64_t l = 0; l < d.r; ++l) {
          for (int64_t lp = 0; lp < d.r; ++lp) {
            wblock.at({ch, l, lp}) = weights.at({b * layout.units_x + ch, 0, l, lp});
          }
        }
      }
      const std::vector<RingPoly> wpieces = split_weight_poly(wblock, layout, p);

      RlweCiphertext ct;
      RingPoly plain_sum;
      if (backend == Backend::rlwe) {
        if (payload.size() != pos + 2 * poly_bytes) throw io_error("protocol: bad input ct size");
        ct.b = RingPoly(p.n, p.q_bits);
        ct.a = RingPoly(p.n, p.q_bits);
        ct.b.coeffs = unpack_bits(payload.data() + pos, poly_bytes, static_cast<size_t>(p.n),
                                  p.q_bits);
        ct.a.coeffs = unpack_bits(payload.data() + pos + poly_bytes, poly_bytes,
                                  static_cast<size_t>(p.n), p.q_bits);
        ct.l = p.l;
        ct.noise_bound = kNoiseEta;
        hom_add_plain(ct, xsp);
      } else {
        if (payload.size() != pos + poly_bytes) throw io_error("protocol: bad input ct size");
        RingPoly xcp(p.n, p.q_bits);
        xcp.coeffs = unpack_bits(payload.data() + pos, poly_bytes, static_cast<size_t>(p.n),
                                 p.q_bits);
        plain_sum = poly_add(xcp, xsp);
      }
      ++transcript->hom_add_count;

      for (size_t t = 0; t < layout.pieces.size(); ++t) {
        const auto& piece = layout.pieces[t];
        bool useful = false;
        for (const auto& f : piece.slots) useful |= (f.unit < real);
        if (!useful) continue;

        std::vector<uint64_t> bvals;
        std::vector<uint8_t> payload_out;
        put_u32(payload_out, out_index++);

        if (backend == Backend::rlwe) {
          RlweCiphertext prod = ct;
          hom_mul_plain(prod, wpieces[t]);
          if (prod.noise_bound >= noise_budget_limit()) {
            throw noise_budget_error("secure_dwconv: weight multiplication exceeds the budget");
          }
          for_each_used(layout, piece, real,
                        [&](int64_t unit, int64_t i, int64_t j, int64_t idx) {
                          const uint64_t m = mask_q.at({b * layout.units_x + unit, i, j});
                          bvals.push_back((prod.b.coeffs[static_cast<size_t>(idx)] - m) & qm);
                        });
          const auto ab = pack_bits(prod.a.coeffs, p.q_bits);
          const auto vb = pack_bits(bvals, p.q_bits);
          transcript->output_ct_bytes += ab.size() + vb.size();
          payload_out.insert(payload_out.end(), ab.begin(), ab.end());
          payload_out.insert(payload_out.end(), vb.begin(), vb.end());
        } else {
          const RingPoly prod = poly_mul_negacyclic(plain_sum, wpieces[t]);
          for_each_used(layout, piece, real,
                        [&](int64_t unit, int64_t i, int64_t j, int64_t idx) {
                          const uint64_t m = mask_q.at({b * layout.units_x + unit, i, j});
                          bvals.push_back((prod.coeffs[static_cast<size_t>(idx)] - m) & qm);
                        });
          const auto vb = pack_bits(bvals, p.q_bits);
          transcript->output_ct_bytes += vb.size();
          payload_out.insert(payload_out.end(), vb.begin(), vb.end());
        }
        to_client.send(kMsgOutputCt, payload_out);
        ++transcript->output_ciphertexts;
        ++transcript->hom_mult_count;
      }
    }

    Tensor y_server({d.c, d.out_h(), d.out_w()}, p.l);
    const uint64_t pmask = p.p_mask();
    for (size_t i = 0; i < y_server.data.size(); ++i) y_server.data[i] = mask_q.data[i] & pmask;
    return y_server;
  }
};

}  // namespace

SecureConvResult secure_dwconv(const Share& x_client, const Share& x_server, const Tensor& w,
                               const ConvDims& dims, const HeParams& params, Backend backend,
                               uint64_t seed, std::optional<TileChoice> tile) {
  dims.validate();
  params.validate();
  if (!dims.depthwise()) throw geometry_error("secure_dwconv: dims are not depthwise");
  if (x_client.party != Party::client || x_server.party != Party::server) {
    throw parameter_mismatch("secure_dwconv: share party tags are wrong");
  }
  const std::vector<int64_t> xshape{dims.c, dims.h, dims.w};
  if (x_client.value.shape != xshape || x_server.value.shape != xshape) {
    throw dimension_error("secure_dwconv: share shapes do not match dims");
  }
  if (x_client.value.bit_width != params.l || x_server.value.bit_width != params.l) {
    throw parameter_mismatch("secure_dwconv: share bit width differs from params.l");
  }
  if (w.shape != std::vector<int64_t>{dims.c, 1, dims.r, dims.r}) {
    throw dimension_error("secure_dwconv: weight shape mismatch");
  }

  const PackingLayout layout = plan_packing(PackScheme::falcon_dw, dims, params, tile);

  SecureConvResult res;
  res.transcript.seed = seed;
  res.transcript.backend = backend;

  ClientState client{layout, backend, std::mt19937_64(splitmix64(seed ^ 0x636c69656e74ull)),
                     RlweKey{}, &res.transcript};
  if (backend == Backend::rlwe) client.key = rlwe_keygen(params, client.rng);
  ServerState server{layout, backend, std::mt19937_64(splitmix64(seed ^ 0x736572766572ull)),
                     x_server.value, w, &res.transcript};

  ByteChannel to_server, to_client;
  client.send_inputs(x_client.value, to_server);
  res.y_server = Share{Party::server, server.run(to_server, to_client)};
  res.y_client = Share{Party::client, client.receive_outputs(to_client)};

  res.transcript.client_to_server_bytes = to_server.total_bytes();
  res.transcript.server_to_client_bytes = to_client.total_bytes();
  return res;
}

}  // namespace falconpack
