#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "falconpack/poly.hpp"
#include "falconpack/tensor.hpp"
#include "falconpack/tiling.hpp"

namespace falconpack {

enum class PackScheme { iron, cheetah, falcon_dw, falcon_group };

std::string to_string(PackScheme s);

// Channel-level slot of filter c' in the canonical zero-sharing arrangement.
// Requires even c_w (or c_w == 1, which degenerates to slot 0).
int64_t channel_offset(int64_t c_prime, int64_t c_x, int64_t c_w);

// Length in channel slots of one weight polynomial: c_x for a single filter,
// (c_x + 2) * c_w / 2 - 1 for an even number of paired filters.
int64_t weight_slot_span(int64_t c_x, int64_t c_w);

// A padded filter 0^lead W 0^trail viewed as a zero-pattern string.
struct PaddedFilter {
  int64_t lead_zeros = 0;
  int64_t trail_zeros = 0;
};

// The canonical depthwise pattern set: filter i is 0^(C-1-i) W_i 0^i.
std::vector<PaddedFilter> canonical_padded_filters(int64_t c);

struct FilterArrangement {
  std::vector<int64_t> order;       // filters in superstring order
  std::vector<int64_t> start_slot;  // window start of each filter's pattern
  int64_t total_slots = 0;          // superstring length in channel slots
};

// Greedy shortest-common-superstring merge over the overlap graph. Among
// equal-weight edges the lexicographically smallest (source, dest) node pair
// is taken, so the output is deterministic.
FilterArrangement greedy_scs_arrange(const std::vector<PaddedFilter>& filters);

// One filter (or filter group) placed inside a weight polynomial piece.
// `unit` is the input unit it convolves against, block-relative;
// the output of that unit lands at slot `slot + unit`.
struct WeightSlot {
  int64_t unit = 0;
  int64_t slot = 0;
};

struct WeightPiece {
  std::vector<WeightSlot> slots;  // sorted by unit
  int64_t span_slots = 0;         // max read slot + 1
};

// A planned packing: how channels map onto polynomials for one scheme.
// For group convolution the superstring works over units of G^2 channel
// slots; c_x / c_w stay in channel-slot terms so capacity math is uniform.
struct PackingLayout {
  PackScheme scheme = PackScheme::falcon_dw;
  ConvDims dims;
  HeParams params;

  int64_t c_x = 0;      // channel slots per input polynomial (units_x * G^2)
  int64_t c_w = 0;      // channel slots per weight polynomial
  int64_t k = 1;        // c_x / c_w
  int64_t units_x = 0;  // superstring units per input polynomial
  int64_t units_w = 0;  // superstring units per weight polynomial
  int64_t n_x = 0;      // input polynomials
  int64_t n_w = 0;      // weight polynomials with at least one real unit
  std::vector<WeightPiece> pieces;  // k piece templates per input block

  int64_t unit_coeffs() const { return dims.h * dims.w * dims.g * dims.g; }
  int64_t total_units() const { return dims.c / dims.g; }

  std::string to_json() const;
};

// Plans the zero-sharing layout for depthwise (G = 1) or group convolution.
// Uses the given tile or solves for one. Throws capacity_error when no
// feasible layout exists.
PackingLayout plan_packing(PackScheme scheme, const ConvDims& dims, const HeParams& params,
                           std::optional<TileChoice> tile = std::nullopt);

// pi^i for depthwise: x_hat[c*HW + i*W + j] = X[c, i, j].
RingPoly pack_input_dw(const Tensor& block, const HeParams& params);

// pi^w for depthwise, single-piece layouts (k = 1).
RingPoly pack_weight_dw(const Tensor& wblock, const PackingLayout& layout,
                        const HeParams& params);

// General k >= 1: packs a C_x x R x R weight block into the layout's pieces.
// Padding channels contribute zero coefficients.
std::vector<RingPoly> split_weight_poly(const Tensor& wblock, const PackingLayout& layout,
                                        const HeParams& params);

// Reads the outputs of one piece out of y = x_hat * w_hat. Rows follow the
// piece's unit order; channels beyond `real_channels` of the block are
// dropped.
Tensor extract_output_dw(const RingPoly& y, const PackingLayout& layout, int64_t piece_index,
                         int64_t real_channels);

// Group-convolution variants: one unit is a whole group of G filters over
// G^2 channel slots, laid out internally like a standard convolution.
RingPoly pack_input_group(const Tensor& block, const PackingLayout& layout,
                          const HeParams& params);
RingPoly pack_weight_group(const Tensor& wblock, const PackingLayout& layout,
                           const HeParams& params);
std::vector<RingPoly> split_weight_group(const Tensor& wblock, const PackingLayout& layout,
                                         const HeParams& params);
Tensor extract_output_group(const RingPoly& y, const PackingLayout& layout, int64_t piece_index,
                            int64_t real_units);

// Whole-operator plaintext pipelines (pack, negacyclic multiply, extract,
// reassemble). These are the executable counterparts of the cost model.
struct PackedConvResult {
  Tensor y;
  int64_t input_polys = 0;
  int64_t output_polys = 0;
  int64_t poly_mults = 0;
};

PackedConvResult falcon_dwconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                     const HeParams& params,
                                     std::optional<TileChoice> tile = std::nullopt);
PackedConvResult falcon_gconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                    const HeParams& params,
                                    std::optional<TileChoice> tile = std::nullopt);

// Cheetah-style standard convolution packing; depthwise inputs are expanded
// with pad_depthwise_to_standard by the caller or via the dw wrapper below.
PackedConvResult cheetah_conv2d_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                      const HeParams& params);
PackedConvResult cheetah_dwconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                      const HeParams& params);

// Iron: one im2col matrix-vector product per channel, row-blocked when
// H'W' R^2 exceeds N.
PackedConvResult iron_dwconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                   const HeParams& params);

}  // namespace falconpack
