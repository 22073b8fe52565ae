#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "falconpack/errors.hpp"

namespace falconpack {

// Convolution geometry. Input is X[c, i, j] with c outermost, weights are
// W[k, g, l, l'] with K filters of G channels each, stride s, valid padding.
// Depthwise is G = 1 with K = C.
struct ConvDims {
  int64_t h = 0;  // input height
  int64_t w = 0;  // input width
  int64_t c = 0;  // input channels
  int64_t k = 0;  // output channels
  int64_t r = 0;  // kernel size (square)
  int64_t g = 1;  // channels per group
  int64_t s = 1;  // stride

  int64_t out_h() const { return (h - r) / s + 1; }
  int64_t out_w() const { return (w - r) / s + 1; }
  int64_t groups() const { return g > 0 ? c / g : 0; }
  bool depthwise() const { return g == 1 && k == c; }

  static ConvDims depthwise_square(int64_t hw, int64_t channels, int64_t kernel,
                                   int64_t stride = 1) {
    return ConvDims{hw, hw, channels, channels, kernel, 1, stride};
  }
  static ConvDims grouped(int64_t h, int64_t w, int64_t channels, int64_t group,
                          int64_t kernel, int64_t stride = 1) {
    return ConvDims{h, w, channels, channels, kernel, group, stride};
  }

  // Throws geometry_error on any violated invariant.
  void validate() const;

  bool operator==(const ConvDims&) const = default;
};

// Ring and share parameters. q = 2^q_bits, plaintext modulus p = 2^l.
struct HeParams {
  int64_t n = 4096;       // polynomial degree, power of two
  uint32_t q_bits = 59;   // log2 of the ciphertext modulus
  uint32_t l = 32;        // share / plaintext bit width

  uint64_t q_mask() const {
    return q_bits >= 64 ? ~uint64_t{0} : ((uint64_t{1} << q_bits) - 1);
  }
  uint64_t p_mask() const {
    return l >= 64 ? ~uint64_t{0} : ((uint64_t{1} << l) - 1);
  }

  void validate() const;

  bool operator==(const HeParams&) const = default;
};

// Dense integer tensor over Z_{2^l}, row-major, channel outermost.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<uint64_t> data;
  uint32_t bit_width = 32;

  Tensor() = default;
  Tensor(std::vector<int64_t> shape_, uint32_t l);

  int64_t numel() const;
  uint64_t mask() const {
    return bit_width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << bit_width) - 1);
  }

  uint64_t& at(std::initializer_list<int64_t> idx);
  uint64_t at(std::initializer_list<int64_t> idx) const;

  void fill_random(std::mt19937_64& rng);

  bool operator==(const Tensor&) const = default;
};

Tensor tensor_add(const Tensor& a, const Tensor& b);

// Grouped cross-correlation with valid padding, all arithmetic mod 2^l.
// X shaped C x H x W, W shaped K x G x R x R, result K x H' x W'.
Tensor conv2d_reference(const Tensor& x, const Tensor& w, const ConvDims& dims);

// Expands a depthwise filter bank C x 1 x R x R to the standard-conv bank
// C x C x R x R with zero channels off the diagonal.
Tensor pad_depthwise_to_standard(const Tensor& w, const ConvDims& dims);

// im2col over one group slice (G channels): rows index the output positions,
// columns the flattened G x R x R receptive field.
Tensor im2col(const Tensor& x_slice, const ConvDims& dims);

// Flat binary format: u64 rank, u64 extents..., u64 l, then u64 residues.
std::vector<uint8_t> tensor_to_bytes(const Tensor& t);
Tensor tensor_from_bytes(const std::vector<uint8_t>& bytes);

std::string tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const std::string& text);

}  // namespace falconpack
