#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "falconpack/tensor.hpp"

namespace falconpack {

enum class Framework { iron, cheetah, falcon, falcon_tiled };

std::string to_string(Framework f);
std::optional<Framework> framework_from_string(const std::string& name);

struct TileChoice {
  int64_t c_x = 1;  // units per input polynomial
  int64_t c_w = 1;  // units per weight polynomial
  double objective() const { return 1.0 / double(c_x) + 1.0 / double(c_w); }
};

// Per-operator communication model. Input ciphertexts carry two degree-N
// polynomials at q_bits per coefficient; an output ciphertext carries one
// polynomial plus its n useful coefficients, bit-packed, so it costs
// ceil((N + n) * q_bits / 8) bytes.
struct CostReport {
  Framework framework = Framework::falcon_tiled;
  ConvDims dims;
  HeParams params;
  std::optional<TileChoice> tile;

  int64_t input_ciphertexts = 0;
  int64_t output_ciphertexts = 0;
  int64_t input_poly_count = 0;  // polynomials on the wire: 2 per input ct
  int64_t poly_mult_count = 0;
  uint64_t input_bytes = 0;
  uint64_t output_bytes = 0;

  uint64_t total_bytes() const { return input_bytes + output_bytes; }
  double total_mb() const { return double(total_bytes()) / 1e6; }

  std::string to_json() const;
  std::string to_csv_row() const;
  static std::string csv_header();
  static CostReport from_json(const std::string& text);
  static CostReport from_csv_row(const std::string& line);
};

// Generalized tile solver over superstring units: minimizes 1/ux + 1/uw
// subject to ux * unit_coeffs <= N, span(ux, uw) * unit_coeffs <= N,
// ux = k * uw, uw even or 1, ux <= unit_cap. Ties break toward larger uw,
// then larger ux.
std::optional<TileChoice> solve_tiling_units(int64_t unit_cap, int64_t unit_coeffs,
                                             int64_t n);

// Depthwise tile solve; throws capacity_error when HW > N.
TileChoice solve_tiling(const ConvDims& dims, const HeParams& params);

// The untiled zero-sharing strategy: largest c_x admitting an even c_w >= 2,
// falling back to (c_x_max, 1).
TileChoice untiled_tile(const ConvDims& dims, const HeParams& params);

// Communication model for one framework on one operator. `tile` applies to
// the falcon variants only; it defaults to untiled_tile / solve_tiling.
CostReport comm_cost(Framework framework, const ConvDims& dims, const HeParams& params,
                     std::optional<TileChoice> tile = std::nullopt);

}  // namespace falconpack
