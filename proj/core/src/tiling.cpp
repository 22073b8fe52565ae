#include "falconpack/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace falconpack {

std::string to_string(Framework f) {
  switch (f) {
    case Framework::iron: return "iron";
    case Framework::cheetah: return "cheetah";
    case Framework::falcon: return "falcon";
    case Framework::falcon_tiled: return "falcon_tiled";
  }
  return "?";
}

std::optional<Framework> framework_from_string(const std::string& name) {
  if (name == "iron") return Framework::iron;
  if (name == "cheetah") return Framework::cheetah;
  if (name == "falcon") return Framework::falcon;
  if (name == "falcon_tiled") return Framework::falcon_tiled;
  return std::nullopt;
}

namespace {

int64_t span_slots(int64_t ux, int64_t uw) {
  return uw == 1 ? ux : (ux + 2) * uw / 2 - 1;
}

// Exact comparison of 1/x1 + 1/w1 vs 1/x2 + 1/w2 over positive integers.
int compare_objective(int64_t x1, int64_t w1, int64_t x2, int64_t w2) {
  const int64_t lhs = (x1 + w1) * x2 * w2;
  const int64_t rhs = (x2 + w2) * x1 * w1;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

// Useful units a given piece covers when only `real` units of the block are
// populated. Mirrors the piece construction in the packing planner.
int64_t piece_real_units(int64_t ux, int64_t uw, int64_t t, int64_t real) {
  if (uw == 1) return t < real ? 1 : 0;
  int64_t cnt = 0;
  for (int64_t j = t * uw / 2; j < (t + 1) * uw / 2; ++j) {
    cnt += (j < real) + (ux - 1 - j < real);
  }
  return cnt;
}

}  // namespace

std::optional<TileChoice> solve_tiling_units(int64_t unit_cap, int64_t unit_coeffs, int64_t n) {
  std::optional<TileChoice> best;
  auto consider = [&](int64_t ux, int64_t uw) {
    if (!best) {
      best = TileChoice{ux, uw};
      return;
    }
    const int cmp = compare_objective(ux, uw, best->c_x, best->c_w);
    if (cmp < 0 || (cmp == 0 && (uw > best->c_w || (uw == best->c_w && ux > best->c_x)))) {
      best = TileChoice{ux, uw};
    }
  };

  for (int64_t uw = 1; uw <= unit_cap; uw = (uw == 1 ? 2 : uw + 2)) {
    for (int64_t ux = uw; ux <= unit_cap; ux += uw) {
      if (ux * unit_coeffs > n) break;
      if (span_slots(ux, uw) * unit_coeffs > n) break;
      consider(ux, uw);
    }
  }
  return best;
}

TileChoice solve_tiling(const ConvDims& dims, const HeParams& params) {
  dims.validate();
  params.validate();
  if (dims.h * dims.w > params.n) {
    throw capacity_error("solve_tiling: HW exceeds N, no feasible tile");
  }
  const int64_t cap = dims.c + (dims.c % 2);
  auto tile = solve_tiling_units(cap, dims.h * dims.w, params.n);
  if (!tile) throw capacity_error("solve_tiling: no feasible tile");
  return *tile;
}

TileChoice untiled_tile(const ConvDims& dims, const HeParams& params) {
  dims.validate();
  params.validate();
  const int64_t hw = dims.h * dims.w;
  if (hw > params.n) throw capacity_error("untiled_tile: HW exceeds N");
  const int64_t cap = std::min(dims.c + (dims.c % 2), params.n / hw);
  for (int64_t ux = cap; ux >= 2; --ux) {
    for (int64_t uw = ux - (ux % 2); uw >= 2; uw -= 2) {
      if (ux % uw != 0) continue;
      if (span_slots(ux, uw) * hw <= params.n) return TileChoice{ux, uw};
    }
  }
  return TileChoice{std::max<int64_t>(cap, 1), 1};
}

namespace {

uint64_t input_ct_bytes(const HeParams& p) {
  // A fresh RLWE ciphertext ships both component polynomials.
  return 2 * (static_cast<uint64_t>(p.n) * p.q_bits) / 8;
}

uint64_t output_ct_bytes(const HeParams& p, int64_t n_useful) {
  const uint64_t bits = (static_cast<uint64_t>(p.n) + static_cast<uint64_t>(n_useful)) * p.q_bits;
  return (bits + 7) / 8;
}

CostReport cost_iron(const ConvDims& dims, const HeParams& params) {
  CostReport rep;
  const int64_t m = dims.out_h() * dims.out_w();
  const int64_t kd = dims.g * dims.r * dims.r;
  if (kd > params.n) throw capacity_error("comm_cost: iron matrix row exceeds N");
  const int64_t m_w = std::min(m, params.n / kd);
  if (m_w < 1) throw capacity_error("comm_cost: iron window infeasible");
  const int64_t row_blocks = (m + m_w - 1) / m_w;
  const int64_t cols = std::clamp<int64_t>(params.n / (m_w * kd), 1, dims.g);
  const int64_t col_blocks = (dims.g + cols - 1) / cols;
  const int64_t groups = dims.c / dims.g;

  rep.input_ciphertexts = groups * row_blocks;
  rep.output_ciphertexts = groups * row_blocks * col_blocks;
  rep.poly_mult_count = rep.output_ciphertexts;
  for (int64_t rb = 0; rb < row_blocks; ++rb) {
    const int64_t rows = std::min(m_w, m - rb * m_w);
    for (int64_t cb = 0; cb < col_blocks; ++cb) {
      const int64_t c = std::min(cols, dims.g - cb * cols);
      rep.output_bytes += static_cast<uint64_t>(groups) * output_ct_bytes(params, rows * c);
    }
  }
  return rep;
}

CostReport cost_cheetah(const ConvDims& dims, const HeParams& params) {
  CostReport rep;
  const int64_t hw = dims.h * dims.w;
  if (hw > params.n) throw capacity_error("comm_cost: HW exceeds N");
  rep.input_ciphertexts = (dims.c * hw + params.n - 1) / params.n;
  const int64_t cb = std::min(dims.c, params.n / hw);
  const int64_t kpp = std::clamp<int64_t>(params.n / (cb * hw), 1, dims.k);
  rep.output_ciphertexts = (dims.k + kpp - 1) / kpp;
  rep.poly_mult_count = rep.output_ciphertexts;
  const int64_t m = dims.out_h() * dims.out_w();
  for (int64_t kp = 0; kp < rep.output_ciphertexts; ++kp) {
    const int64_t kernels = std::min(kpp, dims.k - kp * kpp);
    rep.output_bytes += output_ct_bytes(params, kernels * m);
  }
  return rep;
}

CostReport cost_falcon(const ConvDims& dims, const HeParams& params, const TileChoice& tile) {
  CostReport rep;
  const int64_t ux = tile.c_x, uw = tile.c_w;
  const int64_t k = ux / uw;
  const int64_t n_x = (dims.c + ux - 1) / ux;
  const int64_t m = dims.out_h() * dims.out_w();
  rep.input_ciphertexts = n_x;
  for (int64_t b = 0; b < n_x; ++b) {
    const int64_t real = std::min(ux, dims.c - b * ux);
    for (int64_t t = 0; t < k; ++t) {
      const int64_t units = piece_real_units(ux, uw, t, real);
      if (units == 0) continue;
      ++rep.output_ciphertexts;
      rep.output_bytes += output_ct_bytes(params, units * m);
    }
  }
  rep.poly_mult_count = rep.output_ciphertexts;
  return rep;
}

}  // namespace

CostReport comm_cost(Framework framework, const ConvDims& dims, const HeParams& params,
                     std::optional<TileChoice> tile) {
  dims.validate();
  params.validate();
  if (dims.h * dims.w > params.n) throw capacity_error("comm_cost: HW exceeds N");

  CostReport rep;
  switch (framework) {
    case Framework::iron:
      rep = cost_iron(dims, params);
      break;
    case Framework::cheetah:
      rep = cost_cheetah(dims, params);
      break;
    case Framework::falcon:
    case Framework::falcon_tiled: {
      // The zero-sharing layout treats a group convolution like its
      // depthwise equivalent, so the model only depends on C and HW.
      ConvDims dw = dims;
      dw.g = 1;
      dw.k = dw.c;
      if (!tile) {
        tile = (framework == Framework::falcon) ? untiled_tile(dw, params)
                                                : solve_tiling(dw, params);
      }
      if (tile->c_x < 1 || tile->c_w < 1 || tile->c_x % tile->c_w != 0 ||
          (tile->c_w != 1 && tile->c_w % 2 != 0)) {
        throw capacity_error("comm_cost: malformed tile");
      }
      if (tile->c_x * dw.h * dw.w > params.n ||
          span_slots(tile->c_x, tile->c_w) * dw.h * dw.w > params.n) {
        throw capacity_error("comm_cost: infeasible tile");
      }
      rep = cost_falcon(dw, params, *tile);
      rep.tile = tile;
      break;
    }
  }
  rep.framework = framework;
  rep.dims = dims;
  rep.params = params;
  rep.input_poly_count = 2 * rep.input_ciphertexts;
  rep.input_bytes = static_cast<uint64_t>(rep.input_ciphertexts) * input_ct_bytes(params);
  return rep;
}

std::string CostReport::to_json() const {
  nlohmann::json j;
  j["framework"] = falconpack::to_string(framework);
  j["h"] = dims.h;
  j["w"] = dims.w;
  j["c"] = dims.c;
  j["k"] = dims.k;
  j["r"] = dims.r;
  j["g"] = dims.g;
  j["s"] = dims.s;
  j["n"] = params.n;
  j["q_bits"] = params.q_bits;
  j["l"] = params.l;
  j["c_x"] = tile ? tile->c_x : 0;
  j["c_w"] = tile ? tile->c_w : 0;
  j["input_ciphertexts"] = input_ciphertexts;
  j["output_ciphertexts"] = output_ciphertexts;
  j["input_poly_count"] = input_poly_count;
  j["poly_mult_count"] = poly_mult_count;
  j["input_bytes"] = input_bytes;
  j["output_bytes"] = output_bytes;
  return j.dump();
}

CostReport CostReport::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  CostReport rep;
  auto fw = framework_from_string(j.at("framework").get<std::string>());
  if (!fw) throw io_error("CostReport::from_json: unknown framework");
  rep.framework = *fw;
  rep.dims = ConvDims{j.at("h"), j.at("w"), j.at("c"), j.at("k"), j.at("r"), j.at("g"), j.at("s")};
  rep.params = HeParams{j.at("n"), j.at("q_bits"), j.at("l")};
  const int64_t cx = j.at("c_x"), cw = j.at("c_w");
  if (cx > 0) rep.tile = TileChoice{cx, cw};
  rep.input_ciphertexts = j.at("input_ciphertexts");
  rep.output_ciphertexts = j.at("output_ciphertexts");
  rep.input_poly_count = j.at("input_poly_count");
  rep.poly_mult_count = j.at("poly_mult_count");
  rep.input_bytes = j.at("input_bytes");
  rep.output_bytes = j.at("output_bytes");
  return rep;
}

std::string CostReport::csv_header() {
  return "framework,h,w,c,k,r,g,s,n,q_bits,l,c_x,c_w,input_cts,output_cts,input_polys,"
         "input_MB,output_MB,total_MB,mults";
}

std::string CostReport::to_csv_row() const {
  std::ostringstream os;
  os << falconpack::to_string(framework) << ',' << dims.h << ',' << dims.w << ',' << dims.c << ','
     << dims.k << ',' << dims.r << ',' << dims.g << ',' << dims.s << ',' << params.n << ','
     << params.q_bits << ',' << params.l << ',' << (tile ? tile->c_x : 0) << ','
     << (tile ? tile->c_w : 0) << ',' << input_ciphertexts << ',' << output_ciphertexts << ','
     << input_poly_count << ',';
  os.setf(std::ios::fixed);
  os.precision(6);
  os << double(input_bytes) / 1e6 << ',' << double(output_bytes) / 1e6 << ','
     << double(total_bytes()) / 1e6 << ',' << poly_mult_count;
  return os.str();
}

CostReport CostReport::from_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (cells.size() != 20) throw io_error("CostReport::from_csv_row: wrong column count");

  CostReport rep;
  auto fw = framework_from_string(cells[0]);
  if (!fw) throw io_error("CostReport::from_csv_row: unknown framework");
  rep.framework = *fw;
  rep.dims = ConvDims{std::stoll(cells[1]), std::stoll(cells[2]), std::stoll(cells[3]),
                      std::stoll(cells[4]), std::stoll(cells[5]), std::stoll(cells[6]),
                      std::stoll(cells[7])};
  rep.params = HeParams{std::stoll(cells[8]), static_cast<uint32_t>(std::stoul(cells[9])),
                        static_cast<uint32_t>(std::stoul(cells[10]))};
  const int64_t cx = std::stoll(cells[11]), cw = std::stoll(cells[12]);
  if (cx > 0) rep.tile = TileChoice{cx, cw};
  rep.input_ciphertexts = std::stoll(cells[13]);
  rep.output_ciphertexts = std::stoll(cells[14]);
  rep.input_poly_count = std::stoll(cells[15]);
  rep.input_bytes = static_cast<uint64_t>(std::llround(std::stod(cells[16]) * 1e6));
  rep.output_bytes = static_cast<uint64_t>(std::llround(std::stod(cells[17]) * 1e6));
  rep.poly_mult_count = std::stoll(cells[19]);
  return rep;
}

}  // namespace falconpack
