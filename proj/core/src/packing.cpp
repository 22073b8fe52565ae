#include "falconpack/packing.hpp"

#include <algorithm>
#include <cassert>

#include <json.hpp>

namespace falconpack {

std::string to_string(PackScheme s) {
  switch (s) {
    case PackScheme::iron: return "iron";
    case PackScheme::cheetah: return "cheetah";
    case PackScheme::falcon_dw: return "falcon_dw";
    case PackScheme::falcon_group: return "falcon_group";
  }
  return "?";
}

int64_t channel_offset(int64_t c_prime, int64_t c_x, int64_t c_w) {
  if (c_w == 1) {
    if (c_prime != 0) throw geometry_error("channel_offset: filter index out of range");
    return 0;
  }
  if (c_w < 1 || c_w % 2 != 0) throw geometry_error("channel_offset: c_w must be even");
  if (c_prime < 0 || c_prime >= c_w) throw geometry_error("channel_offset: filter index out of range");
  if (c_x < c_w || c_x % c_w != 0) throw geometry_error("channel_offset: c_x must be a positive multiple of c_w");
  if (c_prime >= c_w / 2) return (c_x + 2) * (c_w - 1 - c_prime);
  return c_x + c_prime * (c_x + 1);
}

int64_t weight_slot_span(int64_t c_x, int64_t c_w) {
  if (c_w == 1) return c_x;
  return (c_x + 2) * c_w / 2 - 1;
}

std::vector<PaddedFilter> canonical_padded_filters(int64_t c) {
  std::vector<PaddedFilter> out(static_cast<size_t>(c));
  for (int64_t i = 0; i < c; ++i) out[static_cast<size_t>(i)] = PaddedFilter{c - 1 - i, i};
  return out;
}

namespace {

struct ScsNode {
  std::vector<std::pair<int64_t, int64_t>> entries;  // (filter, W slot within node)
  int64_t len = 0;
  int64_t lead = 0;
  int64_t trail = 0;
  int64_t head = 0;  // original index of the first filter, used for tie-breaks
};

int64_t scs_overlap(const ScsNode& a, const ScsNode& b) { return std::min(a.trail, b.lead); }

ScsNode scs_merge(const ScsNode& a, const ScsNode& b, int64_t ov) {
  ScsNode out = a;
  const int64_t shift = a.len - ov;
  for (const auto& [f, slot] : b.entries) out.entries.emplace_back(f, slot + shift);
  out.len = a.len + b.len - ov;
  out.trail = b.trail;
  return out;
}

}  // namespace

FilterArrangement greedy_scs_arrange(const std::vector<PaddedFilter>& filters) {
  if (filters.empty()) throw geometry_error("greedy_scs_arrange: empty filter list");

  std::vector<ScsNode> nodes;
  nodes.reserve(filters.size());
  for (size_t i = 0; i < filters.size(); ++i) {
    const auto& f = filters[i];
    if (f.lead_zeros < 0 || f.trail_zeros < 0) {
      throw geometry_error("greedy_scs_arrange: negative zero run");
    }
    ScsNode n;
    n.entries = {{static_cast<int64_t>(i), f.lead_zeros}};
    n.len = f.lead_zeros + 1 + f.trail_zeros;
    n.lead = f.lead_zeros;
    n.trail = f.trail_zeros;
    n.head = static_cast<int64_t>(i);
    nodes.push_back(std::move(n));
  }

  // Repeatedly merge the heaviest edge; ties go to the smallest
  // (source head, dest head) pair.
  while (nodes.size() > 1) {
    int64_t best = 0;
    size_t bi = 0, bj = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      for (size_t j = 0; j < nodes.size(); ++j) {
        if (i == j) continue;
        const int64_t ov = scs_overlap(nodes[i], nodes[j]);
        if (ov <= 0) continue;
        const bool better =
            ov > best ||
            (ov == best && std::pair{nodes[i].head, nodes[j].head} <
                               std::pair{nodes[bi].head, nodes[bj].head});
        if (best == 0 || better) {
          best = ov;
          bi = i;
          bj = j;
        }
      }
    }
    if (best == 0) break;
    ScsNode merged = scs_merge(nodes[bi], nodes[bj], best);
    const size_t hi = std::max(bi, bj), lo = std::min(bi, bj);
    nodes.erase(nodes.begin() + static_cast<ptrdiff_t>(hi));
    nodes.erase(nodes.begin() + static_cast<ptrdiff_t>(lo));
    nodes.push_back(std::move(merged));
  }

  // Concatenate what is left, highest head first.
  std::sort(nodes.begin(), nodes.end(),
            [](const ScsNode& a, const ScsNode& b) { return a.head > b.head; });

  FilterArrangement arr;
  arr.start_slot.assign(filters.size(), 0);
  int64_t base = 0;
  for (const auto& n : nodes) {
    for (const auto& [f, wslot] : n.entries) {
      arr.order.push_back(f);
      arr.start_slot[static_cast<size_t>(f)] =
          base + wslot - filters[static_cast<size_t>(f)].lead_zeros;
    }
    base += n.len;
  }
  arr.total_slots = base;
  return arr;
}

namespace {

int64_t dw_origin(const ConvDims& d) { return d.w * (d.r - 1) + d.r - 1; }

int64_t group_origin(const ConvDims& d) {
  return d.h * d.w * (d.g * d.g - 1) + dw_origin(d);
}

std::vector<WeightPiece> build_pieces(int64_t ux, int64_t uw) {
  std::vector<WeightPiece> pieces;
  if (uw == 1) {
    for (int64_t t = 0; t < ux; ++t) {
      WeightPiece p;
      p.slots = {WeightSlot{t, 0}};
      p.span_slots = t + 1;
      pieces.push_back(std::move(p));
    }
    return pieces;
  }
  // Cut the ux-by-ux arrangement into k pieces of uw/2 filter pairs each.
  const int64_t k = ux / uw;
  for (int64_t t = 0; t < k; ++t) {
    const int64_t cut = (ux + 2) * t * (uw / 2);
    WeightPiece p;
    for (int64_t j = t * uw / 2; j < (t + 1) * uw / 2; ++j) {
      p.slots.push_back(WeightSlot{ux - 1 - j, channel_offset(ux - 1 - j, ux, ux) - cut});
      p.slots.push_back(WeightSlot{j, channel_offset(j, ux, ux) - cut});
    }
    std::sort(p.slots.begin(), p.slots.end(),
              [](const WeightSlot& a, const WeightSlot& b) { return a.unit < b.unit; });
    p.span_slots = weight_slot_span(ux, uw);
    pieces.push_back(std::move(p));
  }
  return pieces;
}

// Every output read slot must be reachable from exactly one
// (input unit, weight slot) pair, otherwise another filter's product
// would land on it.
void check_read_uniqueness(const WeightPiece& piece, int64_t ux) {
  for (const auto& f : piece.slots) {
    const int64_t read = f.slot + f.unit;
    int hits = 0;
    for (const auto& o : piece.slots) {
      const int64_t c = read - o.slot;
      if (c >= 0 && c < ux) ++hits;
    }
    if (hits != 1) {
      throw capacity_error("plan_packing: arrangement has colliding output slots");
    }
    if (read + 1 > piece.span_slots) {
      throw capacity_error("plan_packing: read slot beyond piece span");
    }
  }
}

}  // namespace

PackingLayout plan_packing(PackScheme scheme, const ConvDims& dims, const HeParams& params,
                           std::optional<TileChoice> tile) {
  dims.validate();
  params.validate();
  if (scheme != PackScheme::falcon_dw && scheme != PackScheme::falcon_group) {
    throw geometry_error("plan_packing: only the zero-sharing schemes need a layout plan");
  }
  if (scheme == PackScheme::falcon_dw && (dims.g != 1 || dims.k != dims.c)) {
    throw geometry_error("plan_packing: falcon_dw requires depthwise dims");
  }
  if (scheme == PackScheme::falcon_group && dims.k != dims.c) {
    throw geometry_error("plan_packing: group scheme requires K = C");
  }

  PackingLayout layout;
  layout.scheme = scheme;
  layout.dims = dims;
  layout.params = params;

  const int64_t unit = layout.unit_coeffs();
  const int64_t units_total = layout.total_units();
  if (dims.h * dims.w > params.n) {
    throw capacity_error("plan_packing: HW exceeds N; spatial tiling is not supported");
  }

  if (!tile) {
    const int64_t cap = units_total + (units_total % 2);
    tile = solve_tiling_units(cap, unit, params.n);
    if (!tile) throw capacity_error("plan_packing: no feasible tile for this geometry");
  }
  const int64_t ux = tile->c_x, uw = tile->c_w;
  if (ux < 1 || uw < 1 || ux % uw != 0 || (uw != 1 && uw % 2 != 0)) {
    throw capacity_error("plan_packing: tile violates the layout preconditions");
  }
  if (ux * unit > params.n || weight_slot_span(ux, uw) * unit > params.n) {
    throw capacity_error("plan_packing: tile exceeds polynomial capacity");
  }

  layout.units_x = ux;
  layout.units_w = uw;
  layout.c_x = ux * dims.g * dims.g;
  layout.c_w = uw * dims.g * dims.g;
  layout.k = ux / uw;
  layout.pieces = build_pieces(ux, uw);
  for (const auto& p : layout.pieces) {
    check_read_uniqueness(p, ux);
    if (p.span_slots * unit > params.n) {
      throw capacity_error("plan_packing: piece span exceeds polynomial capacity");
    }
  }

  layout.n_x = (units_total + ux - 1) / ux;
  layout.n_w = 0;
  for (int64_t b = 0; b < layout.n_x; ++b) {
    const int64_t real = std::min(ux, units_total - b * ux);
    for (const auto& p : layout.pieces) {
      for (const auto& f : p.slots) {
        if (f.unit < real) {
          ++layout.n_w;
          break;
        }
      }
    }
  }
  return layout;
}

std::string PackingLayout::to_json() const {
  nlohmann::json j;
  j["scheme"] = falconpack::to_string(scheme);
  j["c_x"] = c_x;
  j["c_w"] = c_w;
  j["k"] = k;
  j["n_x"] = n_x;
  j["n_w"] = n_w;
  j["group"] = dims.g;
  j["n"] = params.n;
  nlohmann::json pieces_j = nlohmann::json::array();
  for (const auto& p : pieces) {
    nlohmann::json pj;
    pj["span_slots"] = p.span_slots;
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& f : p.slots) slots.push_back({{"unit", f.unit}, {"slot", f.slot}});
    pj["slots"] = slots;
    pieces_j.push_back(pj);
  }
  j["pieces"] = pieces_j;
  return j.dump();
}

RingPoly pack_input_dw(const Tensor& block, const HeParams& params) {
  if (block.shape.size() != 3) throw dimension_error("pack_input_dw: expected C x H x W block");
  const int64_t c = block.shape[0], h = block.shape[1], w = block.shape[2];
  if (c * h * w > params.n) throw capacity_error("pack_input_dw: block exceeds N coefficients");
  RingPoly x(params.n, params.q_bits);
  const uint64_t pm = block.mask();
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t i = 0; i < h; ++i) {
      for (int64_t j = 0; j < w; ++j) {
        x.coeffs[static_cast<size_t>(ch * h * w + i * w + j)] = block.at({ch, i, j}) & pm;
      }
    }
  }
  return x;
}

std::vector<RingPoly> split_weight_poly(const Tensor& wblock, const PackingLayout& layout,
                                        const HeParams& params) {
  if (layout.scheme != PackScheme::falcon_dw) {
    throw geometry_error("split_weight_poly: layout is not depthwise");
  }
  const ConvDims& d = layout.dims;
  if (wblock.shape != std::vector<int64_t>{layout.units_x, d.r, d.r}) {
    throw dimension_error("split_weight_poly: expected C_x x R x R weight block");
  }
  const int64_t hw = d.h * d.w;
  const int64_t origin = dw_origin(d);
  const uint64_t pm = wblock.mask();

  std::vector<RingPoly> out;
  out.reserve(layout.pieces.size());
  for (const auto& piece : layout.pieces) {
    RingPoly wp(params.n, params.q_bits);
    for (const auto& f : piece.slots) {
      const int64_t base = f.slot * hw + origin;
      for (int64_t l = 0; l < d.r; ++l) {
        for (int64_t lp = 0; lp < d.r; ++lp) {
          const int64_t idx = base - l * d.w - lp;
          if (idx < 0 || idx >= params.n) {
            throw capacity_error("split_weight_poly: coefficient index out of range");
          }
          wp.coeffs[static_cast<size_t>(idx)] = wblock.at({f.unit, l, lp}) & pm;
        }
      }
    }
    out.push_back(std::move(wp));
  }
  return out;
}

RingPoly pack_weight_dw(const Tensor& wblock, const PackingLayout& layout,
                        const HeParams& params) {
  if (layout.k != 1) {
    throw geometry_error("pack_weight_dw: layout has k > 1, use split_weight_poly");
  }
  return split_weight_poly(wblock, layout, params)[0];
}

Tensor extract_output_dw(const RingPoly& y, const PackingLayout& layout, int64_t piece_index,
                         int64_t real_channels) {
  const ConvDims& d = layout.dims;
  const auto& piece = layout.pieces.at(static_cast<size_t>(piece_index));
  const int64_t hw = d.h * d.w;
  const int64_t origin = dw_origin(d);
  const int64_t oh = d.out_h(), ow = d.out_w();

  int64_t rows = 0;
  for (const auto& f : piece.slots) rows += (f.unit < real_channels);
  Tensor out({rows, oh, ow}, layout.params.l);
  const uint64_t pm = out.mask();

  int64_t row = 0;
  for (const auto& f : piece.slots) {
    if (f.unit >= real_channels) continue;
    const int64_t base = (f.slot + f.unit) * hw + origin;
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        const int64_t idx = base + i * d.s * d.w + j * d.s;
        if (idx < 0 || idx >= y.degree_n()) {
          throw capacity_error("extract_output_dw: read index out of range");
        }
        out.at({row, i, j}) = y.coeffs[static_cast<size_t>(idx)] & pm;
      }
    }
    ++row;
  }
  return out;
}

RingPoly pack_input_group(const Tensor& block, const PackingLayout& layout,
                          const HeParams& params) {
  const ConvDims& d = layout.dims;
  if (block.shape != std::vector<int64_t>{layout.units_x * d.g, d.h, d.w}) {
    throw dimension_error("pack_input_group: expected (units_x * G) x H x W block");
  }
  const int64_t hw = d.h * d.w;
  if (layout.units_x * d.g * d.g * hw > params.n) {
    throw capacity_error("pack_input_group: block exceeds N coefficients");
  }
  RingPoly x(params.n, params.q_bits);
  const uint64_t pm = block.mask();
  for (int64_t u = 0; u < layout.units_x; ++u) {
    for (int64_t g2 = 0; g2 < d.g; ++g2) {
      const int64_t base = (u * d.g * d.g + g2) * hw;
      for (int64_t i = 0; i < d.h; ++i) {
        for (int64_t j = 0; j < d.w; ++j) {
          x.coeffs[static_cast<size_t>(base + i * d.w + j)] = block.at({u * d.g + g2, i, j}) & pm;
        }
      }
    }
  }
  return x;
}

std::vector<RingPoly> split_weight_group(const Tensor& wblock, const PackingLayout& layout,
                                         const HeParams& params) {
  if (layout.scheme != PackScheme::falcon_group) {
    throw geometry_error("split_weight_group: layout is not a group layout");
  }
  const ConvDims& d = layout.dims;
  if (wblock.shape != std::vector<int64_t>{layout.units_x * d.g, d.g, d.r, d.r}) {
    throw dimension_error("split_weight_group: expected (units_x * G) x G x R x R block");
  }
  const int64_t hw = d.h * d.w;
  const int64_t unit = hw * d.g * d.g;
  const int64_t origin = group_origin(d);
  const uint64_t pm = wblock.mask();

  std::vector<RingPoly> out;
  out.reserve(layout.pieces.size());
  for (const auto& piece : layout.pieces) {
    RingPoly wp(params.n, params.q_bits);
    for (const auto& f : piece.slots) {
      const int64_t base = f.slot * unit + origin;
      for (int64_t g1 = 0; g1 < d.g; ++g1) {
        for (int64_t g2 = 0; g2 < d.g; ++g2) {
          for (int64_t l = 0; l < d.r; ++l) {
            for (int64_t lp = 0; lp < d.r; ++lp) {
              const int64_t idx = base - g1 * hw * d.g - g2 * hw - l * d.w - lp;
              if (idx < 0 || idx >= params.n) {
                throw capacity_error("split_weight_group: coefficient index out of range");
              }
              wp.coeffs[static_cast<size_t>(idx)] = wblock.at({f.unit * d.g + g1, g2, l, lp}) & pm;
            }
          }
        }
      }
    }
    out.push_back(std::move(wp));
  }
  return out;
}

RingPoly pack_weight_group(const Tensor& wblock, const PackingLayout& layout,
                           const HeParams& params) {
  if (layout.k != 1) {
    throw geometry_error("pack_weight_group: layout has k > 1, use split_weight_group");
  }
  return split_weight_group(wblock, layout, params)[0];
}

Tensor extract_output_group(const RingPoly& y, const PackingLayout& layout, int64_t piece_index,
                            int64_t real_units) {
  const ConvDims& d = layout.dims;
  const auto& piece = layout.pieces.at(static_cast<size_t>(piece_index));
  const int64_t hw = d.h * d.w;
  const int64_t unit = hw * d.g * d.g;
  const int64_t origin = group_origin(d);
  const int64_t oh = d.out_h(), ow = d.out_w();

  int64_t units_real = 0;
  for (const auto& f : piece.slots) units_real += (f.unit < real_units);
  Tensor out({units_real * d.g, oh, ow}, layout.params.l);
  const uint64_t pm = out.mask();

  int64_t row_unit = 0;
  for (const auto& f : piece.slots) {
    if (f.unit >= real_units) continue;
    const int64_t base = (f.slot + f.unit) * unit + origin;
    for (int64_t g1 = 0; g1 < d.g; ++g1) {
      for (int64_t i = 0; i < oh; ++i) {
        for (int64_t j = 0; j < ow; ++j) {
          const int64_t idx = base - g1 * hw * d.g + i * d.s * d.w + j * d.s;
          if (idx < 0 || idx >= y.degree_n()) {
            throw capacity_error("extract_output_group: read index out of range");
          }
          out.at({row_unit * d.g + g1, i, j}) = y.coeffs[static_cast<size_t>(idx)] & pm;
        }
      }
    }
    ++row_unit;
  }
  return out;
}

PackedConvResult falcon_dwconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                     const HeParams& params, std::optional<TileChoice> tile) {
  dims.validate();
  if (!dims.depthwise()) throw geometry_error("falcon_dwconv_plain: dims are not depthwise");
  if (x.shape != std::vector<int64_t>{dims.c, dims.h, dims.w}) {
    throw dimension_error("falcon_dwconv_plain: input shape mismatch");
  }
  if (w.shape != std::vector<int64_t>{dims.c, 1, dims.r, dims.r}) {
    throw dimension_error("falcon_dwconv_plain: weight shape mismatch");
  }
  const PackingLayout layout = plan_packing(PackScheme::falcon_dw, dims, params, tile);

  PackedConvResult res;
  res.y = Tensor({dims.c, dims.out_h(), dims.out_w()}, x.bit_width);
  for (int64_t b = 0; b < layout.n_x; ++b) {
    const int64_t real = std::min(layout.units_x, dims.c - b * layout.units_x);
    Tensor xblock({layout.units_x, dims.h, dims.w}, x.bit_width);
    Tensor wblock({layout.units_x, dims.r, dims.r}, w.bit_width);
    for (int64_t ch = 0; ch < real; ++ch) {
      for (int64_t i = 0; i < dims.h; ++i) {
        for (int64_t j = 0; j < dims.w; ++j) {
          xblock.at({ch, i, j}) = x.at({b * layout.units_x + ch, i, j});
        }
      }
      for (int64_t l = 0; l < dims.r; ++l) {
        for (int64_t lp = 0; lp < dims.r; ++lp) {
          wblock.at({ch, l, lp}) = w.at({b * layout.units_x + ch, 0, l, lp});
        }
      }
    }
    const RingPoly xp = pack_input_dw(xblock, params);
    const std::vector<RingPoly> wpieces = split_weight_poly(wblock, layout, params);
    ++res.input_polys;

    for (size_t t = 0; t < wpieces.size(); ++t) {
      const auto& piece = layout.pieces[t];
      bool useful = false;
      for (const auto& f : piece.slots) useful |= (f.unit < real);
      if (!useful) continue;
      const RingPoly yp = poly_mul_negacyclic(xp, wpieces[t]);
      ++res.poly_mults;
      ++res.output_polys;
      const Tensor slice = extract_output_dw(yp, layout, static_cast<int64_t>(t), real);
      int64_t row = 0;
      for (const auto& f : piece.slots) {
        if (f.unit >= real) continue;
        for (int64_t i = 0; i < dims.out_h(); ++i) {
          for (int64_t j = 0; j < dims.out_w(); ++j) {
            res.y.at({b * layout.units_x + f.unit, i, j}) = slice.at({row, i, j});
          }
        }
        ++row;
      }
    }
  }
  return res;
}

PackedConvResult falcon_gconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                    const HeParams& params, std::optional<TileChoice> tile) {
  dims.validate();
  if (dims.k != dims.c) throw geometry_error("falcon_gconv_plain: requires K = C");
  if (x.shape != std::vector<int64_t>{dims.c, dims.h, dims.w}) {
    throw dimension_error("falcon_gconv_plain: input shape mismatch");
  }
  if (w.shape != std::vector<int64_t>{dims.k, dims.g, dims.r, dims.r}) {
    throw dimension_error("falcon_gconv_plain: weight shape mismatch");
  }
  const PackingLayout layout = plan_packing(PackScheme::falcon_group, dims, params, tile);
  const int64_t units_total = layout.total_units();

  PackedConvResult res;
  res.y = Tensor({dims.c, dims.out_h(), dims.out_w()}, x.bit_width);
  for (int64_t b = 0; b < layout.n_x; ++b) {
    const int64_t real = std::min(layout.units_x, units_total - b * layout.units_x);
    Tensor xblock({layout.units_x * dims.g, dims.h, dims.w}, x.bit_width);
    Tensor wblock({layout.units_x * dims.g, dims.g, dims.r, dims.r}, w.bit_width);
    for (int64_t u = 0; u < real; ++u) {
      for (int64_t g = 0; g < dims.g; ++g) {
        const int64_t ch = (b * layout.units_x + u) * dims.g + g;
        for (int64_t i = 0; i < dims.h; ++i) {
          for (int64_t j = 0; j < dims.w; ++j) {
            xblock.at({u * dims.g + g, i, j}) = x.at({ch, i, j});
          }
        }
        for (int64_t g2 = 0; g2 < dims.g; ++g2) {
          for (int64_t l = 0; l < dims.r; ++l) {
            for (int64_t lp = 0; lp < dims.r; ++lp) {
              wblock.at({u * dims.g + g, g2, l, lp}) = w.at({ch, g2, l, lp});
            }
          }
        }
      }
    }
    const RingPoly xp = pack_input_group(xblock, layout, params);
    const std::vector<RingPoly> wpieces = split_weight_group(wblock, layout, params);
    ++res.input_polys;

    for (size_t t = 0; t < wpieces.size(); ++t) {
      const auto& piece = layout.pieces[t];
      bool useful = false;
      for (const auto& f : piece.slots) useful |= (f.unit < real);
      if (!useful) continue;
      const RingPoly yp = poly_mul_negacyclic(xp, wpieces[t]);
      ++res.poly_mults;
      ++res.output_polys;
      const Tensor slice = extract_output_group(yp, layout, static_cast<int64_t>(t), real);
      int64_t row_unit = 0;
      for (const auto& f : piece.slots) {
        if (f.unit >= real) continue;
        for (int64_t g = 0; g < dims.g; ++g) {
          const int64_t ch = (b * layout.units_x + f.unit) * dims.g + g;
          for (int64_t i = 0; i < dims.out_h(); ++i) {
            for (int64_t j = 0; j < dims.out_w(); ++j) {
              res.y.at({ch, i, j}) = slice.at({row_unit * dims.g + g, i, j});
            }
          }
        }
        ++row_unit;
      }
    }
  }
  return res;
}

PackedConvResult cheetah_conv2d_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                      const HeParams& params) {
  dims.validate();
  if (dims.g != dims.c) {
    throw geometry_error("cheetah_conv2d_plain: expects a standard convolution (G = C)");
  }
  if (x.shape != std::vector<int64_t>{dims.c, dims.h, dims.w}) {
    throw dimension_error("cheetah_conv2d_plain: input shape mismatch");
  }
  if (w.shape != std::vector<int64_t>{dims.k, dims.c, dims.r, dims.r}) {
    throw dimension_error("cheetah_conv2d_plain: weight shape mismatch");
  }
  const int64_t hw = dims.h * dims.w;
  if (hw > params.n) throw capacity_error("cheetah_conv2d_plain: HW exceeds N");
  const int64_t origin = dw_origin(dims);
  const int64_t cb = std::min(dims.c, params.n / hw);
  const int64_t blocks = (dims.c + cb - 1) / cb;
  const int64_t kpp = std::clamp<int64_t>(params.n / (cb * hw), 1, dims.k);
  const int64_t kernel_polys = (dims.k + kpp - 1) / kpp;
  const int64_t oh = dims.out_h(), ow = dims.out_w();

  PackedConvResult res;
  res.y = Tensor({dims.k, oh, ow}, x.bit_width);
  res.input_polys = blocks;
  res.output_polys = kernel_polys;
  const uint64_t pm = res.y.mask();

  for (int64_t b = 0; b < blocks; ++b) {
    const int64_t cb_real = std::min(cb, dims.c - b * cb);
    RingPoly xp(params.n, params.q_bits);
    for (int64_t cl = 0; cl < cb_real; ++cl) {
      for (int64_t i = 0; i < dims.h; ++i) {
        for (int64_t j = 0; j < dims.w; ++j) {
          xp.coeffs[static_cast<size_t>(cl * hw + i * dims.w + j)] =
              x.at({b * cb + cl, i, j}) & pm;
        }
      }
    }
    for (int64_t kp = 0; kp < kernel_polys; ++kp) {
      RingPoly wp(params.n, params.q_bits);
      const int64_t k_lo = kp * kpp;
      const int64_t k_hi = std::min(dims.k, k_lo + kpp);
      for (int64_t k = k_lo; k < k_hi; ++k) {
        const int64_t kk = k - k_lo;
        for (int64_t cl = 0; cl < cb_real; ++cl) {
          const int64_t base = (kk * cb + cb - 1 - cl) * hw + origin;
          for (int64_t l = 0; l < dims.r; ++l) {
            for (int64_t lp = 0; lp < dims.r; ++lp) {
              wp.coeffs[static_cast<size_t>(base - l * dims.w - lp)] =
                  w.at({k, b * cb + cl, l, lp}) & pm;
            }
          }
        }
      }
      if (wp.is_zero()) continue;  // an all-zero channel block can be skipped
      const RingPoly yp = poly_mul_negacyclic(xp, wp);
      ++res.poly_mults;
      for (int64_t k = k_lo; k < k_hi; ++k) {
        const int64_t kk = k - k_lo;
        const int64_t base = (kk * cb + cb - 1) * hw + origin;
        for (int64_t i = 0; i < oh; ++i) {
          for (int64_t j = 0; j < ow; ++j) {
            const size_t idx = static_cast<size_t>(base + i * dims.s * dims.w + j * dims.s);
            auto& acc = res.y.at({k, i, j});
            acc = (acc + yp.coeffs[idx]) & pm;
          }
        }
      }
    }
  }
  return res;
}

PackedConvResult cheetah_dwconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                      const HeParams& params) {
  if (!dims.depthwise()) throw geometry_error("cheetah_dwconv_plain: dims are not depthwise");
  const Tensor padded = pad_depthwise_to_standard(w, dims);
  ConvDims std_dims = dims;
  std_dims.g = dims.c;
  return cheetah_conv2d_plain(x, padded, std_dims, params);
}

PackedConvResult iron_dwconv_plain(const Tensor& x, const Tensor& w, const ConvDims& dims,
                                   const HeParams& params) {
  dims.validate();
  if (!dims.depthwise()) throw geometry_error("iron_dwconv_plain: dims are not depthwise");
  if (x.shape != std::vector<int64_t>{dims.c, dims.h, dims.w}) {
    throw dimension_error("iron_dwconv_plain: input shape mismatch");
  }
  if (w.shape != std::vector<int64_t>{dims.c, 1, dims.r, dims.r}) {
    throw dimension_error("iron_dwconv_plain: weight shape mismatch");
  }
  const int64_t m = dims.out_h() * dims.out_w();
  const int64_t kdim = dims.r * dims.r;
  if (kdim > params.n) throw capacity_error("iron_dwconv_plain: R^2 exceeds N");
  const int64_t m_w = std::min(m, params.n / kdim);
  const int64_t row_blocks = (m + m_w - 1) / m_w;

  PackedConvResult res;
  res.y = Tensor({dims.c, dims.out_h(), dims.out_w()}, x.bit_width);
  const uint64_t pm = res.y.mask();

  ConvDims slice_dims = dims;
  slice_dims.g = 1;
  for (int64_t c = 0; c < dims.c; ++c) {
    Tensor xs({1, dims.h, dims.w}, x.bit_width);
    for (int64_t i = 0; i < dims.h; ++i) {
      for (int64_t j = 0; j < dims.w; ++j) xs.at({0, i, j}) = x.at({c, i, j});
    }
    const Tensor cols = im2col(xs, slice_dims);
    for (int64_t rb = 0; rb < row_blocks; ++rb) {
      const int64_t r_lo = rb * m_w;
      const int64_t r_hi = std::min(m, r_lo + m_w);
      RingPoly xp(params.n, params.q_bits);
      for (int64_t r = r_lo; r < r_hi; ++r) {
        for (int64_t t = 0; t < kdim; ++t) {
          xp.coeffs[static_cast<size_t>((r - r_lo) * kdim + t)] = cols.at({r, t}) & pm;
        }
      }
      RingPoly wp(params.n, params.q_bits);
      for (int64_t l = 0; l < dims.r; ++l) {
        for (int64_t lp = 0; lp < dims.r; ++lp) {
          wp.coeffs[static_cast<size_t>(kdim - 1 - (l * dims.r + lp))] = w.at({c, 0, l, lp}) & pm;
        }
      }
      const RingPoly yp = poly_mul_negacyclic(xp, wp);
      ++res.input_polys;
      ++res.output_polys;
      ++res.poly_mults;
      for (int64_t r = r_lo; r < r_hi; ++r) {
        const size_t idx = static_cast<size_t>((r - r_lo) * kdim + kdim - 1);
        res.y.at({c, r / dims.out_w(), r % dims.out_w()}) = yp.coeffs[idx] & pm;
      }
    }
  }
  return res;
}

}  // namespace falconpack
