#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "falconpack/packing.hpp"

using namespace falconpack;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, uint32_t l, std::mt19937_64& rng) {
  Tensor t(std::move(shape), l);
  t.fill_random(rng);
  return t;
}

// Optimal pure-string SCS length over all filter orders: consecutive
// patterns merge on the longest zero suffix/prefix run.
int64_t exhaustive_scs_length(const std::vector<PaddedFilter>& fs) {
  std::vector<size_t> perm(fs.size());
  std::iota(perm.begin(), perm.end(), 0);
  int64_t best = INT64_MAX;
  do {
    int64_t len = 0;
    for (size_t t = 0; t < perm.size(); ++t) {
      const auto& f = fs[perm[t]];
      int64_t piece = f.lead_zeros + 1 + f.trail_zeros;
      if (t > 0) piece -= std::min(fs[perm[t - 1]].trail_zeros, f.lead_zeros);
      len += piece;
    }
    best = std::min(best, len);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("channel_offset closed form") {
  // c_x = c_w = 4
  CHECK(channel_offset(3, 4, 4) == 0);
  CHECK(channel_offset(0, 4, 4) == 4);
  CHECK(channel_offset(1, 4, 4) == 9);
  CHECK(channel_offset(2, 4, 4) == 6);
  // c_x = 8, c_w = 4
  CHECK(channel_offset(0, 8, 4) == 8);
  CHECK(channel_offset(1, 8, 4) == 17);
  CHECK(channel_offset(2, 8, 4) == 10);
  CHECK(channel_offset(3, 8, 4) == 0);

  CHECK_THROWS_AS(channel_offset(0, 6, 3), geometry_error);   // odd c_w
  CHECK_THROWS_AS(channel_offset(4, 4, 4), geometry_error);   // out of range
  CHECK_THROWS_AS(channel_offset(0, 6, 4), geometry_error);   // c_x not multiple
}

TEST_CASE("channel_offset: output windows never overlap (8, 4)") {
  // Brute-force index enumeration: the read regions of distinct filters are
  // disjoint coefficient sets.
  const int64_t hw = 25;  // H = W = 5
  std::set<int64_t> seen;
  for (int64_t c = 0; c < 4; ++c) {
    const int64_t base = (channel_offset(c, 8, 4) + c) * hw;
    for (int64_t t = 0; t < hw; ++t) {
      CHECK(seen.insert(base + t).second);
    }
  }
}

TEST_CASE("greedy SCS: single filter") {
  const auto arr = greedy_scs_arrange(canonical_padded_filters(1));
  CHECK(arr.total_slots == 1);
  CHECK(arr.order == std::vector<int64_t>{0});
}

TEST_CASE("greedy SCS: C = 4 realizes the canonical arrangement") {
  const auto filters = canonical_padded_filters(4);
  const auto arr = greedy_scs_arrange(filters);
  CHECK(arr.total_slots == 11);  // vs naive 16
  CHECK(arr.order == std::vector<int64_t>{3, 0, 2, 1});
  // W positions match the closed-form offsets: W3 0 0 0 W0 0 W2 0 0 W1 0.
  for (int64_t i = 0; i < 4; ++i) {
    const int64_t w_pos = arr.start_slot[static_cast<size_t>(i)] + filters[static_cast<size_t>(i)].lead_zeros;
    CHECK(w_pos == channel_offset(i, 4, 4));
  }
}

TEST_CASE("greedy SCS: every pattern embeds and naive bound holds") {
  for (int64_t c = 1; c <= 12; ++c) {
    const auto filters = canonical_padded_filters(c);
    const auto arr = greedy_scs_arrange(filters);
    CHECK(arr.total_slots <= c * c);
    for (int64_t i = 0; i < c; ++i) {
      const auto& f = filters[static_cast<size_t>(i)];
      const int64_t start = arr.start_slot[static_cast<size_t>(i)];
      CHECK(start >= 0);
      CHECK(start + f.lead_zeros + 1 + f.trail_zeros <= arr.total_slots);
    }
  }
}

TEST_CASE("greedy SCS equals the exhaustive optimum for C <= 7") {
  for (int64_t c = 1; c <= 7; ++c) {
    const auto filters = canonical_padded_filters(c);
    const auto arr = greedy_scs_arrange(filters);
    CHECK(arr.total_slots == exhaustive_scs_length(filters));
  }
}

TEST_CASE("greedy SCS agrees with the closed-form span for even C") {
  for (int64_t c = 2; c <= 16; c += 2) {
    const auto arr = greedy_scs_arrange(canonical_padded_filters(c));
    CHECK(arr.total_slots == weight_slot_span(c, c));
  }
}

TEST_CASE("weight polynomial utilization beats the dense-padding baseline") {
  // c_w / span > 2 / (c_x + 2) over the feasible grid; at (4, 4) the rate is
  // 4/11 against 1/4.
  for (int64_t cw = 2; cw <= 32; cw += 2) {
    for (int64_t k = 1; k <= 4; ++k) {
      const int64_t cx = k * cw;
      CHECK(cw * (cx + 2) > 2 * weight_slot_span(cx, cw));
    }
  }
  CHECK(weight_slot_span(4, 4) == 11);
}

TEST_CASE("pack_input_dw") {
  const HeParams params{2048, 59, 32};

  SUBCASE("zero tensor gives the zero polynomial") {
    Tensor block({2, 3, 3}, 32);
    CHECK(pack_input_dw(block, params).is_zero());
  }

  SUBCASE("direct formula on a 2x2 block") {
    Tensor block({1, 2, 2}, 32);
    block.data = {1, 2, 3, 4};
    const RingPoly x = pack_input_dw(block, params);
    CHECK(x.coeffs[0] == 1);
    CHECK(x.coeffs[1] == 2);
    CHECK(x.coeffs[2] == 3);
    CHECK(x.coeffs[3] == 4);
    for (int64_t i = 4; i < params.n; ++i) CHECK(x.coeffs[static_cast<size_t>(i)] == 0);
  }

  SUBCASE("inverse index map recovers the block") {
    std::mt19937_64 rng(21);
    const Tensor block = random_tensor({4, 5, 5}, 32, rng);
    const RingPoly x = pack_input_dw(block, params);
    for (int64_t c = 0; c < 4; ++c) {
      for (int64_t i = 0; i < 5; ++i) {
        for (int64_t j = 0; j < 5; ++j) {
          CHECK(x.coeffs[static_cast<size_t>(c * 25 + i * 5 + j)] == block.at({c, i, j}));
        }
      }
    }
  }

  SUBCASE("capacity is enforced") {
    Tensor block({90, 5, 5}, 32);
    CHECK_THROWS_AS(pack_input_dw(block, HeParams{2048, 59, 32}), capacity_error);
  }
}

TEST_CASE("pack_weight_dw and extract_output_dw against the conv oracle") {
  std::mt19937_64 rng(22);
  const HeParams params{2048, 59, 32};

  SUBCASE("all-zero weights pack to the zero polynomial") {
    const ConvDims d = ConvDims::depthwise_square(5, 4, 3);
    const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{4, 4});
    Tensor wblock({4, 3, 3}, 32);
    CHECK(pack_weight_dw(wblock, layout, params).is_zero());
  }

  SUBCASE("C = 1 padded to c_w = 2 packs only the real filter") {
    const ConvDims d = ConvDims::depthwise_square(5, 1, 3);
    const auto layout = plan_packing(PackScheme::falcon_dw, d, params);
    CHECK(layout.units_x == 2);
    CHECK(layout.units_w == 2);
    Tensor wblock({2, 3, 3}, 32);
    for (int64_t l = 0; l < 3; ++l) {
      for (int64_t lp = 0; lp < 3; ++lp) wblock.at({0, l, lp}) = rng() & 0xffffffffull;
    }
    const RingPoly wp = pack_weight_dw(wblock, layout, params);
    // Filter 0 sits at slot channel_offset(0, 2, 2) = 2; nothing else.
    int64_t nonzero = 0;
    for (uint64_t v : wp.coeffs) nonzero += (v != 0);
    CHECK(nonzero == 9);
    const int64_t hw = 25, origin = 5 * 2 + 2;
    CHECK(wp.coeffs[static_cast<size_t>(2 * hw + origin)] == wblock.at({0, 0, 0}));
  }

  SUBCASE("central oracle test: c_x = c_w = 4, H = W = 5, R = 3") {
    const ConvDims d = ConvDims::depthwise_square(5, 4, 3);
    const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{4, 4});
    const Tensor x = random_tensor({4, 5, 5}, 32, rng);
    const Tensor w = random_tensor({4, 1, 3, 3}, 32, rng);

    Tensor wblock({4, 3, 3}, 32);
    for (int64_t c = 0; c < 4; ++c) {
      for (int64_t l = 0; l < 3; ++l) {
        for (int64_t lp = 0; lp < 3; ++lp) wblock.at({c, l, lp}) = w.at({c, 0, l, lp});
      }
    }
    const RingPoly xp = pack_input_dw(x, params);
    const RingPoly wp = pack_weight_dw(wblock, layout, params);
    const RingPoly yp = poly_mul_negacyclic(xp, wp);
    const Tensor got = extract_output_dw(yp, layout, 0, 4);
    const Tensor want = conv2d_reference(x, w, d);
    CHECK(got.data == want.data);
  }

  SUBCASE("identity kernel at R = 1 recovers the input block") {
    const ConvDims d = ConvDims::depthwise_square(4, 4, 1);
    const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{4, 4});
    const Tensor x = random_tensor({4, 4, 4}, 32, rng);
    Tensor wblock({4, 1, 1}, 32);
    for (int64_t c = 0; c < 4; ++c) wblock.at({c, 0, 0}) = 1;
    const RingPoly yp =
        poly_mul_negacyclic(pack_input_dw(x, params), pack_weight_dw(wblock, layout, params));
    CHECK(extract_output_dw(yp, layout, 0, 4).data == x.data);
  }

  SUBCASE("stride 2 on H = W = 5, R = 3 reads the strided coefficients") {
    const ConvDims d = ConvDims::depthwise_square(5, 2, 3, 2);
    CHECK(d.out_h() == 2);
    const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{2, 2});
    const Tensor x = random_tensor({2, 5, 5}, 32, rng);
    const Tensor w = random_tensor({2, 1, 3, 3}, 32, rng);
    Tensor wblock({2, 3, 3}, 32);
    for (int64_t c = 0; c < 2; ++c) {
      for (int64_t l = 0; l < 3; ++l) {
        for (int64_t lp = 0; lp < 3; ++lp) wblock.at({c, l, lp}) = w.at({c, 0, l, lp});
      }
    }
    const RingPoly yp =
        poly_mul_negacyclic(pack_input_dw(x, params), pack_weight_dw(wblock, layout, params));
    const Tensor got = extract_output_dw(yp, layout, 0, 2);
    CHECK(got.data == conv2d_reference(x, w, d).data);

    // Spot-check the index formula itself: O = W(R-1) + R-1 = 12, reads at
    // (offset(k') + k') * 25 + 12 + 10 i' + 2 j'.
    const int64_t base = (channel_offset(0, 2, 2) + 0) * 25 + 12;
    CHECK(got.at({0, 1, 1}) == (yp.coeffs[static_cast<size_t>(base + 12)] & 0xffffffffull));
  }
}

TEST_CASE("distinct filters write disjoint coefficient sets") {
  std::mt19937_64 rng(23);
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::depthwise_square(5, 6, 3);
  const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{6, 6});
  // Pack one filter at a time; nonzero index sets must not intersect.
  std::set<size_t> seen;
  for (int64_t c = 0; c < 6; ++c) {
    Tensor wblock({6, 3, 3}, 32);
    for (int64_t l = 0; l < 3; ++l) {
      for (int64_t lp = 0; lp < 3; ++lp) wblock.at({c, l, lp}) = 1 + (rng() & 0xffff);
    }
    const RingPoly wp = pack_weight_dw(wblock, layout, params);
    for (size_t i = 0; i < wp.coeffs.size(); ++i) {
      if (wp.coeffs[i] != 0) CHECK(seen.insert(i).second);
    }
  }
}

TEST_CASE("split_weight_poly for k = 2 covers all channels disjointly") {
  std::mt19937_64 rng(24);
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::depthwise_square(5, 8, 3);
  const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{8, 4});
  CHECK(layout.k == 2);
  CHECK(layout.pieces.size() == 2);

  std::set<int64_t> covered;
  for (const auto& piece : layout.pieces) {
    for (const auto& f : piece.slots) CHECK(covered.insert(f.unit).second);
  }
  CHECK(covered.size() == 8);

  const Tensor x = random_tensor({8, 5, 5}, 32, rng);
  const Tensor w = random_tensor({8, 1, 3, 3}, 32, rng);
  const auto res = falcon_dwconv_plain(x, w, d, params, TileChoice{8, 4});
  CHECK(res.y.data == conv2d_reference(x, w, d).data);
  CHECK(res.input_polys == 1);
  CHECK(res.output_polys == 2);
  CHECK(res.poly_mults == 2);
}

TEST_CASE("split_weight_poly with k = 1 degenerates to pack_weight_dw") {
  std::mt19937_64 rng(25);
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::depthwise_square(5, 4, 3);
  const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{4, 4});
  const Tensor wblock = random_tensor({4, 3, 3}, 32, rng);
  const auto pieces = split_weight_poly(wblock, layout, params);
  CHECK(pieces.size() == 1);
  CHECK(pieces[0] == pack_weight_dw(wblock, layout, params));
}

TEST_CASE("leading-zero removal never changes extracted outputs") {
  // Pack the k = 2 pieces without subtracting the cut offset (big enough N)
  // and with it; both extractions must agree.
  std::mt19937_64 rng(26);
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::depthwise_square(5, 8, 3);
  const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{8, 4});
  const Tensor x = random_tensor({8, 5, 5}, 32, rng);
  const Tensor w = random_tensor({8, 1, 3, 3}, 32, rng);
  Tensor wblock({8, 3, 3}, 32);
  for (int64_t c = 0; c < 8; ++c) {
    for (int64_t l = 0; l < 3; ++l) {
      for (int64_t lp = 0; lp < 3; ++lp) wblock.at({c, l, lp}) = w.at({c, 0, l, lp});
    }
  }
  const RingPoly xp = pack_input_dw(x, params);
  const auto trimmed = split_weight_poly(wblock, layout, params);

  const int64_t hw = 25, origin = 5 * 2 + 2;
  const std::vector<int64_t> cuts = {0, (8 + 2) * 1 * (4 / 2)};  // piece cut positions
  for (size_t t = 0; t < layout.pieces.size(); ++t) {
    RingPoly untrimmed(params.n, params.q_bits);
    for (const auto& f : layout.pieces[t].slots) {
      const int64_t base = (f.slot + cuts[t]) * hw + origin;
      for (int64_t l = 0; l < 3; ++l) {
        for (int64_t lp = 0; lp < 3; ++lp) {
          untrimmed.coeffs[static_cast<size_t>(base - l * 5 - lp)] = wblock.at({f.unit, l, lp});
        }
      }
    }
    const RingPoly y_untrimmed = poly_mul_negacyclic(xp, untrimmed);
    const RingPoly y_trimmed = poly_mul_negacyclic(xp, trimmed[t]);
    // Compare at every read position, shifted by the cut.
    for (const auto& f : layout.pieces[t].slots) {
      for (int64_t i = 0; i < d.out_h(); ++i) {
        for (int64_t j = 0; j < d.out_w(); ++j) {
          const int64_t pos = (f.slot + f.unit) * hw + origin + i * 5 + j;
          const int64_t pos_u = pos + cuts[t] * hw;
          CHECK((y_trimmed.coeffs[static_cast<size_t>(pos)] & 0xffffffffull) ==
                (y_untrimmed.coeffs[static_cast<size_t>(pos_u)] & 0xffffffffull));
        }
      }
    }
  }
}

TEST_CASE("group packing: G = 1 is bit-identical to the depthwise path") {
  std::mt19937_64 rng(27);
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::grouped(5, 5, 4, 1, 3);
  const auto gl = plan_packing(PackScheme::falcon_group, d, params, TileChoice{4, 4});
  const ConvDims dw = ConvDims::depthwise_square(5, 4, 3);
  const auto dl = plan_packing(PackScheme::falcon_dw, dw, params, TileChoice{4, 4});

  const Tensor x = random_tensor({4, 5, 5}, 32, rng);
  const Tensor wg = random_tensor({4, 1, 3, 3}, 32, rng);
  Tensor wb_dw({4, 3, 3}, 32);
  for (int64_t c = 0; c < 4; ++c) {
    for (int64_t l = 0; l < 3; ++l) {
      for (int64_t lp = 0; lp < 3; ++lp) wb_dw.at({c, l, lp}) = wg.at({c, 0, l, lp});
    }
  }
  CHECK(pack_input_group(x, gl, params) == pack_input_dw(x, params));
  CHECK(pack_weight_group(wg, gl, params) == pack_weight_dw(wb_dw, dl, params));

  const auto res_g = falcon_gconv_plain(x, wg, d, params, TileChoice{4, 4});
  const auto res_d = falcon_dwconv_plain(x, wg, dw, params, TileChoice{4, 4});
  CHECK(res_g.y == res_d.y);
}

TEST_CASE("group packing: single group equals Cheetah standard conv") {
  std::mt19937_64 rng(28);
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::grouped(5, 5, 4, 4, 3);
  const Tensor x = random_tensor({4, 5, 5}, 32, rng);
  const Tensor w = random_tensor({4, 4, 3, 3}, 32, rng);
  const auto res_g = falcon_gconv_plain(x, w, d, params, TileChoice{1, 1});
  const auto res_c = cheetah_conv2d_plain(x, w, d, params);
  const Tensor want = conv2d_reference(x, w, d);
  CHECK(res_g.y.data == want.data);
  CHECK(res_c.y.data == want.data);
}

TEST_CASE("group packing matches the conv oracle for G in {2, 4}") {
  std::mt19937_64 rng(29);
  const HeParams params{4096, 59, 32};
  for (int64_t g : {2, 4}) {
    const ConvDims d = ConvDims::grouped(5, 5, 8, g, 3);
    const Tensor x = random_tensor({8, 5, 5}, 32, rng);
    const Tensor w = random_tensor({8, g, 3, 3}, 32, rng);
    const auto res = falcon_gconv_plain(x, w, d, params);
    CHECK(res.y.data == conv2d_reference(x, w, d).data);
  }
}

TEST_CASE("group packing exercises the unit split (k = 2)") {
  std::mt19937_64 rng(30);
  const HeParams params{4096, 59, 32};
  const ConvDims d = ConvDims::grouped(4, 4, 8, 2, 2);
  const Tensor x = random_tensor({8, 4, 4}, 32, rng);
  const Tensor w = random_tensor({8, 2, 2, 2}, 32, rng);
  const auto res = falcon_gconv_plain(x, w, d, params, TileChoice{4, 2});
  CHECK(res.y.data == conv2d_reference(x, w, d).data);
  CHECK(res.input_polys == 1);   // all 4 units fit one input polynomial
  CHECK(res.output_polys == 2);  // split into k = 2 weight pieces
}

TEST_CASE("cheetah baseline") {
  std::mt19937_64 rng(31);

  SUBCASE("depthwise C = 4 at HW = N/4: one input polynomial, 3/4 zero slots") {
    const HeParams params{4096, 59, 32};
    const ConvDims d = ConvDims::depthwise_square(32, 4, 3);  // HW = 1024 = N/4
    const Tensor x = random_tensor({4, 32, 32}, 32, rng);
    const Tensor w = random_tensor({4, 1, 3, 3}, 32, rng);
    const auto res = cheetah_dwconv_plain(x, w, d, params);
    CHECK(res.input_polys == 1);
    CHECK(res.output_polys == 4);  // one kernel per weight polynomial
    CHECK(res.poly_mults == 4);
    CHECK(res.y.data == conv2d_reference(x, w, d).data);
    // Weight polynomials hold 4 channel slots per kernel, 1 nonzero: the
    // padded-standard form wastes (C-1)/C of the slots.
    CHECK((res.output_polys * 4 - d.c) * 4 == 3 * res.output_polys * 4);
  }

  SUBCASE("standard conv with multiple blocks matches the oracle") {
    const HeParams params{2048, 59, 32};
    const ConvDims d = ConvDims::grouped(7, 7, 50, 50, 3);  // 50*49 > N forces blocks
    const Tensor x = random_tensor({50, 7, 7}, 32, rng);
    const Tensor w = random_tensor({50, 50, 3, 3}, 32, rng);
    const auto res = cheetah_conv2d_plain(x, w, d, params);
    CHECK(res.input_polys == 2);
    CHECK(res.y.data == conv2d_reference(x, w, d).data);
  }

  SUBCASE("depthwise random matches the oracle") {
    const HeParams params{2048, 59, 32};
    const ConvDims d = ConvDims::depthwise_square(6, 12, 3, 2);
    const Tensor x = random_tensor({12, 6, 6}, 32, rng);
    const Tensor w = random_tensor({12, 1, 3, 3}, 32, rng);
    const auto res = cheetah_dwconv_plain(x, w, d, params);
    CHECK(res.y.data == conv2d_reference(x, w, d).data);
  }
}

TEST_CASE("iron baseline") {
  std::mt19937_64 rng(32);

  SUBCASE("C channels cost C input and C output polynomials") {
    const HeParams params{2048, 59, 32};
    const ConvDims d = ConvDims::depthwise_square(6, 5, 3);
    const Tensor x = random_tensor({5, 6, 6}, 32, rng);
    const Tensor w = random_tensor({5, 1, 3, 3}, 32, rng);
    const auto res = iron_dwconv_plain(x, w, d, params);
    CHECK(res.input_polys == 5);
    CHECK(res.output_polys == 5);
    CHECK(res.poly_mults == 5);
    CHECK(res.y.data == conv2d_reference(x, w, d).data);
  }

  SUBCASE("row blocking engages when H'W'R^2 exceeds N") {
    const HeParams params{2048, 59, 32};
    const ConvDims d = ConvDims::depthwise_square(18, 2, 3);  // 256 * 9 = 2304 > 2048
    const Tensor x = random_tensor({2, 18, 18}, 32, rng);
    const Tensor w = random_tensor({2, 1, 3, 3}, 32, rng);
    const auto res = iron_dwconv_plain(x, w, d, params);
    CHECK(res.input_polys == 4);  // two row blocks per channel
    CHECK(res.y.data == conv2d_reference(x, w, d).data);
  }
}

TEST_CASE("fuzz: pack -> multiply -> extract equals the reference") {
  std::mt19937_64 rng(333);
  int ran = 0;
  while (ran < 200) {
    const int64_t r = std::array<int64_t, 3>{1, 3, 5}[rng() % 3];
    const int64_t h = r + static_cast<int64_t>(rng() % (17 - r));
    const int64_t w = r + static_cast<int64_t>(rng() % (17 - r));
    const int64_t c = 1 + static_cast<int64_t>(rng() % 64);
    const int64_t s = 1 + static_cast<int64_t>(rng() % 2);
    const int64_t n = (rng() & 1) ? 2048 : 4096;
    const ConvDims d{h, w, c, c, r, 1, s};
    const HeParams params{n, 59, 32};

    const Tensor x = random_tensor({c, h, w}, 32, rng);
    const Tensor wt = random_tensor({c, 1, r, r}, 32, rng);
    const auto res = falcon_dwconv_plain(x, wt, d, params);
    REQUIRE(res.y.data == conv2d_reference(x, wt, d).data);
    ++ran;
  }
}

TEST_CASE("layout planning rejects oversized geometries") {
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::depthwise_square(64, 4, 3);  // HW = 4096 > 2048
  CHECK_THROWS_AS(plan_packing(PackScheme::falcon_dw, d, params), capacity_error);

  const ConvDims ok = ConvDims::depthwise_square(5, 4, 3);
  CHECK_THROWS_AS(plan_packing(PackScheme::falcon_dw, ok, params, TileChoice{90, 2}),
                  capacity_error);
}

TEST_CASE("layout serializes to json") {
  const HeParams params{2048, 59, 32};
  const ConvDims d = ConvDims::depthwise_square(5, 8, 3);
  const auto layout = plan_packing(PackScheme::falcon_dw, d, params, TileChoice{8, 4});
  const std::string j = layout.to_json();
  CHECK(j.find("\"scheme\":\"falcon_dw\"") != std::string::npos);
  CHECK(j.find("\"k\":2") != std::string::npos);
}
