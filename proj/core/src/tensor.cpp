#include "falconpack/tensor.hpp"

#include <cstring>
#include <numeric>

#include <json.hpp>

namespace falconpack {

void ConvDims::validate() const {
  if (h < 1 || w < 1 || c < 1 || k < 1 || r < 1 || g < 1 || s < 1) {
    throw geometry_error("ConvDims: all extents must be positive");
  }
  if (h < r || w < r) {
    throw geometry_error("ConvDims: input smaller than kernel");
  }
  if (c % g != 0) {
    throw geometry_error("ConvDims: group size does not divide channel count");
  }
  if (out_h() < 1 || out_w() < 1) {
    throw geometry_error("ConvDims: empty output");
  }
}

void HeParams::validate() const {
  bool n_ok = false;
  for (int64_t cand : {2048, 4096, 8192, 16384, 32768}) {
    n_ok |= (n == cand);
  }
  if (!n_ok) throw parameter_mismatch("HeParams: N must be a power of two in [2048, 32768]");
  if (q_bits < 2 || q_bits > 64) throw parameter_mismatch("HeParams: q_bits out of range");
  if (l >= q_bits) throw parameter_mismatch("HeParams: l must be smaller than log2(q)");
}

Tensor::Tensor(std::vector<int64_t> shape_, uint32_t l) : shape(std::move(shape_)), bit_width(l) {
  data.assign(static_cast<size_t>(numel()), 0);
}

int64_t Tensor::numel() const {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return n;
}

static size_t flat_index(const std::vector<int64_t>& shape, std::initializer_list<int64_t> idx) {
  if (idx.size() != shape.size()) throw dimension_error("Tensor: rank mismatch in index");
  size_t flat = 0;
  size_t d = 0;
  for (int64_t i : idx) {
    if (i < 0 || i >= shape[d]) throw dimension_error("Tensor: index out of range");
    flat = flat * static_cast<size_t>(shape[d]) + static_cast<size_t>(i);
    ++d;
  }
  return flat;
}

uint64_t& Tensor::at(std::initializer_list<int64_t> idx) {
  return data[flat_index(shape, idx)];
}

uint64_t Tensor::at(std::initializer_list<int64_t> idx) const {
  return data[flat_index(shape, idx)];
}

void Tensor::fill_random(std::mt19937_64& rng) {
  const uint64_t m = mask();
  for (auto& v : data) v = rng() & m;
}

Tensor tensor_add(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape || a.bit_width != b.bit_width) {
    throw dimension_error("tensor_add: shape or width mismatch");
  }
  Tensor out = a;
  const uint64_t m = a.mask();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = (a.data[i] + b.data[i]) & m;
  return out;
}

Tensor conv2d_reference(const Tensor& x, const Tensor& w, const ConvDims& dims) {
  dims.validate();
  if (x.shape != std::vector<int64_t>{dims.c, dims.h, dims.w}) {
    throw dimension_error("conv2d_reference: input shape does not match dims");
  }
  if (w.shape != std::vector<int64_t>{dims.k, dims.g, dims.r, dims.r}) {
    throw dimension_error("conv2d_reference: weight shape does not match dims");
  }
  if (dims.k % (dims.c / dims.g) != 0) {
    throw geometry_error("conv2d_reference: filters do not divide evenly into groups");
  }

  const int64_t oh = dims.out_h(), ow = dims.out_w();
  const int64_t filters_per_group = dims.k / (dims.c / dims.g);
  Tensor y({dims.k, oh, ow}, x.bit_width);
  const uint64_t m = y.mask();

  for (int64_t k = 0; k < dims.k; ++k) {
    const int64_t group = k / filters_per_group;
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        uint64_t acc = 0;
        for (int64_t ch = 0; ch < dims.g; ++ch) {
          const int64_t c_in = group * dims.g + ch;
          for (int64_t l = 0; l < dims.r; ++l) {
            for (int64_t lp = 0; lp < dims.r; ++lp) {
              acc += x.at({c_in, i * dims.s + l, j * dims.s + lp}) * w.at({k, ch, l, lp});
            }
          }
        }
        y.at({k, i, j}) = acc & m;
      }
    }
  }
  return y;
}

Tensor pad_depthwise_to_standard(const Tensor& w, const ConvDims& dims) {
  if (!dims.depthwise()) {
    throw geometry_error("pad_depthwise_to_standard: dims are not depthwise");
  }
  if (w.shape != std::vector<int64_t>{dims.c, 1, dims.r, dims.r}) {
    throw dimension_error("pad_depthwise_to_standard: expected C x 1 x R x R weights");
  }
  Tensor out({dims.c, dims.c, dims.r, dims.r}, w.bit_width);
  for (int64_t k = 0; k < dims.c; ++k) {
    for (int64_t l = 0; l < dims.r; ++l) {
      for (int64_t lp = 0; lp < dims.r; ++lp) {
        out.at({k, k, l, lp}) = w.at({k, 0, l, lp});
      }
    }
  }
  return out;
}

Tensor im2col(const Tensor& x_slice, const ConvDims& dims) {
  if (x_slice.shape != std::vector<int64_t>{dims.g, dims.h, dims.w}) {
    throw dimension_error("im2col: expected one group slice G x H x W");
  }
  const int64_t oh = dims.out_h(), ow = dims.out_w();
  Tensor out({oh * ow, dims.g * dims.r * dims.r}, x_slice.bit_width);
  for (int64_t i = 0; i < oh; ++i) {
    for (int64_t j = 0; j < ow; ++j) {
      int64_t col = 0;
      for (int64_t ch = 0; ch < dims.g; ++ch) {
        for (int64_t l = 0; l < dims.r; ++l) {
          for (int64_t lp = 0; lp < dims.r; ++lp) {
            out.at({i * ow + j, col++}) = x_slice.at({ch, i * dims.s + l, j * dims.s + lp});
          }
        }
      }
    }
  }
  return out;
}

static void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

static uint64_t get_u64(const std::vector<uint8_t>& in, size_t& pos) {
  if (pos + 8 > in.size()) throw io_error("tensor_from_bytes: truncated input");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
  pos += 8;
  return v;
}

std::vector<uint8_t> tensor_to_bytes(const Tensor& t) {
  std::vector<uint8_t> out;
  out.reserve(8 * (2 + t.shape.size() + t.data.size()));
  put_u64(out, t.shape.size());
  for (int64_t e : t.shape) put_u64(out, static_cast<uint64_t>(e));
  put_u64(out, t.bit_width);
  for (uint64_t v : t.data) put_u64(out, v);
  return out;
}

Tensor tensor_from_bytes(const std::vector<uint8_t>& bytes) {
  size_t pos = 0;
  const uint64_t rank = get_u64(bytes, pos);
  if (rank > 8) throw io_error("tensor_from_bytes: implausible rank");
  Tensor t;
  t.shape.resize(rank);
  for (uint64_t d = 0; d < rank; ++d) t.shape[d] = static_cast<int64_t>(get_u64(bytes, pos));
  t.bit_width = static_cast<uint32_t>(get_u64(bytes, pos));
  const int64_t n = t.numel();
  if (n < 0) throw io_error("tensor_from_bytes: negative element count");
  t.data.resize(static_cast<size_t>(n));
  for (auto& v : t.data) v = get_u64(bytes, pos);
  if (pos != bytes.size()) throw io_error("tensor_from_bytes: trailing bytes");
  const uint64_t m = t.mask();
  for (uint64_t v : t.data) {
    if ((v & ~m) != 0) throw io_error("tensor_from_bytes: residue exceeds bit width");
  }
  return t;
}

std::string tensor_to_json(const Tensor& t) {
  nlohmann::json j;
  j["shape"] = t.shape;
  j["l"] = t.bit_width;
  j["data"] = t.data;
  return j.dump();
}

Tensor tensor_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Tensor t;
  t.shape = j.at("shape").get<std::vector<int64_t>>();
  t.bit_width = j.at("l").get<uint32_t>();
  t.data = j.at("data").get<std::vector<uint64_t>>();
  if (static_cast<int64_t>(t.data.size()) != t.numel()) {
    throw io_error("tensor_from_json: data length disagrees with shape");
  }
  return t;
}

}  // namespace falconpack
