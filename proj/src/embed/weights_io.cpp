#include "carelens/embed/weights_io.hpp"

#include <cmath>
#include <cstring>

#include "carelens/util/le_bytes.hpp"

namespace carelens::embed {
namespace {

using util::ByteReader;
using util::ByteWriter;

enum class LayerKind : std::uint32_t { kConv = 1, kDwsep = 2, kDense = 3 };

void put_tensor(ByteWriter& w, const Tensor& t) {
  w.put_u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.put_u32(static_cast<std::uint32_t>(d));
  for (double v : t.data()) w.put_f32(static_cast<float>(v));
}

Tensor get_tensor(ByteReader& r) {
  const std::uint32_t rank = r.get_u32();
  if (rank == 0 || rank > 4) throw WeightsFormatError("bad tensor rank " + std::to_string(rank));
  std::vector<std::size_t> shape(rank);
  std::size_t n = 1;
  for (auto& d : shape) {
    d = r.get_u32();
    if (d == 0 || d > (1u << 24)) throw WeightsFormatError("bad tensor dimension");
    n *= d;
  }
  if (n * 4 > r.remaining()) throw WeightsFormatError("truncated tensor data");
  std::vector<double> data(n);
  for (auto& v : data) {
    v = r.get_f32();
    if (!std::isfinite(v)) throw WeightsFormatError("non-finite weight");
  }
  return Tensor(std::move(shape), std::move(data));
}

void put_header(ByteWriter& w, LayerKind kind, std::size_t stride, std::size_t padding,
                bool frozen, std::uint32_t tensors) {
  w.put_u32(static_cast<std::uint32_t>(kind));
  w.put_u32(static_cast<std::uint32_t>(stride));
  w.put_u32(static_cast<std::uint32_t>(padding));
  w.put_u32(frozen ? 1u : 0u);
  w.put_u32(tensors);
}

struct LayerHeader {
  LayerKind kind;
  std::uint32_t stride, padding, frozen, tensors;
};

LayerHeader get_header(ByteReader& r, LayerKind expected, std::uint32_t expected_tensors) {
  LayerHeader h{static_cast<LayerKind>(r.get_u32()), r.get_u32(), r.get_u32(), r.get_u32(),
                r.get_u32()};
  if (h.kind != expected) throw WeightsFormatError("unexpected layer kind");
  if (h.tensors != expected_tensors) throw WeightsFormatError("unexpected tensor count");
  return h;
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const EmbeddingNet& net) {
  net.validate();
  ByteWriter w;
  w.put_tag("SHNW");
  w.put_u32(kWeightsVersion);
  w.put_u32(static_cast<std::uint32_t>(net.input_channels));
  w.put_u32(static_cast<std::uint32_t>(net.input_size));
  w.put_f32(static_cast<float>(net.margin_alpha));
  w.put_u32(static_cast<std::uint32_t>(net.stem.size()));
  w.put_u32(static_cast<std::uint32_t>(net.light_blocks.size()));
  for (const auto& l : net.stem) {
    put_header(w, LayerKind::kConv, l.stride, l.padding, l.frozen, 2);
    put_tensor(w, l.kernel);
    put_tensor(w, l.bias);
  }
  for (const auto& l : net.light_blocks) {
    put_header(w, LayerKind::kDwsep, l.stride, l.padding, false, 3);
    put_tensor(w, l.depthwise_kernel);
    put_tensor(w, l.pointwise_kernel);
    put_tensor(w, l.bias);
  }
  put_header(w, LayerKind::kDense, 1, 0, false, 2);
  put_tensor(w, net.head.weight);
  put_tensor(w, net.head.bias);
  return w.take();
}

EmbeddingNet deserialize_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  try {
    auto magic = r.take(4);
    if (std::memcmp(magic.data(), "SHNW", 4) != 0) throw WeightsFormatError("bad weights magic");
    const std::uint32_t version = r.get_u32();
    if (version != kWeightsVersion) {
      throw WeightsFormatError("unsupported weights version " + std::to_string(version));
    }
    EmbeddingNet net;
    net.input_channels = r.get_u32();
    net.input_size = r.get_u32();
    net.margin_alpha = r.get_f32();
    const std::uint32_t stem_count = r.get_u32();
    const std::uint32_t light_count = r.get_u32();
    if (stem_count > 64 || light_count > 64) throw WeightsFormatError("implausible layer count");
    for (std::uint32_t i = 0; i < stem_count; ++i) {
      auto h = get_header(r, LayerKind::kConv, 2);
      ConvLayer l;
      l.stride = h.stride;
      l.padding = h.padding;
      l.frozen = h.frozen != 0;
      l.kernel = get_tensor(r);
      l.bias = get_tensor(r);
      net.stem.push_back(std::move(l));
    }
    for (std::uint32_t i = 0; i < light_count; ++i) {
      auto h = get_header(r, LayerKind::kDwsep, 3);
      DepthwiseSeparableLayer l;
      l.stride = h.stride;
      l.padding = h.padding;
      l.depthwise_kernel = get_tensor(r);
      l.pointwise_kernel = get_tensor(r);
      l.bias = get_tensor(r);
      net.light_blocks.push_back(std::move(l));
    }
    get_header(r, LayerKind::kDense, 2);
    net.head.weight = get_tensor(r);
    net.head.bias = get_tensor(r);
    if (r.remaining() != 0) throw WeightsFormatError("trailing bytes after weights");
    net.validate();
    return net;
  } catch (const util::TruncatedInput& e) {
    throw WeightsFormatError(std::string("truncated weights file: ") + e.what());
  } catch (const ShapeError& e) {
    throw WeightsFormatError(std::string("inconsistent weights: ") + e.what());
  }
}

void save_weights(const EmbeddingNet& net, const std::string& path) {
  util::write_file_atomic(path, serialize_weights(net));
}

EmbeddingNet load_weights(const std::string& path) {
  return deserialize_weights(util::read_file_bytes(path));
}

}  // namespace carelens::embed
