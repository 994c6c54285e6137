#include "carelens/registry/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace carelens::registry {

QuantEmbedding quantize(std::span<const double> values) {
  if (values.size() != kQuantDim) throw std::invalid_argument("quantize expects 128 components");
  QuantEmbedding q{};
  for (std::size_t i = 0; i < kQuantDim; ++i) {
    if (!std::isfinite(values[i])) throw std::invalid_argument("cannot quantize a non-finite component");
    const long r = std::lround(values[i] * kQuantScale);  // half away from zero
    q[i] = static_cast<std::int8_t>(std::clamp(r, -127L, 127L));
  }
  return q;
}

QuantEmbedding quantize(const embed::Embedding& e) { return quantize(e.values()); }

std::array<double, kQuantDim> dequantize(const QuantEmbedding& q) noexcept {
  std::array<double, kQuantDim> out{};
  for (std::size_t i = 0; i < kQuantDim; ++i) out[i] = q[i] / kQuantScale;
  return out;
}

std::int32_t quantized_distance_raw(const QuantEmbedding& a, const QuantEmbedding& b) noexcept {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < kQuantDim; ++i) {
    const std::int32_t d = static_cast<std::int32_t>(a[i]) - static_cast<std::int32_t>(b[i]);
    acc += d * d;
  }
  return acc;
}

double quantized_distance_sq(const QuantEmbedding& a, const QuantEmbedding& b) noexcept {
  return static_cast<double>(quantized_distance_raw(a, b)) / (kQuantScale * kQuantScale);
}

}  // namespace carelens::registry
