#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "carelens/embed/embedding.hpp"

namespace carelens::registry {

inline constexpr std::size_t kQuantDim = embed::kEmbeddingDim;
inline constexpr double kQuantScale = 127.0;

/// Symmetric signed-byte code: q = round_half_away(e * 127), clamped to [-127, 127].
using QuantEmbedding = std::array<std::int8_t, kQuantDim>;

/// Throws std::invalid_argument on a non-finite component or wrong length.
QuantEmbedding quantize(std::span<const double> values);
QuantEmbedding quantize(const embed::Embedding& e);

std::array<double, kQuantDim> dequantize(const QuantEmbedding& q) noexcept;

/// Exact integer sum of squared code differences; at most 254^2 * 128 < 2^31.
std::int32_t quantized_distance_raw(const QuantEmbedding& a, const QuantEmbedding& b) noexcept;
/// quantized_distance_raw / 127^2, the squared distance between the dequantized vectors.
double quantized_distance_sq(const QuantEmbedding& a, const QuantEmbedding& b) noexcept;

}  // namespace carelens::registry
