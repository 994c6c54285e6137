#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carelens/embed/net.hpp"

namespace carelens::embed {

class WeightsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kWeightsVersion = 1;

// Layout (all little-endian):
//   "SHNW" | u32 version | u32 input_channels | u32 input_size | f32 margin
//   | u32 stem_count | u32 light_count
//   then stem layers, light layers, head, each as
//   u32 kind | u32 stride | u32 padding | u32 frozen | u32 tensor_count
//   followed per tensor by u32 rank | u32 dims[rank] | f32 data[prod(dims)].
std::vector<std::uint8_t> serialize_weights(const EmbeddingNet& net);
EmbeddingNet deserialize_weights(std::span<const std::uint8_t> bytes);

void save_weights(const EmbeddingNet& net, const std::string& path);
EmbeddingNet load_weights(const std::string& path);

}  // namespace carelens::embed
