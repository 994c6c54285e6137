#pragma once

#include <cstddef>
#include <cstdint>

#include "carelens/embed/train.hpp"

namespace carelens::embed {

/// Desk-scale stand-in for a face corpus: each identity is a fixed prototype made of
/// Gaussian blobs, and each sample is that prototype with a small shift, a brightness
/// change, and additive pixel noise.
struct SyntheticFaceConfig {
  std::size_t identities = 32;
  std::size_t samples_per_identity = 20;
  std::size_t size = 32;
  std::size_t channels = 1;
  std::size_t blobs = 8;
  double noise = 0.1;
  double brightness_jitter = 0.1;
  int max_shift = 1;
  int first_label = 0;
  std::uint64_t prototype_seed = 7;  // fixes who the identities are
  std::uint64_t sample_seed = 11;    // fixes which samples are drawn
};

LabeledImages make_synthetic_faces(const SyntheticFaceConfig& config);

}  // namespace carelens::embed
