#pragma once

#include <string>

#include "carelens/align/align.hpp"
#include "carelens/embed/tensor.hpp"

namespace carelens::align {

/// Reads a binary (P5) or ASCII (P2) PGM into a [1, H, W] tensor scaled to [0, 1].
embed::Tensor read_pgm(const std::string& path);
/// Writes a [1, H, W] tensor as 8-bit binary PGM, clamping to [0, 1].
void write_pgm(const std::string& path, const embed::Tensor& image);

/// First non-empty, non-comment line of a sidecar landmarks file.
Landmarks5 read_landmarks_file(const std::string& path);

}  // namespace carelens::align
