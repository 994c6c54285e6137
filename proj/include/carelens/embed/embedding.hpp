#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace carelens::embed {

inline constexpr std::size_t kEmbeddingDim = 128;

/// 128-d face descriptor with unit L2 norm.
class Embedding {
 public:
  using Values = std::array<double, kEmbeddingDim>;

  Embedding() = default;

  /// Takes values that are already unit norm (|norm - 1| <= 1e-6); throws otherwise.
  static Embedding from_unit(std::span<const double> values);
  /// Scales an arbitrary non-zero finite vector to unit norm.
  static Embedding normalized(std::span<const double> values);

  const Values& values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  Values values_{};
};

double squared_distance(const Embedding& a, const Embedding& b) noexcept;

}  // namespace carelens::embed
