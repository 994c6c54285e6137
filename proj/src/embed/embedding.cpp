#include "carelens/embed/embedding.hpp"

#include <cmath>
#include <string>

namespace carelens::embed {
namespace {

void require_shape(std::span<const double> values) {
  if (values.size() != kEmbeddingDim) {
    throw std::invalid_argument("embedding must have " + std::to_string(kEmbeddingDim) +
                                " components, got " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding component is not finite");
  }
}

double norm_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Embedding Embedding::from_unit(std::span<const double> values) {
  require_shape(values);
  const double n = norm_of(values);
  if (std::abs(n - 1.0) > 1e-6) {
    throw std::invalid_argument("embedding is not unit norm (norm " + std::to_string(n) + ")");
  }
  Embedding e;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) e.values_[i] = values[i];
  return e;
}

Embedding Embedding::normalized(std::span<const double> values) {
  require_shape(values);
  const double n = norm_of(values);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  }
  Embedding e;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) e.values_[i] = values[i] / n;
  return e;
}

double squared_distance(const Embedding& a, const Embedding& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace carelens::embed
