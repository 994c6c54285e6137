#include <cmath>

#include "carelens/align/align.hpp"

namespace carelens::align {
namespace {

// Slack for sample points that land on the border up to rounding.
constexpr double kEdge = 1e-9;

}  // namespace

embed::Tensor warp(const embed::Tensor& image, const SimilarityTransform& t, std::size_t out_size) {
  if (image.rank() != 3) throw AlignError("warp expects a [C, H, W] image");
  if (out_size == 0) throw AlignError("output size must be positive");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const SimilarityTransform inv = t.inverse();
  const double ic = inv.scale * std::cos(inv.rotation), is = inv.scale * std::sin(inv.rotation);

  auto sample = [&](std::size_t ch, long y, long x) -> double {
    if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) return 0.0;
    return image.at(ch, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  };

  embed::Tensor out({c, out_size, out_size});
  for (std::size_t oy = 0; oy < out_size; ++oy) {
    for (std::size_t ox = 0; ox < out_size; ++ox) {
      const double x = static_cast<double>(ox), y = static_cast<double>(oy);
      const double sx = ic * x - is * y + inv.tx;
      const double sy = is * x + ic * y + inv.ty;
      if (sx < -kEdge || sy < -kEdge || sx > static_cast<double>(w - 1) + kEdge ||
          sy > static_cast<double>(h - 1) + kEdge) {
        continue;
      }
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double v = (1.0 - ax) * (1.0 - ay) * sample(ch, y0, x0);
        if (ax != 0.0) v += ax * (1.0 - ay) * sample(ch, y0, x0 + 1);
        if (ay != 0.0) v += (1.0 - ax) * ay * sample(ch, y0 + 1, x0);
        if (ax != 0.0 && ay != 0.0) v += ax * ay * sample(ch, y0 + 1, x0 + 1);
        out.at(ch, oy, ox) = v;
      }
    }
  }
  return out;
}

embed::Tensor align_face(const embed::Tensor& image, const Landmarks5& landmarks,
                         std::size_t crop_size) {
  if (image.rank() != 3) throw AlignError("align_face expects a [C, H, W] image");
  landmarks.validate(image.dim(2), image.dim(1));
  const auto t = estimate_transform(landmarks, CanonicalTemplate::standard(crop_size));
  return warp(image, t, crop_size);
}

}  // namespace carelens::align
