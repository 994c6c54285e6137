#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "carelens/embed/tensor.hpp"

namespace carelens::align {

class AlignError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Five facial landmarks in pixel units.
/// Order: left eye, right eye, nose, left mouth corner, right mouth corner.
struct Landmarks5 {
  enum Index : std::size_t { kLeftEye = 0, kRightEye, kNose, kLeftMouth, kRightMouth };
  std::array<Point2, 5> points{};

  /// Parses "x1 y1 ... x5 y5" (whitespace or comma separated).
  static Landmarks5 parse(std::string_view text);
  /// Checks eye order, and bounds when width/height are non-zero.
  void validate(std::size_t width = 0, std::size_t height = 0) const;
  std::string to_string() const;
};

/// p -> scale * R(rotation) * p + (tx, ty)
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;  // radians, counter-clockwise in (x, y)
  double tx = 0.0;
  double ty = 0.0;

  Point2 apply(Point2 p) const noexcept;
  SimilarityTransform inverse() const;
  /// (this o other)(p) = this(other(p))
  SimilarityTransform compose(const SimilarityTransform& other) const noexcept;
};

/// Frontal landmark targets for a size x size crop.
struct CanonicalTemplate {
  std::size_t size = 112;
  std::array<Point2, 5> points{};

  /// Conventional 5-point frontal template defined on 112 x 112 and rescaled.
  static CanonicalTemplate standard(std::size_t crop_size = 112);
};

/// Closed-form least-squares similarity fit: minimizes sum |s R src_i + t - dst_i|^2.
/// Throws AlignError when the source points have zero spread.
SimilarityTransform estimate_transform(std::span<const Point2> src, std::span<const Point2> dst);
SimilarityTransform estimate_transform(const Landmarks5& src, const CanonicalTemplate& dst);

double transform_residual(const SimilarityTransform& t, std::span<const Point2> src,
                          std::span<const Point2> dst);

/// Inverse-mapped bilinear resampling of a [C, H, W] image into [C, out, out].
/// Neighbours outside the source image read as zero.
embed::Tensor warp(const embed::Tensor& image, const SimilarityTransform& t, std::size_t out_size);

/// Estimate transform to the canonical template and warp, i.e. frontalize.
embed::Tensor align_face(const embed::Tensor& image, const Landmarks5& landmarks,
                         std::size_t crop_size);

enum class YawBucket { kFront, kMid, kWide, kOutOfRange };

std::string_view to_string(YawBucket b) noexcept;

/// Signed nose offset from the eye midline in half-interocular units.
double yaw_ratio(const Landmarks5& l);
/// |ratio| <= 0.33 front (<=20 deg), <= 0.66 mid (<=40), <= 1.0 wide (<=60), else out of range.
YawBucket estimate_yaw_bucket(const Landmarks5& l);
YawBucket yaw_bucket_for_ratio(double ratio) noexcept;

}  // namespace carelens::align
