#include <cmath>

#include "carelens/align/align.hpp"

namespace carelens::align {

std::string_view to_string(YawBucket b) noexcept {
  switch (b) {
    case YawBucket::kFront: return "front<=20";
    case YawBucket::kMid: return "mid<=40";
    case YawBucket::kWide: return "wide<=60";
    case YawBucket::kOutOfRange: return "out-of-range";
  }
  return "out-of-range";
}

double yaw_ratio(const Landmarks5& l) {
  const Point2 le = l.points[Landmarks5::kLeftEye], re = l.points[Landmarks5::kRightEye];
  const Point2 nose = l.points[Landmarks5::kNose];
  const double interocular = std::hypot(re.x - le.x, re.y - le.y);
  if (!(interocular > 0.0)) throw AlignError("zero interocular distance");
  const double mid_x = 0.5 * (le.x + re.x);
  return (nose.x - mid_x) / (0.5 * interocular);
}

YawBucket yaw_bucket_for_ratio(double ratio) noexcept {
  const double r = std::abs(ratio);
  if (r <= 0.33) return YawBucket::kFront;
  if (r <= 0.66) return YawBucket::kMid;
  if (r <= 1.0) return YawBucket::kWide;
  return YawBucket::kOutOfRange;
}

YawBucket estimate_yaw_bucket(const Landmarks5& l) { return yaw_bucket_for_ratio(yaw_ratio(l)); }

}  // namespace carelens::align
