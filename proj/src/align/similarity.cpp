#include <cmath>
#include <sstream>

#include "carelens/align/align.hpp"

namespace carelens::align {

Landmarks5 Landmarks5::parse(std::string_view text) {
  std::string s(text);
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  Landmarks5 l;
  for (auto& p : l.points) {
    if (!(in >> p.x >> p.y)) throw AlignError("landmarks need 10 numbers: x1 y1 ... x5 y5");
  }
  std::string extra;
  if (in >> extra) throw AlignError("landmarks have more than 10 numbers");
  for (const auto& p : l.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw AlignError("landmark is not finite");
  }
  return l;
}

void Landmarks5::validate(std::size_t width, std::size_t height) const {
  if (!(points[kRightEye].x > points[kLeftEye].x)) {
    throw AlignError("right eye must be to the right of the left eye");
  }
  if (width == 0 || height == 0) return;
  for (const auto& p : points) {
    if (p.x < 0.0 || p.y < 0.0 || p.x > static_cast<double>(width - 1) ||
        p.y > static_cast<double>(height - 1)) {
      throw AlignError("landmark (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                       ") lies outside the image");
    }
  }
}

std::string Landmarks5::to_string() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) os << ' ';
    os << points[i].x << ' ' << points[i].y;
  }
  return os.str();
}

Point2 SimilarityTransform::apply(Point2 p) const noexcept {
  const double c = scale * std::cos(rotation), s = scale * std::sin(rotation);
  return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
}

SimilarityTransform SimilarityTransform::inverse() const {
  if (!(scale > 0.0)) throw AlignError("similarity scale must be positive");
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = -rotation;
  const Point2 t = inv.apply({tx, ty});
  inv.tx = -t.x;
  inv.ty = -t.y;
  return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& other) const noexcept {
  SimilarityTransform r;
  r.scale = scale * other.scale;
  r.rotation = rotation + other.rotation;
  const Point2 t = apply({other.tx, other.ty});
  r.tx = t.x;
  r.ty = t.y;
  return r;
}

CanonicalTemplate CanonicalTemplate::standard(std::size_t crop_size) {
  if (crop_size == 0) throw AlignError("crop size must be positive");
  static constexpr std::array<Point2, 5> kBase{
      {{38.3, 51.7}, {73.5, 51.5}, {56.0, 71.7}, {41.5, 92.4}, {70.7, 92.2}}};
  CanonicalTemplate t;
  t.size = crop_size;
  const double f = static_cast<double>(crop_size) / 112.0;
  for (std::size_t i = 0; i < 5; ++i) t.points[i] = {kBase[i].x * f, kBase[i].y * f};
  return t;
}

SimilarityTransform estimate_transform(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size() || src.size() < 2) {
    throw AlignError("need matching point sets with at least two points");
  }
  const double n = static_cast<double>(src.size());
  Point2 ms, md;
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms.x += src[i].x;
    ms.y += src[i].y;
    md.x += dst[i].x;
    md.y += dst[i].y;
  }
  ms = {ms.x / n, ms.y / n};
  md = {md.x / n, md.y / n};

  // With centred points, s*cos = sum(p.q)/sum|p|^2 and s*sin = sum(p x q)/sum|p|^2.
  double var = 0.0, dot = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double px = src[i].x - ms.x, py = src[i].y - ms.y;
    const double qx = dst[i].x - md.x, qy = dst[i].y - md.y;
    var += px * px + py * py;
    dot += px * qx + py * qy;
    cross += px * qy - py * qx;
  }
  if (!(var > 0.0)) throw AlignError("source landmarks are degenerate (zero spread)");
  const double a = dot / var, b = cross / var;
  SimilarityTransform t;
  t.scale = std::hypot(a, b);
  if (!(t.scale > 0.0)) throw AlignError("target landmarks are degenerate (zero spread)");
  t.rotation = std::atan2(b, a);
  t.tx = md.x - (a * ms.x - b * ms.y);
  t.ty = md.y - (b * ms.x + a * ms.y);
  return t;
}

SimilarityTransform estimate_transform(const Landmarks5& src, const CanonicalTemplate& dst) {
  return estimate_transform(std::span<const Point2>(src.points), std::span<const Point2>(dst.points));
}

double transform_residual(const SimilarityTransform& t, std::span<const Point2> src,
                          std::span<const Point2> dst) {
  double r = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point2 p = t.apply(src[i]);
    r += (p.x - dst[i].x) * (p.x - dst[i].x) + (p.y - dst[i].y) * (p.y - dst[i].y);
  }
  return r;
}

}  // namespace carelens::align
