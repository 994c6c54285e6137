#include "carelens/embed/synthetic.hpp"

#include <cmath>
#include <random>

namespace carelens::embed {
namespace {

Tensor make_prototype(const SyntheticFaceConfig& cfg, std::size_t identity) {
  std::mt19937_64 rng(cfg.prototype_seed * 1000003ULL + identity);
  std::uniform_real_distribution<double> pos(0.15 * cfg.size, 0.85 * cfg.size);
  std::uniform_real_distribution<double> width(0.06 * cfg.size, 0.16 * cfg.size);
  std::uniform_real_distribution<double> amp(0.3, 1.0);
  std::uniform_int_distribution<int> sign(0, 3);

  Tensor t({cfg.channels, cfg.size, cfg.size});
  for (std::size_t b = 0; b < cfg.blobs; ++b) {
    const double cx = pos(rng), cy = pos(rng), sx = width(rng), sy = width(rng);
    const double a = amp(rng) * (sign(rng) == 0 ? -1.0 : 1.0);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      const double ca = a * (c == 0 ? 1.0 : amp(rng));
      for (std::size_t y = 0; y < cfg.size; ++y) {
        for (std::size_t x = 0; x < cfg.size; ++x) {
          const double dx = (static_cast<double>(x) - cx) / sx;
          const double dy = (static_cast<double>(y) - cy) / sy;
          t.at(c, y, x) += ca * std::exp(-0.5 * (dx * dx + dy * dy));
        }
      }
    }
  }
  return t;
}

}  // namespace

LabeledImages make_synthetic_faces(const SyntheticFaceConfig& cfg) {
  LabeledImages out;
  std::mt19937_64 rng(cfg.sample_seed);
  std::normal_distribution<double> noise(0.0, cfg.noise);
  std::uniform_real_distribution<double> bright(1.0 - cfg.brightness_jitter,
                                                1.0 + cfg.brightness_jitter);
  std::uniform_int_distribution<int> shift(-cfg.max_shift, cfg.max_shift);
  const auto n = static_cast<int>(cfg.size);

  for (std::size_t id = 0; id < cfg.identities; ++id) {
    const Tensor proto = make_prototype(cfg, id);
    for (std::size_t s = 0; s < cfg.samples_per_identity; ++s) {
      const int dx = shift(rng), dy = shift(rng);
      const double gain = bright(rng);
      Tensor img({cfg.channels, cfg.size, cfg.size});
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        for (int y = 0; y < n; ++y) {
          for (int x = 0; x < n; ++x) {
            const int sy = y - dy, sx = x - dx;
            double v = 0.0;
            if (sy >= 0 && sy < n && sx >= 0 && sx < n) {
              v = proto.at(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            }
            img.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                gain * v + noise(rng);
          }
        }
      }
      out.images.push_back(std::move(img));
      out.labels.push_back(cfg.first_label + static_cast<int>(id));
    }
  }
  return out;
}

}  // namespace carelens::embed
