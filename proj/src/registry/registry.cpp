#include "carelens/registry/registry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "carelens/util/le_bytes.hpp"

namespace carelens::registry {
namespace {

constexpr char kMagic[4] = {'S', 'H', 'F', 'R'};

// q / 127 for every code, indexed by q + 128.
const std::array<double, 256>& dequant_table() {
  static const auto table = [] {
    std::array<double, 256> t{};
    for (int q = -128; q < 128; ++q) t[static_cast<std::size_t>(q + 128)] = q / kQuantScale;
    return t;
  }();
  return table;
}

void check_threshold(double threshold_sq) {
  if (!(threshold_sq >= 0.0)) throw std::invalid_argument("threshold_sq must be >= 0");
}

void check_order(const std::vector<FaceRecord>& records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].id == records[i - 1].id) {
      throw RegistryError(RegistryErrorKind::kDuplicateId,
                          "duplicate record id " + std::to_string(records[i].id));
    }
    if (records[i].id < records[i - 1].id) {
      throw RegistryError(RegistryErrorKind::kUnsorted,
                          "record ids not ascending at index " + std::to_string(i));
    }
  }
}

}  // namespace

Registry Registry::from_records(std::vector<FaceRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const FaceRecord& a, const FaceRecord& b) { return a.id < b.id; });
  check_order(records);
  return Registry(std::move(records));
}

Registry Registry::from_sorted(std::vector<FaceRecord> records) {
  check_order(records);
  return Registry(std::move(records));
}

const FaceRecord* Registry::lookup_by_id(std::uint32_t id) const noexcept {
  const FaceRecord* lo = records_.data();
  const FaceRecord* hi = lo + records_.size();
  while (lo < hi) {
    const FaceRecord* mid = lo + (hi - lo) / 2;
    if (mid->id < id) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return (lo != records_.data() + records_.size() && lo->id == id) ? lo : nullptr;
}

std::optional<MatchResult> Registry::identify(const embed::Embedding& probe,
                                              double threshold_sq) const {
  check_threshold(threshold_sq);
  if (records_.empty()) return std::nullopt;
  const auto& table = dequant_table();
  const auto& p = probe.values();
  const FaceRecord* best = nullptr;
  double best_d = 0.0;
  for (const auto& rec : records_) {
    double d = 0.0;
    for (std::size_t i = 0; i < kQuantDim; ++i) {
      const double diff = p[i] - table[static_cast<std::size_t>(rec.quant[i] + 128)];
      d += diff * diff;
    }
    if (!best || d < best_d) {
      best = &rec;
      best_d = d;
    }
  }
  if (best_d > threshold_sq) return std::nullopt;
  return MatchResult{best->id, best_d};
}

std::optional<MatchResult> Registry::identify_quantized(const QuantEmbedding& probe,
                                                        double threshold_sq) const {
  check_threshold(threshold_sq);
  if (records_.empty()) return std::nullopt;
  const FaceRecord* best = nullptr;
  std::int32_t best_raw = 0;
  for (const auto& rec : records_) {
    const std::int32_t raw = quantized_distance_raw(probe, rec.quant);
    if (!best || raw < best_raw) {
      best = &rec;
      best_raw = raw;
    }
  }
  const double d = static_cast<double>(best_raw) / (kQuantScale * kQuantScale);
  if (d > threshold_sq) return std::nullopt;
  return MatchResult{best->id, d};
}

Registry Registry::upsert(const FaceRecord& record) const {
  std::vector<FaceRecord> next = records_;
  auto it = std::lower_bound(next.begin(), next.end(), record.id,
                             [](const FaceRecord& r, std::uint32_t id) { return r.id < id; });
  if (it != next.end() && it->id == record.id) {
    *it = record;
  } else {
    next.insert(it, record);
  }
  return Registry(std::move(next));
}

Registry Registry::without(std::uint32_t id) const {
  std::vector<FaceRecord> next;
  next.reserve(records_.size());
  for (const auto& r : records_) {
    if (r.id != id) next.push_back(r);
  }
  return Registry(std::move(next));
}

std::vector<std::uint8_t> write_registry(const Registry& registry) {
  util::ByteWriter w;
  w.bytes().reserve(kHeaderBytes + kRecordBytes * registry.size());
  w.put_tag(std::string_view(kMagic, 4));
  w.put_u32(kRegistryVersion);
  w.put_u32(static_cast<std::uint32_t>(registry.size()));
  for (const auto& rec : registry.records()) {
    w.put_u32(rec.id);
    for (std::int8_t q : rec.quant) w.put_i8(q);
  }
  return w.take();
}

Registry read_registry(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw RegistryError(RegistryErrorKind::kTruncated,
                        "registry header needs 12 bytes, got " + std::to_string(bytes.size()));
  }
  util::ByteReader r(bytes);
  if (std::memcmp(r.take(4).data(), kMagic, 4) != 0) {
    throw RegistryError(RegistryErrorKind::kBadMagic, "bad registry magic");
  }
  const std::uint32_t version = r.get_u32();
  if (version != kRegistryVersion) {
    throw RegistryError(RegistryErrorKind::kVersionMismatch,
                        "unsupported registry version " + std::to_string(version));
  }
  const std::uint32_t count = r.get_u32();
  const std::size_t need = static_cast<std::size_t>(count) * kRecordBytes;
  if (r.remaining() < need) {
    throw RegistryError(RegistryErrorKind::kTruncated,
                        "registry declares " + std::to_string(count) + " records but holds " +
                            std::to_string(r.remaining()) + " payload bytes");
  }
  if (r.remaining() > need) {
    throw RegistryError(RegistryErrorKind::kTrailingBytes,
                        std::to_string(r.remaining() - need) + " bytes after the last record");
  }
  std::vector<FaceRecord> records(count);
  for (auto& rec : records) {
    rec.id = r.get_u32();
    auto q = r.take(kQuantDim);
    std::memcpy(rec.quant.data(), q.data(), kQuantDim);
    for (std::int8_t v : rec.quant) {
      if (v == -128) {
        throw RegistryError(RegistryErrorKind::kInvalidCode,
                            "record " + std::to_string(rec.id) + " holds code -128");
      }
    }
  }
  return Registry::from_sorted(std::move(records));
}

void save_registry(const Registry& registry, const std::string& path) {
  util::write_file_atomic(path, write_registry(registry));
}

Registry load_registry(const std::string& path) {
  return read_registry(util::read_file_bytes(path));
}

}  // namespace carelens::registry
