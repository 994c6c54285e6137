#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carelens/embed/embedding.hpp"
#include "carelens/registry/quant.hpp"

namespace carelens::registry {

inline constexpr std::size_t kHeaderBytes = 12;
inline constexpr std::size_t kRecordBytes = 4 + kQuantDim;  // 132
inline constexpr std::uint32_t kRegistryVersion = 1;

struct FaceRecord {
  std::uint32_t id = 0;
  QuantEmbedding quant{};

  bool operator==(const FaceRecord&) const = default;
};

struct MatchResult {
  std::uint32_t id = 0;
  double distance_sq = 0.0;
};

enum class RegistryErrorKind {
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kTrailingBytes,
  kUnsorted,
  kDuplicateId,
  kInvalidCode,  // a quantized component of -128
};

class RegistryError : public std::runtime_error {
 public:
  RegistryError(RegistryErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  RegistryErrorKind kind() const noexcept { return kind_; }

 private:
  RegistryErrorKind kind_;
};

/// Immutable, id-sorted collection of 132-byte face records.
class Registry {
 public:
  Registry() = default;

  /// Sorts by id; throws kDuplicateId when an id repeats.
  static Registry from_records(std::vector<FaceRecord> records);
  /// Requires strictly ascending ids (kUnsorted / kDuplicateId otherwise).
  static Registry from_sorted(std::vector<FaceRecord> records);

  std::span<const FaceRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// Binary search over the id column. Null when absent.
  const FaceRecord* lookup_by_id(std::uint32_t id) const noexcept;

  /// Full scan of squared Euclidean distance from the probe to every dequantized
  /// record. Returns the nearest record (smallest id on ties) when its distance is
  /// <= threshold_sq, otherwise no match.
  std::optional<MatchResult> identify(const embed::Embedding& probe, double threshold_sq) const;

  /// Same scan with a quantized probe, accumulated in the integer domain.
  std::optional<MatchResult> identify_quantized(const QuantEmbedding& probe,
                                                double threshold_sq) const;

  /// Copy with `record` inserted or replacing the record of the same id.
  Registry upsert(const FaceRecord& record) const;
  /// Copy without `id` (unchanged when absent).
  Registry without(std::uint32_t id) const;

 private:
  explicit Registry(std::vector<FaceRecord> sorted) : records_(std::move(sorted)) {}

  std::vector<FaceRecord> records_;
};

// File layout (little-endian):
//   "SHFR" | u32 version | u32 count | count x (u32 id | 128 x i8)
std::vector<std::uint8_t> write_registry(const Registry& registry);
Registry read_registry(std::span<const std::uint8_t> bytes);

void save_registry(const Registry& registry, const std::string& path);
Registry load_registry(const std::string& path);

}  // namespace carelens::registry
