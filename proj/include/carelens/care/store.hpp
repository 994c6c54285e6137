#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "carelens/care/resident.hpp"

namespace carelens::care {

struct StoreSnapshot {
  ResidentMap residents;
  std::uint64_t version = 0;
  std::string source_stamp;  // UTC time the snapshot was published

  const ResidentRecord* find(std::uint32_t id) const;
};

/// Holds the published snapshot. Readers take a shared_ptr and keep using it for the
/// whole request; sync builds a complete replacement before swapping it in.
class ResidentStore {
 public:
  ResidentStore();

  std::shared_ptr<const StoreSnapshot> current() const;

  /// Full replace from an upstream JSON file. On any failure throws StoreError and
  /// the previous snapshot stays published. When `persist_to` is set the validated
  /// upstream bytes are written there with an atomic rename before publishing.
  std::shared_ptr<const StoreSnapshot> sync(const std::string& upstream_path,
                                            const std::optional<std::string>& persist_to = std::nullopt);

  /// Full replace from an in-memory map.
  std::shared_ptr<const StoreSnapshot> publish(ResidentMap residents);

  std::optional<std::string> last_error() const;

 private:
  mutable std::mutex mu_;
  std::mutex sync_mu_;  // serializes writers
  std::shared_ptr<const StoreSnapshot> snapshot_;
  std::optional<std::string> last_error_;
};

std::string utc_stamp_now();

}  // namespace carelens::care
