#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "carelens/align/align.hpp"
#include "carelens/care/display.hpp"
#include "carelens/care/speech.hpp"
#include "carelens/care/store.hpp"
#include "carelens/embed/net.hpp"
#include "carelens/registry/registry.hpp"
#include "json.hpp"

namespace carelens::care {

/// A request the service cannot act on (bad probe shape, bad landmarks, ...).
class RequestError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ServiceConfig {
  double threshold_sq = 1.0;
  DisplayOptions display;
};

enum class IdentifyStatus { kMatch, kNoMatch, kRecordMissing };

struct IdentifyResponse {
  IdentifyStatus status = IdentifyStatus::kNoMatch;
  std::uint64_t snapshot_version = 0;
  std::optional<registry::MatchResult> match;
  std::optional<ResidentRecord> record;
  DisplayPayload display;
  std::optional<SpeechScript> speech;
};

class CareService {
 public:
  CareService(embed::EmbeddingNet net, registry::Registry reg, std::shared_ptr<ResidentStore> store,
              ReadingDictionary dict, ServiceConfig config);

  IdentifyResponse identify(const embed::Embedding& probe,
                            std::chrono::system_clock::time_point now) const;

  /// Aligns with `landmarks` when given; otherwise the image must already be a crop of
  /// the network's input size.
  IdentifyResponse identify_image(const embed::Tensor& image,
                                  const std::optional<align::Landmarks5>& landmarks,
                                  std::chrono::system_clock::time_point now) const;

  embed::Embedding embed_image(const embed::Tensor& image,
                               const std::optional<align::Landmarks5>& landmarks) const;

  const registry::Registry& registry() const noexcept { return registry_; }
  const ResidentStore& store() const noexcept { return *store_; }
  ResidentStore& store() noexcept { return *store_; }
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  embed::EmbeddingNet net_;
  registry::Registry registry_;
  std::shared_ptr<ResidentStore> store_;
  ReadingDictionary dict_;
  ServiceConfig config_;
};

nlohmann::ordered_json to_json(const IdentifyResponse& r);

}  // namespace carelens::care
