#include "carelens/care/service.hpp"

namespace carelens::care {

CareService::CareService(embed::EmbeddingNet net, registry::Registry reg,
                         std::shared_ptr<ResidentStore> store, ReadingDictionary dict,
                         ServiceConfig config)
    : net_(std::move(net)),
      registry_(std::move(reg)),
      store_(std::move(store)),
      dict_(std::move(dict)),
      config_(config) {
  if (!store_) throw std::invalid_argument("service needs a store");
  if (!(config_.threshold_sq >= 0.0)) throw std::invalid_argument("threshold_sq must be >= 0");
  net_.validate();
}

IdentifyResponse CareService::identify(const embed::Embedding& probe,
                                       std::chrono::system_clock::time_point now) const {
  // One snapshot for the whole request.
  const auto snap = store_->current();
  IdentifyResponse out;
  out.snapshot_version = snap->version;
  out.match = registry_.identify(probe, config_.threshold_sq);
  if (!out.match) {
    out.status = IdentifyStatus::kNoMatch;
    return out;
  }
  const ResidentRecord* rec = snap->find(out.match->id);
  if (!rec) {
    out.status = IdentifyStatus::kRecordMissing;
    return out;
  }
  out.status = IdentifyStatus::kMatch;
  out.record = *rec;
  out.display = render_display(*rec, now, config_.display);
  out.speech = render_speech(out.display, dict_, rec->name_reading, config_.display.language);
  return out;
}

embed::Embedding CareService::embed_image(const embed::Tensor& image,
                                          const std::optional<align::Landmarks5>& landmarks) const {
  if (image.rank() != 3 || image.dim(0) != net_.input_channels) {
    throw RequestError("probe image must have " + std::to_string(net_.input_channels) +
                       " channel(s), got " + image.shape_string());
  }
  if (landmarks) {
    try {
      return embed::embed(net_, align::align_face(image, *landmarks, net_.input_size));
    } catch (const align::AlignError& e) {
      throw RequestError(e.what());
    }
  }
  if (image.dim(1) != net_.input_size || image.dim(2) != net_.input_size) {
    throw RequestError("unaligned probe must be " + std::to_string(net_.input_size) + "x" +
                       std::to_string(net_.input_size) + "; pass landmarks to align it");
  }
  return embed::embed(net_, image);
}

IdentifyResponse CareService::identify_image(const embed::Tensor& image,
                                             const std::optional<align::Landmarks5>& landmarks,
                                             std::chrono::system_clock::time_point now) const {
  return identify(embed_image(image, landmarks), now);
}

nlohmann::ordered_json to_json(const IdentifyResponse& r) {
  nlohmann::ordered_json j;
  j["snapshot_version"] = r.snapshot_version;
  if (!r.match) {
    j["match"] = nullptr;
    return j;
  }
  j["match"] = {{"id", r.match->id}, {"distance_sq", r.match->distance_sq}};
  if (r.status == IdentifyStatus::kRecordMissing) {
    j["record_missing"] = true;
    j["record"] = nullptr;
    return j;
  }
  j["record_missing"] = false;
  j["record"] = to_json(*r.record);
  auto& d = j["display"] = nlohmann::ordered_json::array();
  for (const auto& e : r.display) d.push_back({{"label", e.label}, {"value", e.value}});
  auto& applied = j["speech"]["readings_applied"] = nlohmann::ordered_json::array();
  for (const auto& [surface, kana] : r.speech->readings_applied) {
    applied.push_back({{"surface", surface}, {"kana", kana}});
  }
  j["speech"]["text"] = r.speech->text;
  return j;
}

}  // namespace carelens::care
