#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "carelens/care/resident.hpp"

namespace carelens::care {

enum class Language { kJapanese, kEnglish };

Language parse_language(std::string_view s);  // "ja" | "en"

struct DisplayEntry {
  std::string label;
  std::string value;
  bool operator==(const DisplayEntry&) const = default;
};

/// Always kDisplayFields entries: name, care level, home and room, blood pressure,
/// body temperature, meal status, mobility, eaten, excretion, local time.
using DisplayPayload = std::vector<DisplayEntry>;
inline constexpr std::size_t kDisplayFields = 10;

struct DisplayOptions {
  Language language = Language::kJapanese;
  int utc_offset_minutes = 9 * 60;
};

std::string format_local_time(std::chrono::system_clock::time_point now, int utc_offset_minutes);

DisplayPayload render_display(const ResidentRecord& r, std::chrono::system_clock::time_point now,
                              const DisplayOptions& options = {});

/// Placeholder used for any missing value.
std::string unknown_text(Language lang);

}  // namespace carelens::care
