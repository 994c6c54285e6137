#include "carelens/care/display.hpp"

#include <cstdio>
#include <ctime>

namespace carelens::care {
namespace {

struct Labels {
  const char* fields[kDisplayFields];
  const char* unknown;
  const char* done;
  const char* not_done;
};

constexpr Labels kJa{{"氏名", "要介護度", "施設・部屋", "血圧", "体温", "食事状況", "移動", "食事",
                      "排泄", "現在時刻"},
                     "不明",
                     "済み",
                     "まだ"};
constexpr Labels kEn{{"name", "care level", "home and room", "blood pressure", "body temperature",
                      "meal status", "mobility", "eaten", "excretion", "local time"},
                     "unknown",
                     "done",
                     "not yet"};

const Labels& labels(Language lang) { return lang == Language::kJapanese ? kJa : kEn; }

std::string meal_text(const std::string& v, Language lang) {
  if (lang == Language::kEnglish) return v;
  if (v == "full") return "全量";
  if (v == "most") return "ほぼ全量";
  if (v == "half") return "半量";
  if (v == "little") return "少量";
  return "なし";
}

std::string mobility_text(const std::string& v, Language lang) {
  if (lang == Language::kEnglish) return v;
  if (v == "independent") return "自立";
  if (v == "assisted") return "一部介助";
  if (v == "walker") return "歩行器";
  if (v == "wheelchair") return "車椅子";
  return "寝たきり";
}

}  // namespace

Language parse_language(std::string_view s) {
  if (s == "ja") return Language::kJapanese;
  if (s == "en") return Language::kEnglish;
  throw std::invalid_argument("language must be ja or en");
}

std::string unknown_text(Language lang) { return labels(lang).unknown; }

std::string format_local_time(std::chrono::system_clock::time_point now, int utc_offset_minutes) {
  const std::time_t t = std::chrono::system_clock::to_time_t(now) +
                        static_cast<std::time_t>(utc_offset_minutes) * 60;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M", &tm);
  return buf;
}

DisplayPayload render_display(const ResidentRecord& r, std::chrono::system_clock::time_point now,
                              const DisplayOptions& options) {
  const Language lang = options.language;
  const Labels& L = labels(lang);
  const bool ja = lang == Language::kJapanese;
  const std::string unknown = L.unknown;
  char buf[64];
  std::vector<std::string> v;

  v.push_back(r.name);
  if (r.care_level) {
    v.push_back((ja ? "要介護" : "") + std::to_string(*r.care_level));
  } else {
    v.push_back(unknown);
  }
  if (r.home_name || r.room) {
    const std::string home = r.home_name.value_or(unknown);
    const std::string room = r.room.value_or(unknown);
    v.push_back(ja ? home + " " + room + "号室" : home + ", room " + room);
  } else {
    v.push_back(unknown);
  }
  if (r.blood_pressure) {
    std::snprintf(buf, sizeof buf, "%d/%d mmHg", r.blood_pressure->systolic,
                  r.blood_pressure->diastolic);
    v.push_back(buf);
  } else {
    v.push_back(unknown);
  }
  if (r.body_temp) {
    std::snprintf(buf, sizeof buf, ja ? "%.1f℃" : "%.1f °C", *r.body_temp);
    v.push_back(buf);
  } else {
    v.push_back(unknown);
  }
  v.push_back(r.meal_status ? meal_text(*r.meal_status, lang) : unknown);
  v.push_back(r.mobility ? mobility_text(*r.mobility, lang) : unknown);
  v.push_back(r.eaten ? (*r.eaten ? L.done : L.not_done) : unknown);
  v.push_back(r.excretion ? (*r.excretion ? L.done : L.not_done) : unknown);
  v.push_back(format_local_time(now, options.utc_offset_minutes));

  DisplayPayload out;
  for (std::size_t i = 0; i < kDisplayFields; ++i) out.push_back({L.fields[i], v[i]});
  return out;
}

}  // namespace carelens::care
