#include "carelens/care/resident.hpp"

#include <algorithm>
#include <cmath>

namespace carelens::care {
namespace {

using json = nlohmann::json;

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

const json* field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string need_string(const json& v, const char* key) {
  if (!v.is_string()) throw StoreError(std::string(key) + " must be a string");
  return v.get<std::string>();
}

int need_int(const json& v, const char* key) {
  if (!v.is_number_integer()) throw StoreError(std::string(key) + " must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < -1000000 || x > 1000000) throw StoreError(std::string(key) + " out of range");
  return static_cast<int>(x);
}

template <typename T, typename F>
void opt(const json& obj, const char* key, std::optional<T>& out, F get) {
  if (const json* v = field(obj, key)) out = get(*v, key);
}

ResidentRecord from_json(const json& obj) {
  if (!obj.is_object()) throw StoreError("resident must be an object");
  ResidentRecord r;
  const json* id = field(obj, "id");
  if (!id || !id->is_number_unsigned() || id->get<std::uint64_t>() > 0xFFFFFFFFull) {
    throw StoreError("id must be an unsigned 32-bit integer");
  }
  r.id = static_cast<std::uint32_t>(id->get<std::uint64_t>());
  const json* name = field(obj, "name");
  if (!name) throw StoreError("name is required");
  r.name = need_string(*name, "name");

  opt(obj, "name_reading", r.name_reading, need_string);
  opt(obj, "care_level", r.care_level, need_int);
  opt(obj, "home_name", r.home_name, need_string);
  opt(obj, "room", r.room, need_string);
  opt(obj, "meal_status", r.meal_status, need_string);
  opt(obj, "mobility", r.mobility, need_string);
  opt(obj, "updated_at", r.updated_at, need_string);
  opt(obj, "body_temp", r.body_temp, [](const json& v, const char*) {
    if (!v.is_number()) throw StoreError("body_temp must be a number");
    return v.get<double>();
  });
  auto get_bool = [](const json& v, const char* key) {
    if (!v.is_boolean()) throw StoreError(std::string(key) + " must be true or false");
    return v.get<bool>();
  };
  opt(obj, "eaten", r.eaten, get_bool);
  opt(obj, "excretion", r.excretion, get_bool);
  opt(obj, "blood_pressure", r.blood_pressure, [](const json& v, const char*) {
    if (!v.is_object()) throw StoreError("blood_pressure must be {systolic, diastolic}");
    const json* s = field(v, "systolic");
    const json* d = field(v, "diastolic");
    if (!s || !d) throw StoreError("blood_pressure needs systolic and diastolic");
    return BloodPressure{need_int(*s, "systolic"), need_int(*d, "diastolic")};
  });
  return r;
}

template <std::size_t N>
bool one_of(const std::string& v, const std::string_view (&set)[N]) {
  return std::find(std::begin(set), std::end(set), v) != std::end(set);
}

}  // namespace

void validate(const ResidentRecord& r) {
  if (r.name.empty()) throw StoreError("name is empty");
  if (r.care_level && (*r.care_level < 1 || *r.care_level > 5)) {
    throw StoreError("care_level must be 1..5");
  }
  if (r.blood_pressure) {
    const auto& bp = *r.blood_pressure;
    if (!(bp.diastolic > 0 && bp.systolic > bp.diastolic)) {
      throw StoreError("blood_pressure requires systolic > diastolic > 0");
    }
  }
  if (r.body_temp && !(std::isfinite(*r.body_temp) && *r.body_temp >= 30.0 && *r.body_temp <= 45.0)) {
    throw StoreError("body_temp must lie in [30.0, 45.0]");
  }
  if (r.meal_status && !one_of(*r.meal_status, kMealStatuses)) {
    throw StoreError("unknown meal_status '" + *r.meal_status + "'");
  }
  if (r.mobility && !one_of(*r.mobility, kMobilityLevels)) {
    throw StoreError("unknown mobility '" + *r.mobility + "'");
  }
}

ResidentMap parse_residents(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (const auto col = msg.find("column"); col != std::string::npos) {
      if (const auto colon = msg.find(": ", col); colon != std::string::npos) msg = msg.substr(colon + 2);
    }
    throw StoreError("store parse error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + msg);
  }
  if (!doc.is_array()) throw StoreError("store must be a JSON array of residents");
  ResidentMap out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    ResidentRecord r;
    try {
      r = from_json(doc[i]);
      validate(r);
    } catch (const StoreError& e) {
      throw StoreError("resident #" + std::to_string(i) + ": " + e.what());
    }
    if (!out.emplace(r.id, r).second) {
      throw StoreError("resident #" + std::to_string(i) + ": duplicate id " + std::to_string(r.id));
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const ResidentRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["name"] = r.name;
  if (r.name_reading) j["name_reading"] = *r.name_reading;
  if (r.care_level) j["care_level"] = *r.care_level;
  if (r.home_name) j["home_name"] = *r.home_name;
  if (r.room) j["room"] = *r.room;
  if (r.blood_pressure) {
    j["blood_pressure"] = {{"systolic", r.blood_pressure->systolic},
                           {"diastolic", r.blood_pressure->diastolic}};
  }
  if (r.body_temp) j["body_temp"] = *r.body_temp;
  if (r.meal_status) j["meal_status"] = *r.meal_status;
  if (r.mobility) j["mobility"] = *r.mobility;
  if (r.eaten) j["eaten"] = *r.eaten;
  if (r.excretion) j["excretion"] = *r.excretion;
  if (r.updated_at) j["updated_at"] = *r.updated_at;
  return j;
}

std::string dump_residents(const ResidentMap& residents) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [id, r] : residents) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

}  // namespace carelens::care
