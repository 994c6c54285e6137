#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace carelens::care {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BloodPressure {
  int systolic = 0;
  int diastolic = 0;
  bool operator==(const BloodPressure&) const = default;
};

// Accepted values of the enumerated fields.
inline constexpr std::string_view kMealStatuses[] = {"full", "most", "half", "little", "none"};
inline constexpr std::string_view kMobilityLevels[] = {"independent", "assisted", "walker",
                                                       "wheelchair", "bedridden"};

/// One resident as kept in the local store. Only id and name are required;
/// every other field may be absent and renders as a placeholder.
struct ResidentRecord {
  std::uint32_t id = 0;
  std::string name;
  std::optional<std::string> name_reading;
  std::optional<int> care_level;  // 1..5
  std::optional<std::string> home_name;
  std::optional<std::string> room;
  std::optional<BloodPressure> blood_pressure;
  std::optional<double> body_temp;
  std::optional<std::string> meal_status;
  std::optional<std::string> mobility;
  std::optional<bool> eaten;
  std::optional<bool> excretion;
  std::optional<std::string> updated_at;

  bool operator==(const ResidentRecord&) const = default;
};

using ResidentMap = std::map<std::uint32_t, ResidentRecord>;

/// Throws StoreError naming the offending field.
void validate(const ResidentRecord& r);

/// Parses a JSON array of resident objects. Syntax errors carry line:column,
/// schema and invariant errors carry the record index.
ResidentMap parse_residents(std::string_view text);

nlohmann::ordered_json to_json(const ResidentRecord& r);
std::string dump_residents(const ResidentMap& residents);

}  // namespace carelens::care
