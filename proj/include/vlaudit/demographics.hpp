#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlaudit/error.hpp"

namespace vlaudit {

enum class Race {
  White,
  Black,
  Indian,
  EastAsian,
  SoutheastAsian,
  MiddleEastern,
  LatinoHispanic,
};

enum class Gender { Male, Female };

inline constexpr std::size_t kRaceCount = 7;
inline constexpr std::size_t kGenderCount = 2;
inline constexpr std::size_t kIntersectionCount = kRaceCount * kGenderCount;

inline constexpr std::array<Race, kRaceCount> kAllRaces = {
    Race::White,          Race::Black,         Race::Indian,        Race::EastAsian,
    Race::SoutheastAsian, Race::MiddleEastern, Race::LatinoHispanic};
inline constexpr std::array<Gender, kGenderCount> kAllGenders = {Gender::Male, Gender::Female};

inline constexpr std::string_view to_string(Race r) {
  constexpr std::array<std::string_view, kRaceCount> names = {
      "White", "Black", "Indian", "EastAsian", "SoutheastAsian", "MiddleEastern", "LatinoHispanic"};
  return names[static_cast<std::size_t>(r)];
}

inline constexpr std::string_view to_string(Gender g) {
  return g == Gender::Male ? "Male" : "Female";
}

inline std::optional<Race> parse_race(std::string_view s) {
  for (Race r : kAllRaces) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

inline std::optional<Gender> parse_gender(std::string_view s) {
  for (Gender g : kAllGenders) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

/// One labeled image row.
struct DemographicRecord {
  std::string record_id;
  Race race = Race::White;
  Gender gender = Gender::Male;
  std::optional<std::string> age_band;

  friend bool operator==(const DemographicRecord&, const DemographicRecord&) = default;
};

/// Grouping axis for distributions and association scores.
enum class Axis { Race, Gender, RaceGender };

inline constexpr std::array<Axis, 3> kAllAxes = {Axis::Race, Axis::Gender, Axis::RaceGender};

inline constexpr std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::Race: return "race";
    case Axis::Gender: return "gender";
    case Axis::RaceGender: return "race_gender";
  }
  return "";
}

inline std::optional<Axis> parse_axis(std::string_view s) {
  for (Axis a : kAllAxes) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

inline std::size_t group_count(Axis a) {
  switch (a) {
    case Axis::Race: return kRaceCount;
    case Axis::Gender: return kGenderCount;
    case Axis::RaceGender: return kIntersectionCount;
  }
  return 0;
}

/// Position of a record's group on the axis, matching group_labels(axis).
/// Intersections are race-major: index = race * 2 + gender.
inline std::size_t group_index(Axis a, const DemographicRecord& rec) {
  const auto race = static_cast<std::size_t>(rec.race);
  const auto gender = static_cast<std::size_t>(rec.gender);
  switch (a) {
    case Axis::Race: return race;
    case Axis::Gender: return gender;
    case Axis::RaceGender: return race * kGenderCount + gender;
  }
  return 0;
}

inline std::string intersection_label(Race r, Gender g) {
  return std::string(to_string(r)) + std::string(to_string(g));
}

inline std::vector<std::string> group_labels(Axis a) {
  std::vector<std::string> labels;
  switch (a) {
    case Axis::Race:
      for (Race r : kAllRaces) labels.emplace_back(to_string(r));
      break;
    case Axis::Gender:
      for (Gender g : kAllGenders) labels.emplace_back(to_string(g));
      break;
    case Axis::RaceGender:
      for (Race r : kAllRaces)
        for (Gender g : kAllGenders) labels.push_back(intersection_label(r, g));
      break;
  }
  return labels;
}

/// All 23 one-vs-rest group labels: races, genders, then intersections.
inline std::vector<std::string> all_group_labels() {
  std::vector<std::string> out;
  for (Axis a : kAllAxes) {
    auto labels = group_labels(a);
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

}  // namespace vlaudit
