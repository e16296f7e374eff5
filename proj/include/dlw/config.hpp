// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace dlw {

using json = nlohmann::ordered_json;

/// Thrown by new_game / config loading when a SimConfig invariant fails.
/// what() names the invariant.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Engine distances are integers in thousandths of a cell.
inline constexpr std::int64_t kMilli = 1000;

struct UnitKind {
  int id = 0;
  std::string name;
  std::int64_t gold_cost = 0;
  std::int64_t max_health = 0;
  double speed = 0.0;  // cells per second
};

struct TowerKind {
  int id = 0;
  std::string name;
  std::int64_t gold_cost = 0;
  std::int64_t damage = 0;
  double range = 0.0;  // cells, Euclidean
  std::int64_t cooldown_ticks = 0;
  double projectile_speed = 0.0;  // cells per second
};

/// Half-open column range [begin, end).
struct ColumnRange {
  int begin = 0;
  int end = 0;

  constexpr bool contains(int col) const noexcept { return col >= begin && col < end; }
  constexpr bool empty() const noexcept { return end <= begin; }
  friend constexpr bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

struct SimConfig {
  int grid_width = 30;
  int grid_height = 11;
  int ticks_per_second = 10;
  int max_episode_seconds = 600;
  std::int64_t initial_health = 50;
  std::int64_t initial_gold = 100;
  std::int64_t initial_income = 20;
  int income_interval_seconds = 10;
  double income_ratio = 0.20;
  double kill_gold_ratio = 0.50;
  std::vector<UnitKind> unit_roster = {
      {0, "militia", 10, 20, 1.0},
      {1, "footman", 25, 50, 1.0},
      {2, "grunt", 50, 110, 1.0},
      {3, "armored", 100, 250, 0.5},
  };
  std::vector<TowerKind> tower_roster = {
      {0, "basic", 50, 5, 3.0, 10, 4.0},
      {1, "rapid", 75, 3, 2.0, 3, 4.0},
      {2, "heavy", 120, 20, 4.0, 20, 4.0},
  };
  ColumnRange buildable_columns[2] = {{1, 15}, {15, 29}};

  std::int64_t max_ticks() const noexcept {
    return static_cast<std::int64_t>(max_episode_seconds) * ticks_per_second;
  }
  std::int64_t income_interval_ticks() const noexcept {
    return static_cast<std::int64_t>(income_interval_seconds) * ticks_per_second;
  }
  int action_count() const noexcept {
    return 5 + static_cast<int>(tower_roster.size() + unit_roster.size());
  }
  std::int64_t goal_milli() const noexcept { return (grid_width - 1) * kMilli; }

  // Ratios are applied in integer permille so purchases and refunds are exact.
  std::int64_t income_permille() const noexcept { return std::llround(income_ratio * 1000.0); }
  std::int64_t kill_permille() const noexcept { return std::llround(kill_gold_ratio * 1000.0); }

  std::int64_t unit_income_gain(const UnitKind& k) const noexcept {
    return k.gold_cost * income_permille() / 1000;
  }
  std::int64_t kill_refund(const UnitKind& k) const noexcept {
    return k.gold_cost * kill_permille() / 1000;
  }
  std::int64_t unit_step_milli(const UnitKind& k) const noexcept {
    return std::llround(k.speed * kMilli / ticks_per_second);
  }
  std::int64_t projectile_step_milli(const TowerKind& k) const noexcept {
    return std::llround(k.projectile_speed * kMilli / ticks_per_second);
  }
  static std::int64_t range_milli(const TowerKind& k) noexcept {
    return std::llround(k.range * kMilli);
  }

  /// Throws InvalidConfig naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw InvalidConfig(what); };
    if (grid_width < 4) fail("grid_width >= 4");
    if (grid_height < 1) fail("grid_height >= 1");
    if (ticks_per_second < 1) fail("ticks_per_second >= 1");
    if (max_episode_seconds < 1) fail("max_episode_seconds >= 1");
    if (initial_health < 1) fail("initial_health >= 1");
    if (initial_gold < 0) fail("initial_gold >= 0");
    if (initial_income < 0) fail("initial_income >= 0");
    if (income_interval_seconds < 1) fail("income_interval_seconds >= 1");
    if (!(income_ratio >= 0.0 && income_ratio <= 1.0)) fail("income_ratio in [0,1]");
    if (!(kill_gold_ratio >= 0.0 && kill_gold_ratio <= 1.0)) fail("kill_gold_ratio in [0,1]");
    if (unit_roster.empty()) fail("unit_roster non-empty");
    if (tower_roster.empty()) fail("tower_roster non-empty");
    if (action_count() > 255) fail("action count <= 255");
    for (std::size_t i = 0; i < unit_roster.size(); ++i) {
      const auto& u = unit_roster[i];
      if (u.id != static_cast<int>(i)) fail("unit_roster ids are 0..n-1 in order");
      if (u.gold_cost <= 0) fail("unit gold_cost > 0");
      if (u.max_health <= 0) fail("unit max_health > 0");
      if (!(u.speed > 0.0) || unit_step_milli(u) <= 0) fail("unit speed > 0");
    }
    for (std::size_t i = 0; i < tower_roster.size(); ++i) {
      const auto& t = tower_roster[i];
      if (t.id != static_cast<int>(i)) fail("tower_roster ids are 0..n-1 in order");
      if (t.gold_cost <= 0) fail("tower gold_cost > 0");
      if (t.damage <= 0) fail("tower damage > 0");
      if (!(t.range > 0.0) || range_milli(t) <= 0) fail("tower range > 0");
      if (t.range > grid_width) fail("tower range <= grid_width");
      if (t.cooldown_ticks <= 0) fail("tower cooldown_ticks > 0");
      if (!(t.projectile_speed > 0.0) || projectile_step_milli(t) <= 0)
        fail("tower projectile_speed > 0");
    }
    for (const auto& r : buildable_columns) {
      if (r.empty()) fail("buildable_columns non-empty");
      if (r.begin < 1 || r.end > grid_width - 1)
        fail("buildable_columns exclude spawn/goal columns");
    }
    const auto& a = buildable_columns[0];
    const auto& b = buildable_columns[1];
    if (a.begin < b.end && b.begin < a.end) fail("buildable_columns disjoint");
  }
};

inline void to_json(json& j, const UnitKind& k) {
  j = json{{"id", k.id}, {"name", k.name}, {"gold_cost", k.gold_cost},
           {"max_health", k.max_health}, {"speed", k.speed}};
}

inline void from_json(const json& j, UnitKind& k) {
  j.at("id").get_to(k.id);
  k.name = j.value("name", std::string{});
  j.at("gold_cost").get_to(k.gold_cost);
  j.at("max_health").get_to(k.max_health);
  j.at("speed").get_to(k.speed);
}

inline void to_json(json& j, const TowerKind& k) {
  j = json{{"id", k.id},
           {"name", k.name},
           {"gold_cost", k.gold_cost},
           {"damage", k.damage},
           {"range", k.range},
           {"cooldown_ticks", k.cooldown_ticks},
           {"projectile_speed", k.projectile_speed}};
}

inline void from_json(const json& j, TowerKind& k) {
  j.at("id").get_to(k.id);
  k.name = j.value("name", std::string{});
  j.at("gold_cost").get_to(k.gold_cost);
  j.at("damage").get_to(k.damage);
  j.at("range").get_to(k.range);
  j.at("cooldown_ticks").get_to(k.cooldown_ticks);
  j.at("projectile_speed").get_to(k.projectile_speed);
}

inline void to_json(json& j, const SimConfig& c) {
  j = json{{"grid_width", c.grid_width},
           {"grid_height", c.grid_height},
           {"ticks_per_second", c.ticks_per_second},
           {"max_episode_seconds", c.max_episode_seconds},
           {"initial_health", c.initial_health},
           {"initial_gold", c.initial_gold},
           {"initial_income", c.initial_income},
           {"income_interval_seconds", c.income_interval_seconds},
           {"income_ratio", c.income_ratio},
           {"kill_gold_ratio", c.kill_gold_ratio},
           {"unit_roster", c.unit_roster},
           {"tower_roster", c.tower_roster},
           {"buildable_columns",
            json::array({json::array({c.buildable_columns[0].begin, c.buildable_columns[0].end}),
                         json::array({c.buildable_columns[1].begin, c.buildable_columns[1].end})})}};
}

/// Missing keys keep their defaults, so a config file may override a subset.
inline void from_json(const json& j, SimConfig& c) {
  auto opt = [&j](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) it->get_to(field);
  };
  opt("grid_width", c.grid_width);
  opt("grid_height", c.grid_height);
  opt("ticks_per_second", c.ticks_per_second);
  opt("max_episode_seconds", c.max_episode_seconds);
  opt("initial_health", c.initial_health);
  opt("initial_gold", c.initial_gold);
  opt("initial_income", c.initial_income);
  opt("income_interval_seconds", c.income_interval_seconds);
  opt("income_ratio", c.income_ratio);
  opt("kill_gold_ratio", c.kill_gold_ratio);
  opt("unit_roster", c.unit_roster);
  opt("tower_roster", c.tower_roster);
  if (auto it = j.find("buildable_columns"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw InvalidConfig("buildable_columns has two ranges");
    for (int p = 0; p < 2; ++p) {
      const auto& r = (*it)[p];
      c.buildable_columns[p] = {r.at(0).get<int>(), r.at(1).get<int>()};
    }
  } else if (j.contains("grid_width")) {
    // Re-derive the halves when the grid changes but the zones were not given.
    const int half = c.grid_width / 2;
    c.buildable_columns[0] = {1, half};
    c.buildable_columns[1] = {c.grid_width - half, c.grid_width - 1};
  }
}

inline SimConfig load_sim_config(const json& j) {
  SimConfig c;
  try {
    from_json(j, c);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace dlw
