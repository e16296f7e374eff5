// SPDX-License-Identifier: Apache-2.0
//
// Reward decomposition: the environment reward for one player and one step
// is a weighted sum of named component rewards, each computed from the
// step's event list.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dlw/game.hpp"

namespace dlw {

class UnknownRewardComponent : public std::invalid_argument {
 public:
  explicit UnknownRewardComponent(const std::string& id)
      : std::invalid_argument("unknown-component-id: " + id) {}
};

class InvalidRewardSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a component may look at for one transition. `before` may be
/// null; the built-ins only need the events and the resulting state.
struct RewardInput {
  std::span<const Event> events;
  const GameState* before = nullptr;
  const GameState& after;
  int player = 0;
};

using RewardComponent = std::function<double(const RewardInput&)>;

namespace rewards {

inline double terminal(const RewardInput& in) {
  if (!in.after.outcome) return 0.0;
  const auto w = winner_of(*in.after.outcome);
  if (!w) return 0.0;
  return *w == in.player ? 1.0 : -1.0;
}

inline double leak_damage(const RewardInput& in) {
  double n = 0.0;
  for (const auto& e : in.events) {
    if (e.type == EventType::unit_leaked && e.player == in.player) n += 1.0;
  }
  return n;
}

inline double health_loss(const RewardInput& in) {
  double n = 0.0;
  for (const auto& e : in.events) {
    if (e.type == EventType::unit_leaked && e.player != in.player) n -= 1.0;
  }
  return n;
}

inline double income_delta(const RewardInput& in) {
  std::int64_t delta = 0;
  for (const auto& e : in.events) {
    if (e.player == in.player) delta += e.income;
  }
  const auto base = in.after.config.initial_income;
  return base > 0 ? static_cast<double>(delta) / static_cast<double>(base) : 0.0;
}

inline double kill_refund(const RewardInput& in) {
  std::int64_t gold = 0;
  for (const auto& e : in.events) {
    if (e.type == EventType::unit_died && e.player == in.player) gold += e.gold;
  }
  return static_cast<double>(gold) / 100.0;
}

}  // namespace rewards

/// Name -> component function. Starts with the five built-ins; callers may
/// register more.
class RewardRegistry {
 public:
  RewardRegistry() {
    components_.emplace("terminal", rewards::terminal);
    components_.emplace("leak_damage", rewards::leak_damage);
    components_.emplace("health_loss", rewards::health_loss);
    components_.emplace("income_delta", rewards::income_delta);
    components_.emplace("kill_refund", rewards::kill_refund);
  }

  void add(std::string id, RewardComponent fn) { components_[std::move(id)] = std::move(fn); }
  bool contains(const std::string& id) const { return components_.contains(id); }

  double evaluate(const std::string& id, const RewardInput& in) const {
    auto it = components_.find(id);
    if (it == components_.end()) throw UnknownRewardComponent(id);
    return it->second(in);
  }

  static const RewardRegistry& builtin() {
    static const RewardRegistry registry;
    return registry;
  }

 private:
  std::map<std::string, RewardComponent, std::less<>> components_;
};

inline double component_reward(const std::string& id, const RewardInput& in,
                               const RewardRegistry& registry = RewardRegistry::builtin()) {
  return registry.evaluate(id, in);
}

struct RewardTerm {
  std::string name;
  double weight = 0.0;
  std::string component;  // registry id; defaults to name
};

struct RewardBreakdown {
  double total = 0.0;
  std::vector<double> values;  // unweighted component rewards, spec order
};

struct RewardSpec {
  std::vector<RewardTerm> terms;

  void validate() const {
    std::set<std::string, std::less<>> seen;
    for (const auto& t : terms) {
      if (!std::isfinite(t.weight)) throw InvalidRewardSpec("weight of " + t.name + " is not finite");
      if (!seen.insert(t.name).second) throw InvalidRewardSpec("duplicate reward name " + t.name);
    }
  }

  std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(terms.size());
    for (const auto& t : terms) w.push_back(t.weight);
    return w;
  }

  /// Composite shaping used by the reward-decomposed learner.
  static RewardSpec composite() {
    return {{{"terminal", 1.0, "terminal"},
             {"leak_damage", 0.05, "leak_damage"},
             {"health_loss", 0.05, "health_loss"},
             {"income_delta", 0.01, "income_delta"},
             {"kill_refund", 0.01, "kill_refund"}}};
  }

  /// Sparse win/loss reward of the plain learner.
  static RewardSpec terminal_only() { return {{{"terminal", 1.0, "terminal"}}}; }
};

/// Sum of weight * component over the spec, plus the per-component values.
inline RewardBreakdown compose(const RewardSpec& spec, const RewardInput& in,
                               const RewardRegistry& registry = RewardRegistry::builtin()) {
  RewardBreakdown out;
  out.values.reserve(spec.terms.size());
  for (const auto& t : spec.terms) {
    const double r = registry.evaluate(t.component.empty() ? t.name : t.component, in);
    out.values.push_back(r);
    out.total += t.weight * r;
  }
  return out;
}

inline json reward_spec_to_json(const RewardSpec& spec) {
  json arr = json::array();
  for (const auto& t : spec.terms) {
    json o = {{"name", t.name}, {"weight", t.weight}};
    if (!t.component.empty() && t.component != t.name) o["component"] = t.component;
    arr.push_back(std::move(o));
  }
  return arr;
}

/// Parses `[{"name": ..., "weight": ..., "component"?: ...}, ...]`.
inline RewardSpec reward_spec_from_json(const json& arr,
                                        const RewardRegistry& registry = RewardRegistry::builtin()) {
  if (!arr.is_array()) throw InvalidRewardSpec("reward must be an array of {name, weight}");
  RewardSpec spec;
  for (const auto& o : arr) {
    RewardTerm t;
    t.name = o.at("name").get<std::string>();
    t.weight = o.at("weight").get<double>();
    t.component = o.value("component", t.name);
    if (!registry.contains(t.component)) throw UnknownRewardComponent(t.component);
    spec.terms.push_back(std::move(t));
  }
  spec.validate();
  return spec;
}

}  // namespace dlw
