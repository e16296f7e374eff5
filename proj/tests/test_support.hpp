// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>

#include "dlw/game.hpp"
#include "dlw/rng.hpp"

namespace dlw::testing {

inline std::array<Action, 2> random_actions(const SimConfig& c, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(c.action_count());
  return {Action{static_cast<std::uint8_t>(rng.below(n))}, Action{static_cast<std::uint8_t>(rng.below(n))}};
}

/// Plays uniformly random actions for up to `ticks` steps, calling `visit`
/// after each one.
inline GameState random_game(const SimConfig& c, std::uint64_t seed, std::int64_t ticks,
                             const std::function<void(const GameState&)>& visit = {}) {
  GameState s = new_game(c, seed);
  Rng rng(derive_seed(seed, 99));
  for (std::int64_t t = 0; t < ticks && !s.outcome; ++t) {
    step(s, random_actions(c, rng));
    if (visit) visit(s);
  }
  return s;
}

/// Random actions biased towards spending, so boards fill with towers and
/// units quickly.
inline std::array<Action, 2> busy_actions(const SimConfig& c, Rng& rng) {
  std::array<Action, 2> a{};
  for (auto& x : a) {
    const auto roll = rng.below(10);
    if (roll < 4) {
      x = Action::send_unit(c, static_cast<int>(rng.below(c.unit_roster.size())));
    } else if (roll < 6) {
      x = Action::build_tower(static_cast<int>(rng.below(c.tower_roster.size())));
    } else {
      x = Action{static_cast<std::uint8_t>(rng.below(5))};
    }
  }
  return a;
}

}  // namespace dlw::testing
