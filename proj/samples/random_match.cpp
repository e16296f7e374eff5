// SPDX-License-Identifier: Apache-2.0
//
// Minimal library usage: a rule-based player against a random one, stepping
// the game by hand and reading the grayscale observation.
#include <iostream>

#include "dlw/agents.hpp"
#include "dlw/encoders.hpp"
#include "dlw/game.hpp"

int main() {
  dlw::SimConfig config;
  config.max_episode_seconds = 120;
  dlw::GameState s = dlw::new_game(config, 42);
  dlw::RandomAgent random(7);
  dlw::RuleBasedAgent rules;

  while (!s.outcome) {
    dlw::step(s, {rules.act(s, 0), random.act(s, 1)});
    if (s.tick % 200 == 0) {
      const auto obs = dlw::observe(s, 0);
      double lit = 0.0;
      for (double v : obs.gray.values()) lit += v;
      std::cout << "tick " << s.tick << " health " << s.players[0].health << '/'
                << s.players[1].health << " gray mass " << lit << '\n';
    }
  }
  const auto w = dlw::winner_of(*s.outcome);
  std::cout << (w ? "winner: player " + std::to_string(*w) : std::string("draw")) << '\n';
}
