// SPDX-License-Identifier: Apache-2.0
//
// Newline-delimited JSON environment protocol. A Session holds one game and
// turns each request line into exactly one response line; it is transport
// agnostic (the TCP and stdio servers both drive it).
//
// Requests:
//   {"op":"reset","seed":7,"opponent":"random"|"rule_based"|"none"}
//   {"op":"step","action":3}               with a built-in opponent
//   {"op":"step","actions":3}              same
//   {"op":"step","actions":[3,0]}          opponent "none": both seats
//   {"op":"config","observation":"tensor"|"gray", "game":{...}, "reward":[...]}
//   {"op":"close"}
// Responses:
//   {"ok":true,"observation":{"gray":[...],"aux":[...]},"reward":r,"done":b,
//    "info":{"tick":t,"healths":[..],"golds":[..],"incomes":[..]}}
//   {"ok":false,"error":"..."}
// The client plays seat 0; gray is flattened column-major (col * H + row).
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dlw/agents.hpp"
#include "dlw/encoders.hpp"
#include "dlw/game.hpp"
#include "dlw/rewards.hpp"

namespace dlw {

inline constexpr std::uint16_t kDefaultPort = 5533;

class Session {
 public:
  explicit Session(SimConfig config = {}, RewardSpec reward = RewardSpec::composite())
      : config_(std::move(config)), reward_(std::move(reward)) {
    config_.validate();
    reward_.validate();
  }

  bool closed() const noexcept { return closed_; }
  const std::optional<GameState>& game() const noexcept { return game_; }

  /// One request line in, one response line out (without the newline).
  std::string handle(std::string_view line) {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::parse_error&) {
      return error("malformed-json");
    }
    if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) return error("missing-op");
    const auto op = req["op"].get<std::string>();
    try {
      if (op == "reset") return reset(req);
      if (op == "step") return step_op(req);
      if (op == "config") return configure(req);
      if (op == "close") {
        closed_ = true;
        return json{{"ok", true}}.dump();
      }
    } catch (const json::exception&) {
      return error("bad-request");
    } catch (const std::invalid_argument& e) {
      return error(e.what());
    }
    return error("unknown-op");
  }

 private:
  static std::string error(std::string_view what) {
    return json{{"ok", false}, {"error", what}}.dump();
  }

  std::string reset(const json& req) {
    const auto seed = req.value("seed", std::uint64_t{0});
    const auto opp = req.value("opponent", std::string{"none"});
    if (opp == "random") {
      opponent_ = std::make_unique<RandomAgent>();
    } else if (opp == "rule_based") {
      opponent_ = std::make_unique<RuleBasedAgent>();
    } else if (opp == "none") {
      opponent_.reset();
    } else {
      return error("unknown-opponent");
    }
    if (opponent_) opponent_->begin_episode(agent_seed(seed, 1));
    game_ = new_game(config_, seed);
    return respond(0.0);
  }

  std::string step_op(const json& req) {
    if (!game_) return error("no-session");
    if (game_->outcome) return error("episode-done");
    const json* field = req.contains("actions") ? &req["actions"]
                        : req.contains("action") ? &req["action"]
                                                 : nullptr;
    if (field == nullptr) return error("missing-action");
    const int count = config_.action_count();
    auto valid = [count](const json& v) {
      return v.is_number_integer() && v.get<int>() >= 0 && v.get<int>() < count;
    };
    std::array<Action, 2> actions{};
    if (field->is_array()) {
      if (opponent_) return error("opponent-controls-seat-1");
      if (field->size() != 2 || !valid((*field)[0]) || !valid((*field)[1])) return error("invalid-action");
      actions = {Action{static_cast<std::uint8_t>((*field)[0].get<int>())},
                 Action{static_cast<std::uint8_t>((*field)[1].get<int>())}};
    } else {
      if (!opponent_) return error("need-two-actions");
      if (!valid(*field)) return error("invalid-action");
      actions[0] = Action{static_cast<std::uint8_t>(field->get<int>())};
      actions[1] = opponent_->act(*game_, 1);
    }
    step(*game_, actions);
    if (opponent_) opponent_->observe(game_->events, *game_, 1);
    const double r = compose(reward_, RewardInput{game_->events, nullptr, *game_, 0}).total;
    return respond(r);
  }

  std::string configure(const json& req) {
    if (auto it = req.find("observation"); it != req.end()) {
      const auto mode = it->get<std::string>();
      if (mode == "tensor") {
        include_tensor_ = true;
      } else if (mode == "gray") {
        include_tensor_ = false;
      } else {
        return error("unknown-observation");
      }
    }
    if (auto it = req.find("game"); it != req.end()) config_ = load_sim_config(*it);
    if (auto it = req.find("reward"); it != req.end()) reward_ = reward_spec_from_json(*it);
    return json{{"ok", true}}.dump();
  }

  std::string respond(double reward) const {
    const GameState& s = *game_;
    const Grid gray = encode_gray_heatmap(s, 0);
    const auto aux = encode_aux(s, 0);
    json obs = {{"gray", std::vector<double>(gray.values().begin(), gray.values().end())},
                {"aux", std::vector<double>(aux.begin(), aux.end())}};
    if (include_tensor_) {
      const Grid t = encode_tensor(s, 0);
      obs["tensor"] = std::vector<double>(t.values().begin(), t.values().end());
    }
    json info = {{"tick", s.tick},
                 {"healths", json::array({s.players[0].health, s.players[1].health})},
                 {"golds", json::array({s.players[0].gold, s.players[1].gold})},
                 {"incomes", json::array({s.players[0].income, s.players[1].income})}};
    return json{{"ok", true},
                {"observation", std::move(obs)},
                {"reward", reward},
                {"done", s.outcome.has_value()},
                {"info", std::move(info)}}
        .dump();
  }

  SimConfig config_;
  RewardSpec reward_;
  std::optional<GameState> game_;
  std::unique_ptr<Agent> opponent_;
  bool include_tensor_ = false;
  bool closed_ = false;
};

}  // namespace dlw
