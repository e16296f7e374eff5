// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver used by the command-line tool: agent construction from
// names, multi-episode runs with CSV logging, single verbose matches with
// action recording, and frame export from recorded matches.
#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlw/agents.hpp"
#include "dlw/encoders.hpp"
#include "dlw/game.hpp"
#include "dlw/qlearning.hpp"
#include "dlw/rewards.hpp"

namespace dlw {

class UnknownAgent : public std::invalid_argument {
 public:
  explicit UnknownAgent(const std::string& name) : std::invalid_argument("unknown agent: " + name) {}
};

struct LearnerSettings {
  std::size_t hidden_size = 64;
  double learning_rate = 0.001;
  double discount = 0.99;
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 10'000;
  std::int64_t target_sync_interval = 0;
};

/// Experiment config file: {"game": {...}, "reward": [...], "learner": {...}}.
/// Every section is optional.
struct ExperimentConfig {
  SimConfig game;
  RewardSpec reward = RewardSpec::composite();
  LearnerSettings learner;
};

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig x;
  if (auto it = j.find("game"); it != j.end()) x.game = load_sim_config(*it);
  if (auto it = j.find("reward"); it != j.end()) x.reward = reward_spec_from_json(*it);
  if (auto it = j.find("learner"); it != j.end()) {
    auto& l = x.learner;
    l.hidden_size = it->value("hidden_size", l.hidden_size);
    l.learning_rate = it->value("learning_rate", l.learning_rate);
    l.discount = it->value("discount", l.discount);
    l.batch_size = it->value("batch_size", l.batch_size);
    l.replay_capacity = it->value("replay_capacity", l.replay_capacity);
    l.target_sync_interval = it->value("target_sync_interval", l.target_sync_interval);
  }
  x.game.validate();
  return x;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_json(read_json_file(path));
}

inline bool is_learner_name(std::string_view name) { return name == "dqn" || name == "dqn_reward"; }

/// random | rule_based | dqn (terminal-only reward) | dqn_reward (composite).
inline std::unique_ptr<Agent> make_agent(const std::string& name, const ExperimentConfig& x,
                                         std::uint64_t seed) {
  if (name == "random") return std::make_unique<RandomAgent>(seed);
  if (name == "rule_based") return std::make_unique<RuleBasedAgent>();
  if (is_learner_name(name)) {
    QConfig q;
    q.input_size = gray_feature_size(x.game);
    q.hidden_size = x.learner.hidden_size;
    q.action_count = static_cast<std::size_t>(x.game.action_count());
    q.learning_rate = x.learner.learning_rate;
    q.discount = x.learner.discount;
    q.batch_size = x.learner.batch_size;
    q.target_sync_interval = x.learner.target_sync_interval;
    RewardSpec spec = name == "dqn" ? RewardSpec::terminal_only() : x.reward;
    return std::make_unique<LearningAgent>(name, q, std::move(spec), seed, x.learner.replay_capacity);
  }
  throw UnknownAgent(name);
}

/// Seed of episode `e` in a run seeded with `seed`; episode k can be
/// replayed on its own.
inline std::uint64_t episode_seed(std::uint64_t seed, std::int64_t e) {
  return derive_seed(seed, static_cast<std::uint64_t>(e));
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kEpisodesCsvHeader =
    "episode,winner,ticks,p1_income,p2_income,p1_cum_reward,p2_cum_reward,p1_mean_loss,p2_mean_loss";

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// 1 or 2 for the winning seat, 0 for a draw.
inline int winner_column(const std::optional<Outcome>& o) {
  if (!o || *o == Outcome::draw) return 0;
  return *o == Outcome::player0_wins ? 1 : 2;
}

inline std::string episode_csv_row(std::int64_t episode, const EpisodeStats& st) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
  std::string row = std::to_string(episode) + ',' + std::to_string(winner_column(st.outcome)) + ',' +
                    std::to_string(st.ticks) + ',' + std::to_string(st.income[0]) + ',' +
                    std::to_string(st.income[1]);
  for (int p = 0; p < 2; ++p) row += ',' + opt(st.agents[p].cumulative_reward);
  for (int p = 0; p < 2; ++p) row += ',' + opt(st.agents[p].mean_loss);
  return row;
}

// ---------------------------------------------------------------------------
// Runs

struct RunSummary {
  std::int64_t episodes = 0;
  std::array<std::int64_t, 3> wins{};  // draws, p1, p2 (indexed by winner column)
  std::array<double, 2> mean_income_last100{};
  std::vector<EpisodeStats> history;
};

struct RunOptions {
  std::string agent1 = "random";
  std::string agent2 = "random";
  std::int64_t episodes = 1;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: no files written
  bool log_rewards = false;  // per-episode reward component sums of learners to `log`
};

/// One line per learner, e.g. `reward p1 dqn_reward terminal=-1 leak_damage=3`.
inline void log_reward_components(std::ostream& out, std::int64_t episode, int seat, const LearningAgent& l) {
  out << "episode " << episode << " reward p" << seat + 1 << ' ' << l.name();
  const auto& sums = l.episode_components();
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out << ' ' << l.reward_spec().terms[i].name << '=' << format_double(sums[i]);
  }
  out << '\n';
}

/// Runs `episodes` matches. Learners keep their network and replay buffer
/// across episodes, with epsilon following epsilon_at().
inline RunSummary run_experiment(const ExperimentConfig& x, const RunOptions& opt,
                                 std::ostream* log = nullptr) {
  std::array<std::unique_ptr<Agent>, 2> agents{make_agent(opt.agent1, x, derive_seed(opt.seed, ~0ULL)),
                                               make_agent(opt.agent2, x, derive_seed(opt.seed, ~1ULL))};
  std::ofstream csv;
  if (!opt.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    csv.open(std::filesystem::path(opt.out_dir) / "episodes.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write to output directory " + opt.out_dir);
    csv << kEpisodesCsvHeader << '\n';
  }

  RunSummary sum;
  sum.episodes = opt.episodes;
  for (std::int64_t e = 0; e < opt.episodes; ++e) {
    for (auto& a : agents) {
      if (auto* l = dynamic_cast<LearningAgent*>(a.get())) {
        l->set_epsilon(epsilon_at(e, opt.episodes));
        l->set_training(true);
      }
    }
    const auto st = run_episode(x.game, episode_seed(opt.seed, e), *agents[0], *agents[1]);
    ++sum.wins[static_cast<std::size_t>(winner_column(st.outcome))];
    if (csv.is_open()) csv << episode_csv_row(e, st) << '\n';
    if (log != nullptr && opt.log_rewards) {
      for (int p = 0; p < 2; ++p) {
        if (const auto* l = dynamic_cast<const LearningAgent*>(agents[p].get())) log_reward_components(*log, e, p, *l);
      }
    }
    if (log != nullptr && (e + 1) % 50 == 0) {
      *log << "episode " << e + 1 << "/" << opt.episodes << " winner " << winner_column(st.outcome)
           << " income " << st.income[0] << '/' << st.income[1] << '\n';
    }
    sum.history.push_back(st);
  }

  const auto n = std::min<std::int64_t>(100, static_cast<std::int64_t>(sum.history.size()));
  for (int p = 0; p < 2; ++p) {
    double acc = 0.0;
    for (auto i = static_cast<std::int64_t>(sum.history.size()) - n;
         i < static_cast<std::int64_t>(sum.history.size()); ++i) {
      acc += static_cast<double>(sum.history[static_cast<std::size_t>(i)].income[p]);
    }
    sum.mean_income_last100[p] = n > 0 ? acc / static_cast<double>(n) : 0.0;
  }

  if (!opt.out_dir.empty()) {
    for (int p = 0; p < 2; ++p) {
      if (const auto* l = dynamic_cast<const LearningAgent*>(agents[p].get())) {
        const auto path = std::filesystem::path(opt.out_dir) /
                          ("agent" + std::to_string(p + 1) + "_" + std::string(l->name()) + ".json");
        save_checkpoint(path.string(), l->network());
      }
    }
  }
  return sum;
}

inline void print_summary(std::ostream& out, const RunSummary& s) {
  out << "episodes: " << s.episodes << '\n'
      << "wins: p1=" << s.wins[1] << " p2=" << s.wins[2] << " draws=" << s.wins[0] << '\n'
      << "mean income (last " << std::min<std::int64_t>(100, s.episodes)
      << " episodes): p1=" << format_double(s.mean_income_last100[0])
      << " p2=" << format_double(s.mean_income_last100[1]) << '\n';
}

// ---------------------------------------------------------------------------
// Replays

struct Replay {
  SimConfig config;
  std::uint64_t seed = 0;
  std::vector<std::array<Action, 2>> actions;
};

inline json replay_to_json(const Replay& r) {
  json acts = json::array();
  for (const auto& a : r.actions) acts.push_back(json::array({a[0].code, a[1].code}));
  return json{{"format", "dlw-replay"}, {"version", 1}, {"seed", r.seed}, {"config", r.config},
              {"actions", std::move(acts)}};
}

inline Replay replay_from_json(const json& j) {
  if (j.value("format", std::string{}) != "dlw-replay") throw std::invalid_argument("not a dlw-replay file");
  Replay r;
  r.config = load_sim_config(j.at("config"));
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& a : j.at("actions")) {
    r.actions.push_back({Action{a.at(0).get<std::uint8_t>()}, Action{a.at(1).get<std::uint8_t>()}});
  }
  return r;
}

/// Plays one match, optionally narrating every `every` ticks and recording
/// the actions.
inline EpisodeStats play_match(const ExperimentConfig& x, const std::string& agent1,
                               const std::string& agent2, std::uint64_t seed, std::ostream* narrate,
                               std::int64_t every = 100, Replay* record = nullptr) {
  auto a = make_agent(agent1, x, derive_seed(seed, ~0ULL));
  auto b = make_agent(agent2, x, derive_seed(seed, ~1ULL));
  for (auto* ag : {a.get(), b.get()}) {
    if (auto* l = dynamic_cast<LearningAgent*>(ag)) l->set_epsilon(0.1);
  }
  if (record != nullptr) {
    record->config = x.game;
    record->seed = seed;
    record->actions.clear();
  }
  auto hook = [&](const GameState&, std::array<Action, 2> acts, const GameState& after) {
    if (record != nullptr) record->actions.push_back(acts);
    if (narrate == nullptr) return;
    for (const auto& e : after.events) {
      if (e.type == EventType::unit_leaked || e.type == EventType::tower_built) {
        *narrate << event_to_json(e).dump() << '\n';
      }
    }
    if (after.tick % every == 0 || after.outcome) {
      const auto& p = after.players;
      *narrate << "tick " << after.tick << "  health " << p[0].health << '/' << p[1].health << "  gold "
               << p[0].gold << '/' << p[1].gold << "  income " << p[0].income << '/' << p[1].income
               << "  units " << after.units.size() << "  towers " << after.towers.size() << '\n';
    }
  };
  return run_episode(x.game, seed, *a, *b, hook);
}

/// Replays `r`, writing a PPM/PGM pair at tick 0 and every `every` ticks.
/// Returns the number of frames written.
inline std::int64_t export_frames(const Replay& r, std::int64_t every, const std::string& out_dir,
                                  int perspective = 0, std::int64_t episode = 0) {
  if (every <= 0) throw std::invalid_argument("frame interval must be positive");
  std::filesystem::create_directories(out_dir);
  GameState s = new_game(r.config, r.seed);
  std::int64_t frames = 0;
  export_frame(out_dir, s, perspective, episode);
  ++frames;
  for (const auto& acts : r.actions) {
    if (s.outcome) break;
    step(s, acts);
    if (s.tick % every == 0) {
      export_frame(out_dir, s, perspective, episode);
      ++frames;
    }
  }
  return frames;
}

}  // namespace dlw
