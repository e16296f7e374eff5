// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlw/encoders.hpp"
#include "dlw/game.hpp"
#include "dlw/qlearning.hpp"
#include "dlw/rewards.hpp"

namespace dlw {

struct AgentEpisodeStats {
  std::optional<double> cumulative_reward;
  std::optional<double> mean_loss;
};

struct EpisodeStats {
  std::optional<Outcome> outcome;
  std::int64_t ticks = 0;
  std::array<std::int64_t, 2> income{};
  std::array<std::int64_t, 2> health{};
  std::array<AgentEpisodeStats, 2> agents;
};

/// A seat at the table. The episode runner calls begin_episode once, then
/// act / observe once per tick, then end_episode.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string_view name() const = 0;
  virtual void begin_episode(std::uint64_t /*seed*/) {}
  virtual Action act(const GameState& s, int player) = 0;
  virtual void observe(std::span<const Event> /*events*/, const GameState& /*next*/, int /*player*/) {}
  virtual AgentEpisodeStats end_episode() { return {}; }
};

// ---------------------------------------------------------------------------

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed = 0) : rng_(seed) {}
  std::string_view name() const override { return "random"; }
  void begin_episode(std::uint64_t seed) override { rng_ = Rng(seed); }
  Action act(const GameState& s, int /*player*/) override {
    return {static_cast<std::uint8_t>(rng_.below(static_cast<std::uint64_t>(s.config.action_count())))};
  }

 private:
  Rng rng_;
};

// ---------------------------------------------------------------------------

inline constexpr int kThreatColumns = 8;

/// Deterministic baseline: while an enemy unit is close to our base, walk the
/// cursor to a free cell just ahead of the most advanced one and build a
/// basic tower; otherwise spend on the most expensive affordable unit while
/// we hold at least twice the cheapest unit's cost.
inline Action rule_based_action(const GameState& s, int player) {
  const auto& c = s.config;
  const auto& me = s.players[player];
  auto view = [&](int col) { return view_column(c, player, col); };

  const auto& basic = c.tower_roster.front();
  if (me.gold >= basic.gold_cost) {
    const Unit* threat = nullptr;
    for (const auto& u : s.units) {
      if (u.owner == player || view(unit_column(c, u)) > kThreatColumns) continue;
      if (threat == nullptr || u.progress > threat->progress) threat = &u;
    }
    if (threat != nullptr) {
      // Buildable zone and the unit, in our own view.
      const auto& zone = c.buildable_columns[player];
      int lo = view(zone.begin);
      int hi = view(zone.end - 1);
      if (lo > hi) std::swap(lo, hi);
      const int aim = std::clamp(view(unit_column(c, *threat)) - 1, lo, hi);
      std::optional<int> target;
      for (int d = 0; d <= hi - lo && !target; ++d) {
        for (int col : {aim - d, aim + d}) {
          if (col < lo || col > hi) continue;
          const Cell cell{view(col), threat->row};
          const bool taken = std::any_of(s.towers.begin(), s.towers.end(),
                                         [cell](const Tower& t) { return t.cell == cell; });
          if (!taken) {
            target = col;
            break;
          }
        }
      }
      if (target) {
        const int cur_col = view(me.cursor.col);
        if (me.cursor.row > threat->row) return Action::cursor_up();
        if (me.cursor.row < threat->row) return Action::cursor_down();
        if (cur_col < *target) return Action::cursor_right();
        if (cur_col > *target) return Action::cursor_left();
        return Action::build_tower(basic.id);
      }
    }
  }

  std::int64_t cheapest = c.unit_roster.front().gold_cost;
  for (const auto& u : c.unit_roster) cheapest = std::min(cheapest, u.gold_cost);
  if (me.gold >= 2 * cheapest) {
    const UnitKind* pick = nullptr;
    for (const auto& u : c.unit_roster) {
      if (u.gold_cost <= me.gold && (pick == nullptr || u.gold_cost > pick->gold_cost)) pick = &u;
    }
    if (pick != nullptr) return Action::send_unit(c, pick->id);
  }
  return Action::noop();
}

class RuleBasedAgent final : public Agent {
 public:
  std::string_view name() const override { return "rule_based"; }
  Action act(const GameState& s, int player) override { return rule_based_action(s, player); }
};

// ---------------------------------------------------------------------------

/// Epsilon-greedy Q-network player. Acts on the grayscale + aux features,
/// stores one transition per tick with the composed reward, and (when
/// training) takes one gradient step per tick once the buffer holds a batch.
/// The network and buffer persist across episodes.
class LearningAgent final : public Agent {
 public:
  LearningAgent(std::string name, QConfig qcfg, RewardSpec spec, std::uint64_t seed,
                std::size_t replay_capacity = 10'000)
      : name_(std::move(name)),
        spec_(std::move(spec)),
        net_(qcfg, derive_seed(seed, 1)),
        buffer_(replay_capacity, derive_seed(seed, 2)),
        rng_(derive_seed(seed, 3)) {
    spec_.validate();
  }

  std::string_view name() const override { return name_; }

  void set_epsilon(double eps) noexcept { epsilon_ = eps; }
  double epsilon() const noexcept { return epsilon_; }
  void set_training(bool on) noexcept { train_ = on; }
  bool training() const noexcept { return train_; }

  const QApproximator& network() const noexcept { return net_; }
  QApproximator& network() noexcept { return net_; }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  const RewardSpec& reward_spec() const noexcept { return spec_; }

  /// Per-component breakdown of the most recent step, for debug logging.
  const RewardBreakdown& last_breakdown() const noexcept { return last_breakdown_; }
  /// Unweighted component sums over the current (or last) episode, in spec order.
  const std::vector<double>& episode_components() const noexcept { return component_sums_; }

  void begin_episode(std::uint64_t seed) override {
    rng_ = Rng(seed);
    cum_reward_ = 0.0;
    loss_sum_ = 0.0;
    loss_count_ = 0;
    cached_tick_ = -1;
    component_sums_.assign(spec_.terms.size(), 0.0);
  }

  Action act(const GameState& s, int player) override {
    if (cached_tick_ != s.tick) {
      cached_features_ = gray_features(s, player);
      cached_tick_ = s.tick;
    }
    pending_features_ = cached_features_;
    const auto q = net_.forward(pending_features_);
    pending_action_ = select_action(q, epsilon_, rng_);
    return {static_cast<std::uint8_t>(pending_action_)};
  }

  void observe(std::span<const Event> events, const GameState& next, int player) override {
    last_breakdown_ = compose(spec_, RewardInput{events, nullptr, next, player});
    const double r = last_breakdown_.total;
    cum_reward_ += r;
    component_sums_.resize(last_breakdown_.values.size(), 0.0);
    for (std::size_t i = 0; i < last_breakdown_.values.size(); ++i) component_sums_[i] += last_breakdown_.values[i];
    cached_features_ = gray_features(next, player);
    cached_tick_ = next.tick;
    buffer_.push({std::move(pending_features_), pending_action_, r, cached_features_,
                  next.outcome.has_value()});
    if (train_ && buffer_.size() >= net_.config().batch_size) {
      loss_sum_ += net_.train_step(buffer_);
      ++loss_count_;
    }
  }

  AgentEpisodeStats end_episode() override {
    AgentEpisodeStats st;
    st.cumulative_reward = cum_reward_;
    if (loss_count_ > 0) st.mean_loss = loss_sum_ / static_cast<double>(loss_count_);
    return st;
  }

 private:
  std::string name_;
  RewardSpec spec_;
  QApproximator net_;
  ReplayBuffer buffer_;
  Rng rng_;
  double epsilon_ = 1.0;
  bool train_ = true;

  std::vector<double> cached_features_;
  std::int64_t cached_tick_ = -1;
  std::vector<double> pending_features_;
  int pending_action_ = 0;
  double cum_reward_ = 0.0;
  double loss_sum_ = 0.0;
  std::int64_t loss_count_ = 0;
  RewardBreakdown last_breakdown_;
  std::vector<double> component_sums_;
};

// ---------------------------------------------------------------------------

/// Seed handed to the agent in `seat` for an episode with game seed `seed`.
inline std::uint64_t agent_seed(std::uint64_t seed, int seat) {
  return derive_seed(seed, 16 + static_cast<std::uint64_t>(seat));
}

using StepHook = std::function<void(const GameState& before, std::array<Action, 2> actions,
                                    const GameState& after)>;

/// Plays one match to its terminal tick.
inline EpisodeStats run_episode(const SimConfig& config, std::uint64_t seed, Agent& p0, Agent& p1,
                                const StepHook& hook = {}) {
  std::array<Agent*, 2> seats{&p0, &p1};
  for (int p = 0; p < 2; ++p) seats[p]->begin_episode(agent_seed(seed, p));
  GameState s = new_game(config, seed);
  while (!s.outcome) {
    const std::array<Action, 2> actions{seats[0]->act(s, 0), seats[1]->act(s, 1)};
    if (hook) {
      const GameState before = s;
      step(s, actions);
      hook(before, actions, s);
    } else {
      step(s, actions);
    }
    for (int p = 0; p < 2; ++p) seats[p]->observe(s.events, s, p);
  }
  EpisodeStats st;
  st.outcome = s.outcome;
  st.ticks = s.tick;
  for (int p = 0; p < 2; ++p) {
    st.income[p] = s.players[p].income;
    st.health[p] = s.players[p].health;
    st.agents[p] = seats[p]->end_episode();
  }
  return st;
}

/// One episode of `learner` (seat 0) against `opponent` (seat 1).
inline EpisodeStats learning_agent_episode(const SimConfig& config, std::uint64_t seed,
                                           LearningAgent& learner, Agent& opponent, double epsilon,
                                           bool train) {
  learner.set_epsilon(epsilon);
  learner.set_training(train);
  return run_episode(config, seed, learner, opponent);
}

}  // namespace dlw
