// SPDX-License-Identifier: Apache-2.0
//
// Deep Line Wars match simulation. One GameState per match; everything is
// integer arithmetic (positions in thousandths of a cell) so that a
// (config, seed, action sequence) triple reproduces the same state hashes on
// any platform.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dlw/config.hpp"
#include "dlw/rng.hpp"

namespace dlw {

constexpr int opponent(int player) noexcept { return 1 - player; }

struct Cell {
  int col = 0;
  int row = 0;
  friend constexpr bool operator==(const Cell&, const Cell&) = default;
};

enum class ActionKind : std::uint8_t {
  noop,
  cursor_up,
  cursor_down,
  cursor_left,
  cursor_right,
  build_tower,
  send_unit,
};

/// Discrete action code. Layout: 0 no-op, 1..4 cursor up/down/left/right,
/// then one BuildTower per tower kind, then one SendUnit per unit kind
/// (0..11 with the default rosters). Left/right are relative to the acting
/// player: "right" always points at the enemy base.
struct Action {
  std::uint8_t code = 0;

  static constexpr Action noop() noexcept { return {0}; }
  static constexpr Action cursor_up() noexcept { return {1}; }
  static constexpr Action cursor_down() noexcept { return {2}; }
  static constexpr Action cursor_left() noexcept { return {3}; }
  static constexpr Action cursor_right() noexcept { return {4}; }
  static constexpr Action build_tower(int kind) noexcept {
    return {static_cast<std::uint8_t>(5 + kind)};
  }
  static Action send_unit(const SimConfig& c, int kind) noexcept {
    return {static_cast<std::uint8_t>(5 + c.tower_roster.size() + kind)};
  }

  friend constexpr bool operator==(const Action&, const Action&) = default;
};

struct DecodedAction {
  ActionKind kind = ActionKind::noop;
  int index = -1;  // tower or unit kind for build/send
};

/// Decodes an action code; std::nullopt when the code is out of range.
inline std::optional<DecodedAction> decode(const SimConfig& c, Action a) {
  const int code = a.code;
  if (code < 5) return DecodedAction{static_cast<ActionKind>(code), -1};
  const int towers = static_cast<int>(c.tower_roster.size());
  if (code < 5 + towers) return DecodedAction{ActionKind::build_tower, code - 5};
  if (code < c.action_count()) return DecodedAction{ActionKind::send_unit, code - 5 - towers};
  return std::nullopt;
}

struct Unit {
  std::int64_t uid = 0;
  int owner = 0;
  int kind = 0;
  std::int64_t progress = 0;  // milli-cells walked from the owner's spawn column
  int row = 0;
  std::int64_t health = 0;
};

struct Tower {
  std::int64_t tid = 0;
  int owner = 0;
  int kind = 0;
  Cell cell;
  std::int64_t cooldown_remaining = 0;
};

struct Projectile {
  int owner = 0;
  std::int64_t target_uid = 0;
  std::int64_t x = 0;  // milli-cells
  std::int64_t y = 0;
  std::int64_t damage = 0;
  std::int64_t speed = 0;  // milli-cells per tick
};

struct PlayerState {
  std::int64_t health = 0;
  std::int64_t gold = 0;
  std::int64_t income = 0;
  Cell cursor;
  std::int64_t units_sent = 0;
  std::int64_t units_lost = 0;
  std::int64_t damage_dealt = 0;
  Rng rng;                       // spawn-row stream, one per seat
  std::int64_t next_unit_seq = 0;
  std::int64_t next_tower_seq = 0;
};

enum class Outcome : std::uint8_t { player0_wins, player1_wins, draw };

constexpr std::optional<int> winner_of(Outcome o) noexcept {
  if (o == Outcome::draw) return std::nullopt;
  return o == Outcome::player0_wins ? 0 : 1;
}

enum class EventType : std::uint8_t {
  unit_spawned,
  unit_died,
  unit_leaked,
  tower_built,
  income_paid,
  projectile_hit,
  rejected,
};

enum class RejectReason : std::uint8_t {
  none,
  clamped,
  insufficient_gold,
  not_buildable,
  occupied,
  invalid_action,
};

/// One thing that happened during a step. `player` is the player the event
/// is credited to: the sender for spawns and leaks, the killer for deaths,
/// the tower owner for hits. `gold` and `income` are signed deltas applied
/// to that player, so summing them reconstructs the economy.
struct Event {
  std::int64_t tick = 0;
  EventType type = EventType::rejected;
  int player = 0;
  std::int64_t entity = -1;
  int kind = -1;
  std::int64_t gold = 0;
  std::int64_t income = 0;
  std::int64_t amount = 0;
  Cell cell;
  RejectReason reason = RejectReason::none;
};

struct GameState {
  SimConfig config;
  std::uint64_t seed = 0;
  std::int64_t tick = 0;
  std::array<PlayerState, 2> players;
  std::vector<Unit> units;         // ascending uid
  std::vector<Tower> towers;       // ascending tid
  std::vector<Projectile> projectiles;  // creation order
  std::optional<Outcome> outcome;
  std::vector<Event> events;       // events of the most recent step, not hashed
};

class StepAfterTerminal : public std::logic_error {
 public:
  StepAfterTerminal() : std::logic_error("step-after-terminal") {}
};

// ---------------------------------------------------------------------------
// Geometry helpers

/// Absolute x coordinate (milli-cells) of a unit.
inline std::int64_t unit_x(const SimConfig& c, const Unit& u) noexcept {
  return u.owner == 0 ? u.progress : c.goal_milli() - u.progress;
}

/// Board column a unit occupies. Measured from the owner's spawn so that the
/// mapping commutes with mirroring the board.
inline int unit_column(const SimConfig& c, const Unit& u) noexcept {
  const int walked = static_cast<int>(u.progress / kMilli);
  return u.owner == 0 ? walked : c.grid_width - 1 - walked;
}

inline int spawn_column(const SimConfig& c, int player) noexcept {
  return player == 0 ? 0 : c.grid_width - 1;
}

/// Centre cell of a player's own half.
inline Cell home_cursor(const SimConfig& c, int player) noexcept {
  const int col = (c.grid_width / 2 - 1) / 2;
  return {player == 0 ? col : c.grid_width - 1 - col, c.grid_height / 2};
}

namespace detail {

inline std::int64_t isqrt(std::int64_t v) noexcept {
  if (v <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

inline Event make_event(const GameState& s, EventType type, int player) {
  Event e;
  e.tick = s.tick + 1;
  e.type = type;
  e.player = player;
  return e;
}

inline Event rejection(const GameState& s, int player, RejectReason why) {
  Event e = make_event(s, EventType::rejected, player);
  e.reason = why;
  return e;
}

template <class T, class Id>
void insert_sorted(std::vector<T>& v, T item, Id T::*id) {
  auto it = std::lower_bound(v.begin(), v.end(), item.*id,
                             [id](const T& a, std::int64_t key) { return a.*id < key; });
  v.insert(it, std::move(item));
}

inline Unit* find_unit(std::vector<Unit>& units, std::int64_t uid) noexcept {
  auto it = std::lower_bound(units.begin(), units.end(), uid,
                             [](const Unit& u, std::int64_t key) { return u.uid < key; });
  return (it != units.end() && it->uid == uid) ? &*it : nullptr;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations

inline GameState new_game(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  GameState s;
  s.config = config;
  s.seed = seed;
  for (int p = 0; p < 2; ++p) {
    auto& pl = s.players[p];
    pl.health = config.initial_health;
    pl.gold = config.initial_gold;
    pl.income = config.initial_income;
    pl.cursor = home_cursor(config, p);
    pl.rng = Rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
  }
  return s;
}

inline std::optional<Outcome> is_terminal(const GameState& s) noexcept {
  const auto h0 = s.players[0].health;
  const auto h1 = s.players[1].health;
  const bool dead0 = h0 <= 0;
  const bool dead1 = h1 <= 0;
  if (!dead0 && !dead1 && s.tick < s.config.max_ticks()) return std::nullopt;
  if (h0 > h1) return Outcome::player0_wins;
  if (h1 > h0) return Outcome::player1_wins;
  return Outcome::draw;
}

/// Applies one player's action. Never throws for unusable actions: they turn
/// into a no-op plus a `rejected` event.
inline std::vector<Event> apply_action(GameState& s, int player, Action action) {
  std::vector<Event> out;
  const auto& c = s.config;
  auto& me = s.players[player];
  const auto decoded = decode(c, action);
  if (!decoded) {
    out.push_back(detail::rejection(s, player, RejectReason::invalid_action));
    return out;
  }

  const int forward = player == 0 ? 1 : -1;
  auto move_cursor = [&](int dcol, int drow) {
    const Cell next{me.cursor.col + dcol, me.cursor.row + drow};
    if (next.col < 0 || next.col >= c.grid_width || next.row < 0 || next.row >= c.grid_height) {
      out.push_back(detail::rejection(s, player, RejectReason::clamped));
      return;
    }
    me.cursor = next;
  };

  switch (decoded->kind) {
    case ActionKind::noop:
      break;
    case ActionKind::cursor_up:
      move_cursor(0, -1);
      break;
    case ActionKind::cursor_down:
      move_cursor(0, 1);
      break;
    case ActionKind::cursor_left:
      move_cursor(-forward, 0);
      break;
    case ActionKind::cursor_right:
      move_cursor(forward, 0);
      break;
    case ActionKind::build_tower: {
      const auto& kind = c.tower_roster[decoded->index];
      const Cell at = me.cursor;
      if (!c.buildable_columns[player].contains(at.col)) {
        out.push_back(detail::rejection(s, player, RejectReason::not_buildable));
        break;
      }
      const bool occupied = std::any_of(s.towers.begin(), s.towers.end(),
                                        [at](const Tower& t) { return t.cell == at; });
      if (occupied) {
        out.push_back(detail::rejection(s, player, RejectReason::occupied));
        break;
      }
      if (me.gold < kind.gold_cost) {
        out.push_back(detail::rejection(s, player, RejectReason::insufficient_gold));
        break;
      }
      me.gold -= kind.gold_cost;
      Tower t;
      t.tid = me.next_tower_seq++ * 2 + player;
      t.owner = player;
      t.kind = kind.id;
      t.cell = at;
      Event e = detail::make_event(s, EventType::tower_built, player);
      e.entity = t.tid;
      e.kind = kind.id;
      e.gold = -kind.gold_cost;
      e.cell = at;
      detail::insert_sorted(s.towers, t, &Tower::tid);
      out.push_back(e);
      break;
    }
    case ActionKind::send_unit: {
      const auto& kind = c.unit_roster[decoded->index];
      if (me.gold < kind.gold_cost) {
        out.push_back(detail::rejection(s, player, RejectReason::insufficient_gold));
        break;
      }
      me.gold -= kind.gold_cost;
      const auto gain = c.unit_income_gain(kind);
      me.income += gain;
      ++me.units_sent;
      Unit u;
      u.uid = me.next_unit_seq++ * 2 + player;
      u.owner = player;
      u.kind = kind.id;
      u.progress = 0;
      u.row = static_cast<int>(me.rng.below(static_cast<std::uint64_t>(c.grid_height)));
      u.health = kind.max_health;
      Event e = detail::make_event(s, EventType::unit_spawned, player);
      e.entity = u.uid;
      e.kind = kind.id;
      e.gold = -kind.gold_cost;
      e.income = gain;
      e.cell = {spawn_column(c, player), u.row};
      detail::insert_sorted(s.units, u, &Unit::uid);
      out.push_back(e);
      break;
    }
  }
  return out;
}

/// Advances the world by one tick after both actions were applied:
/// movement, leaks, tower fire, projectiles, deaths, income, terminal check.
inline std::vector<Event> simulate_tick(GameState& s) {
  std::vector<Event> out;
  const auto& c = s.config;
  const auto goal = c.goal_milli();

  // Movement.
  for (auto& u : s.units) {
    u.progress = std::min(goal, u.progress + c.unit_step_milli(c.unit_roster[u.kind]));
  }

  // Leaks.
  std::erase_if(s.units, [&](const Unit& u) {
    if (u.progress < goal) return false;
    s.players[opponent(u.owner)].health -= 1;
    Event e = detail::make_event(s, EventType::unit_leaked, u.owner);
    e.entity = u.uid;
    e.kind = u.kind;
    e.amount = 1;
    e.cell = {unit_column(c, u), u.row};
    out.push_back(e);
    return true;
  });

  // Towers acquire the nearest enemy unit in range and fire.
  for (auto& t : s.towers) {
    if (t.cooldown_remaining > 0) --t.cooldown_remaining;
    if (t.cooldown_remaining > 0) continue;
    const auto& kind = c.tower_roster[t.kind];
    const auto r = SimConfig::range_milli(kind);
    const std::int64_t tx = t.cell.col * kMilli;
    const std::int64_t ty = t.cell.row * kMilli;
    const Unit* best = nullptr;
    std::int64_t best_d2 = 0;
    for (const auto& u : s.units) {
      if (u.owner == t.owner) continue;
      const auto dx = unit_x(c, u) - tx;
      const auto dy = u.row * kMilli - ty;
      const auto d2 = dx * dx + dy * dy;
      if (d2 > r * r) continue;
      if (best == nullptr || d2 < best_d2) {
        best = &u;
        best_d2 = d2;
      }
    }
    if (best == nullptr) continue;
    s.projectiles.push_back(
        {t.owner, best->uid, tx, ty, kind.damage, c.projectile_step_milli(kind)});
    t.cooldown_remaining = kind.cooldown_ticks;
  }

  // Projectiles home in on their target; within half a cell they hit.
  constexpr std::int64_t hit_radius = kMilli / 2;
  std::erase_if(s.projectiles, [&](Projectile& p) {
    Unit* target = detail::find_unit(s.units, p.target_uid);
    if (target == nullptr || target->health <= 0) return true;
    const auto ux = unit_x(c, *target);
    const auto uy = target->row * kMilli;
    auto dx = ux - p.x;
    auto dy = uy - p.y;
    const auto dist = detail::isqrt(dx * dx + dy * dy);
    if (dist <= p.speed) {
      p.x = ux;
      p.y = uy;
    } else {
      p.x += dx * p.speed / dist;
      p.y += dy * p.speed / dist;
    }
    dx = ux - p.x;
    dy = uy - p.y;
    if (dx * dx + dy * dy > hit_radius * hit_radius) return false;
    target->health -= p.damage;
    s.players[p.owner].damage_dealt += p.damage;
    Event e = detail::make_event(s, EventType::projectile_hit, p.owner);
    e.entity = target->uid;
    e.kind = target->kind;
    e.amount = p.damage;
    e.cell = {unit_column(c, *target), target->row};
    out.push_back(e);
    return true;
  });

  // Deaths pay the killer.
  std::erase_if(s.units, [&](const Unit& u) {
    if (u.health > 0) return false;
    const int killer = opponent(u.owner);
    const auto refund = c.kill_refund(c.unit_roster[u.kind]);
    s.players[killer].gold += refund;
    ++s.players[u.owner].units_lost;
    Event e = detail::make_event(s, EventType::unit_died, killer);
    e.entity = u.uid;
    e.kind = u.kind;
    e.gold = refund;
    e.cell = {unit_column(c, u), u.row};
    out.push_back(e);
    return true;
  });

  ++s.tick;
  if (s.tick % c.income_interval_ticks() == 0) {
    for (int p = 0; p < 2; ++p) {
      auto& pl = s.players[p];
      pl.gold += pl.income;
      Event e;
      e.tick = s.tick;
      e.type = EventType::income_paid;
      e.player = p;
      e.gold = pl.income;
      e.amount = pl.income;
      out.push_back(e);
    }
  }

  s.outcome = is_terminal(s);
  return out;
}

/// One full tick: both actions (player 0 first), then simulate_tick. The
/// returned events are also kept in `s.events`.
inline const std::vector<Event>& step(GameState& s, std::array<Action, 2> actions) {
  if (s.outcome) throw StepAfterTerminal();
  s.events.clear();
  for (int p = 0; p < 2; ++p) {
    auto ev = apply_action(s, p, actions[p]);
    s.events.insert(s.events.end(), ev.begin(), ev.end());
  }
  auto ev = simulate_tick(s);
  s.events.insert(s.events.end(), ev.begin(), ev.end());
  return s.events;
}

/// The same match seen with seats swapped and columns reflected.
inline GameState mirrored(const GameState& s) {
  GameState m = s;
  const int w = s.config.grid_width;
  auto reflect = [w](int col) { return w - 1 - col; };
  for (int p = 0; p < 2; ++p) {
    const auto& src = s.config.buildable_columns[opponent(p)];
    m.config.buildable_columns[p] = {w - src.end, w - src.begin};
    m.players[p] = s.players[opponent(p)];
    m.players[p].cursor.col = reflect(m.players[p].cursor.col);
  }
  for (auto& u : m.units) u.owner = opponent(u.owner);
  for (auto& t : m.towers) {
    t.owner = opponent(t.owner);
    t.cell.col = reflect(t.cell.col);
  }
  for (auto& p : m.projectiles) {
    p.owner = opponent(p.owner);
    p.x = s.config.goal_milli() - p.x;
  }
  if (m.outcome && *m.outcome != Outcome::draw) {
    m.outcome = *m.outcome == Outcome::player0_wins ? Outcome::player1_wins : Outcome::player0_wins;
  }
  for (auto& e : m.events) e.player = opponent(e.player);
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kStateFormatVersion = 1;

inline std::string_view to_string(EventType t) noexcept {
  switch (t) {
    case EventType::unit_spawned: return "UnitSpawned";
    case EventType::unit_died: return "UnitDied";
    case EventType::unit_leaked: return "UnitLeaked";
    case EventType::tower_built: return "TowerBuilt";
    case EventType::income_paid: return "IncomePaid";
    case EventType::projectile_hit: return "ProjectileHit";
    case EventType::rejected: return "Rejected";
  }
  return "?";
}

inline std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::none: return "none";
    case RejectReason::clamped: return "clamped";
    case RejectReason::insufficient_gold: return "insufficient_gold";
    case RejectReason::not_buildable: return "not_buildable";
    case RejectReason::occupied: return "occupied";
    case RejectReason::invalid_action: return "invalid_action";
  }
  return "?";
}

/// Event log line: {tick, type, payload}.
inline json event_to_json(const Event& e) {
  json payload = {{"player", e.player}};
  switch (e.type) {
    case EventType::rejected:
      payload["reason"] = to_string(e.reason);
      break;
    case EventType::income_paid:
      payload["gold"] = e.gold;
      break;
    default:
      payload["entity"] = e.entity;
      payload["kind"] = e.kind;
      payload["gold"] = e.gold;
      payload["income"] = e.income;
      payload["amount"] = e.amount;
      payload["cell"] = json::array({e.cell.col, e.cell.row});
      break;
  }
  return json{{"tick", e.tick}, {"type", to_string(e.type)}, {"payload", std::move(payload)}};
}

/// Canonical, versioned document. Field order is fixed; the last-step event
/// list is not part of the state.
inline json state_to_json(const GameState& s) {
  json players = json::array();
  for (const auto& p : s.players) {
    players.push_back(json{{"health", p.health},
                           {"gold", p.gold},
                           {"income", p.income},
                           {"cursor", json::array({p.cursor.col, p.cursor.row})},
                           {"units_sent", p.units_sent},
                           {"units_lost", p.units_lost},
                           {"damage_dealt", p.damage_dealt},
                           {"rng", p.rng.state()},
                           {"next_unit_seq", p.next_unit_seq},
                           {"next_tower_seq", p.next_tower_seq}});
  }
  json units = json::array();
  for (const auto& u : s.units) {
    units.push_back(json::array({u.uid, u.owner, u.kind, u.progress, u.row, u.health}));
  }
  json towers = json::array();
  for (const auto& t : s.towers) {
    towers.push_back(
        json::array({t.tid, t.owner, t.kind, t.cell.col, t.cell.row, t.cooldown_remaining}));
  }
  json projectiles = json::array();
  for (const auto& p : s.projectiles) {
    projectiles.push_back(json::array({p.owner, p.target_uid, p.x, p.y, p.damage, p.speed}));
  }
  json outcome = nullptr;
  if (s.outcome) outcome = static_cast<int>(*s.outcome);
  return json{{"format", "dlw-state"},
              {"version", kStateFormatVersion},
              {"config", s.config},
              {"seed", s.seed},
              {"tick", s.tick},
              {"players", std::move(players)},
              {"units", std::move(units)},
              {"towers", std::move(towers)},
              {"projectiles", std::move(projectiles)},
              {"outcome", std::move(outcome)}};
}

inline GameState state_from_json(const json& j) {
  if (j.value("format", std::string{}) != "dlw-state")
    throw std::invalid_argument("not a dlw-state document");
  if (j.at("version").get<int>() != kStateFormatVersion)
    throw std::invalid_argument("unsupported dlw-state version");
  GameState s;
  s.config = load_sim_config(j.at("config"));
  s.seed = j.at("seed").get<std::uint64_t>();
  s.tick = j.at("tick").get<std::int64_t>();
  const auto& players = j.at("players");
  for (int i = 0; i < 2; ++i) {
    const auto& pj = players.at(i);
    auto& p = s.players[i];
    p.health = pj.at("health");
    p.gold = pj.at("gold");
    p.income = pj.at("income");
    p.cursor = {pj.at("cursor").at(0).get<int>(), pj.at("cursor").at(1).get<int>()};
    p.units_sent = pj.at("units_sent");
    p.units_lost = pj.at("units_lost");
    p.damage_dealt = pj.at("damage_dealt");
    p.rng.set_state(pj.at("rng").get<std::uint64_t>());
    p.next_unit_seq = pj.at("next_unit_seq");
    p.next_tower_seq = pj.at("next_tower_seq");
  }
  for (const auto& a : j.at("units")) {
    s.units.push_back({a.at(0).get<std::int64_t>(), a.at(1).get<int>(), a.at(2).get<int>(),
                       a.at(3).get<std::int64_t>(), a.at(4).get<int>(), a.at(5).get<std::int64_t>()});
  }
  for (const auto& a : j.at("towers")) {
    s.towers.push_back({a.at(0).get<std::int64_t>(), a.at(1).get<int>(), a.at(2).get<int>(),
                        Cell{a.at(3).get<int>(), a.at(4).get<int>()}, a.at(5).get<std::int64_t>()});
  }
  for (const auto& a : j.at("projectiles")) {
    s.projectiles.push_back({a.at(0).get<int>(), a.at(1).get<std::int64_t>(),
                             a.at(2).get<std::int64_t>(), a.at(3).get<std::int64_t>(),
                             a.at(4).get<std::int64_t>(), a.at(5).get<std::int64_t>()});
  }
  if (!j.at("outcome").is_null()) s.outcome = static_cast<Outcome>(j.at("outcome").get<int>());
  return s;
}

/// 64-bit FNV-1a over the canonical serialization.
inline std::uint64_t state_hash(const GameState& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char ch : state_to_json(s).dump()) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace dlw
