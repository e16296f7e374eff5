// SPDX-License-Identifier: Apache-2.0
//
// Observation encoders. Every encoding is from one player's point of view;
// for player 1 the columns are reflected so that the observer's base is
// always column 0 and the enemy base is always the last column.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "dlw/game.hpp"

namespace dlw {

/// Dense row-major array indexed [i][col][row] with `depth` leading slices.
/// Used for the 5-channel tensor (depth = channel) and the RGB image
/// (depth = colour channel, stored planar).
class Grid {
 public:
  Grid() = default;
  Grid(int depth, int width, int height)
      : depth_(depth), width_(width), height_(height),
        data_(static_cast<std::size_t>(depth) * width * height, 0.0) {}

  int depth() const noexcept { return depth_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  double& at(int i, int col, int row) noexcept { return data_[index(i, col, row)]; }
  double at(int i, int col, int row) const noexcept { return data_[index(i, col, row)]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int i, int col, int row) const noexcept {
    return (static_cast<std::size_t>(i) * width_ + col) * height_ + row;
  }

  int depth_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

namespace channel {
inline constexpr int friendly_towers = 0;
inline constexpr int enemy_towers = 1;
inline constexpr int friendly_units = 2;
inline constexpr int enemy_units = 3;
inline constexpr int cursor = 4;
}  // namespace channel

inline constexpr double kGoldCap = 1000.0;
inline constexpr double kIncomeCap = 500.0;
inline constexpr int kAuxSize = 6;

inline constexpr double kGrayTower = 1.0 / 3.0;
inline constexpr double kGrayEnemyUnit = 2.0 / 3.0;
inline constexpr double kGrayCursor = 1.0;

/// Column as seen by `perspective`.
inline int view_column(const SimConfig& c, int perspective, int col) noexcept {
  return perspective == 0 ? col : c.grid_width - 1 - col;
}

/// 5 x W x H: friendly towers, enemy towers, friendly units, enemy units,
/// own cursor. Unit cells hold the summed health fraction, clamped to 1.
inline Grid encode_tensor(const GameState& s, int perspective) {
  const auto& c = s.config;
  Grid g(5, c.grid_width, c.grid_height);
  for (const auto& t : s.towers) {
    const int ch = t.owner == perspective ? channel::friendly_towers : channel::enemy_towers;
    g.at(ch, view_column(c, perspective, t.cell.col), t.cell.row) = 1.0;
  }
  for (const auto& u : s.units) {
    const int ch = u.owner == perspective ? channel::friendly_units : channel::enemy_units;
    const double frac = static_cast<double>(u.health) /
                        static_cast<double>(c.unit_roster[u.kind].max_health);
    g.at(ch, view_column(c, perspective, unit_column(c, u)), u.row) += frac;
  }
  for (int ch : {channel::friendly_units, channel::enemy_units}) {
    for (int col = 0; col < c.grid_width; ++col) {
      for (int row = 0; row < c.grid_height; ++row) {
        auto& v = g.at(ch, col, row);
        v = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  const auto cur = s.players[perspective].cursor;
  g.at(channel::cursor, view_column(c, perspective, cur.col), cur.row) = 1.0;
  return g;
}

/// 3 x W x H planar RGB: red friendly towers, green enemy units, cursor teal
/// (green + blue). Overlaps take the per-channel max.
inline Grid encode_rgb_heatmap(const GameState& s, int perspective) {
  const Grid t = encode_tensor(s, perspective);
  const auto& c = s.config;
  Grid rgb(3, c.grid_width, c.grid_height);
  for (int col = 0; col < c.grid_width; ++col) {
    for (int row = 0; row < c.grid_height; ++row) {
      const double cursor = t.at(channel::cursor, col, row);
      rgb.at(0, col, row) = t.at(channel::friendly_towers, col, row);
      rgb.at(1, col, row) = std::max(t.at(channel::enemy_units, col, row), cursor);
      rgb.at(2, col, row) = cursor;
    }
  }
  return rgb;
}

/// 1 x W x H grayscale: max of tower 1/3, enemy unit 2/3 (scaled by
/// intensity) and cursor 1.
inline Grid encode_gray_heatmap(const GameState& s, int perspective) {
  const Grid t = encode_tensor(s, perspective);
  const auto& c = s.config;
  Grid gray(1, c.grid_width, c.grid_height);
  for (int col = 0; col < c.grid_width; ++col) {
    for (int row = 0; row < c.grid_height; ++row) {
      gray.at(0, col, row) = std::max({kGrayTower * t.at(channel::friendly_towers, col, row),
                                       kGrayEnemyUnit * t.at(channel::enemy_units, col, row),
                                       kGrayCursor * t.at(channel::cursor, col, row)});
    }
  }
  return gray;
}

/// [own health, own gold, own income, enemy health, enemy gold, enemy income],
/// each over its cap and clamped to [0, 1].
inline std::array<double, kAuxSize> encode_aux(const GameState& s, int perspective) {
  auto norm = [](double v, double cap) { return std::clamp(v / cap, 0.0, 1.0); };
  const double health_cap = static_cast<double>(s.config.initial_health);
  std::array<double, kAuxSize> aux{};
  for (int k = 0; k < 2; ++k) {
    const auto& p = s.players[k == 0 ? perspective : opponent(perspective)];
    aux[3 * k + 0] = norm(static_cast<double>(p.health), health_cap);
    aux[3 * k + 1] = norm(static_cast<double>(p.gold), kGoldCap);
    aux[3 * k + 2] = norm(static_cast<double>(p.income), kIncomeCap);
  }
  return aux;
}

struct Observation {
  Grid tensor;
  Grid rgb;
  Grid gray;
  std::array<double, kAuxSize> aux{};
};

inline Observation observe(const GameState& s, int perspective) {
  return {encode_tensor(s, perspective), encode_rgb_heatmap(s, perspective),
          encode_gray_heatmap(s, perspective), encode_aux(s, perspective)};
}

/// Flattened grayscale board (col-major: index col * H + row) followed by the
/// aux vector. This is the learner's input (336 values on the default grid).
inline std::vector<double> gray_features(const GameState& s, int perspective) {
  const Grid gray = encode_gray_heatmap(s, perspective);
  const auto aux = encode_aux(s, perspective);
  std::vector<double> f(gray.values().begin(), gray.values().end());
  f.insert(f.end(), aux.begin(), aux.end());
  return f;
}

inline std::size_t gray_feature_size(const SimConfig& c) noexcept {
  return static_cast<std::size_t>(c.grid_width) * c.grid_height + kAuxSize;
}

// ---------------------------------------------------------------------------
// Frame export (binary PPM / PGM, max value 255, x = column, y = row)

inline unsigned char to_byte(double v) noexcept {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_ppm(const std::string& path, const Grid& rgb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
  for (int row = 0; row < rgb.height(); ++row) {
    for (int col = 0; col < rgb.width(); ++col) {
      for (int ch = 0; ch < 3; ++ch) out.put(static_cast<char>(to_byte(rgb.at(ch, col, row))));
    }
  }
}

inline void write_pgm(const std::string& path, const Grid& gray) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << gray.width() << ' ' << gray.height() << "\n255\n";
  for (int row = 0; row < gray.height(); ++row) {
    for (int col = 0; col < gray.width(); ++col) {
      out.put(static_cast<char>(to_byte(gray.at(0, col, row))));
    }
  }
}

/// Writes `{episode}_{tick}.ppm` and `{episode}_{tick}.pgm` into `dir`.
inline void export_frame(const std::string& dir, const GameState& s, int perspective,
                         std::int64_t episode) {
  const std::string stem = dir + "/" + std::to_string(episode) + "_" + std::to_string(s.tick);
  write_ppm(stem + ".ppm", encode_rgb_heatmap(s, perspective));
  write_pgm(stem + ".pgm", encode_gray_heatmap(s, perspective));
}

}  // namespace dlw
