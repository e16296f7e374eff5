// SPDX-License-Identifier: Apache-2.0
//
// Q-learning: uniform experience replay, a one-hidden-layer action-value
// network trained by plain gradient descent on the squared TD error, an
// epsilon-greedy policy and a tabular learner.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlw/config.hpp"
#include "dlw/rng.hpp"

namespace dlw {

class UnderfilledBuffer : public std::runtime_error {
 public:
  UnderfilledBuffer() : std::runtime_error("underfilled-buffer") {}
};

class ShapeMismatch : public std::invalid_argument {
 public:
  explicit ShapeMismatch(const std::string& what)
      : std::invalid_argument("shape-mismatch: " + what) {}
};

struct Transition {
  std::vector<double> s;
  int action = 0;
  double reward = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

using Batch = std::vector<const Transition*>;

inline Batch batch_of(std::span<const Transition> ts) {
  Batch b;
  b.reserve(ts.size());
  for (const auto& t : ts) b.push_back(&t);
  return b;
}

/// Fixed-capacity FIFO ring of transitions with its own sampling stream.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10'000, std::uint64_t seed = 0)
      : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity_, 1024));
  }

  std::size_t size() const noexcept { return storage_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

  void push(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// `batch` draws, i.i.d. uniform with replacement.
  Batch sample(std::size_t batch) {
    if (batch == 0 || storage_.size() < batch) throw UnderfilledBuffer();
    Batch out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) out.push_back(&storage_[rng_.below(storage_.size())]);
    return out;
  }

  /// Oldest first.
  std::vector<const Transition*> contents() const {
    std::vector<const Transition*> out;
    out.reserve(storage_.size());
    for (std::size_t i = 0; i < storage_.size(); ++i) {
      out.push_back(&storage_[(head_ + i) % storage_.size()]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest slot once full
  std::vector<Transition> storage_;
  Rng rng_;
};

struct QConfig {
  std::size_t input_size = 336;
  std::size_t hidden_size = 64;  // 0 = linear model
  std::size_t action_count = 12;
  double learning_rate = 0.001;
  double discount = 0.99;
  std::size_t batch_size = 32;
  std::int64_t target_sync_interval = 0;  // 0 = bootstrap from the live parameters
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// input -> dense(hidden, tanh) -> dense(actions, linear), or a single
/// linear layer when hidden_size is 0. Parameters live in one flat vector:
/// [W1 (input-major), b1, W2 (action-major), b2].
class QApproximator {
 public:
  explicit QApproximator(QConfig cfg = {}, std::uint64_t seed = 0)
      : cfg_(cfg), theta_(parameter_count(cfg), 0.0) {
    if (cfg_.input_size == 0 || cfg_.action_count == 0)
      throw std::invalid_argument("network needs inputs and actions");
    // Hidden weights are uniform in +-1/sqrt(fan_in). Biases and the output
    // layer start at zero, so every action has the same initial value and
    // early greedy choices follow the data rather than initialisation noise.
    if (hidden()) {
      Rng rng(seed);
      const double a1 = 1.0 / std::sqrt(static_cast<double>(cfg_.input_size));
      for (std::size_t i = 0; i < cfg_.input_size * cfg_.hidden_size; ++i) {
        theta_[i] = a1 * (2.0 * rng.uniform() - 1.0);
      }
    }
    target_ = theta_;
  }

  static std::size_t parameter_count(const QConfig& c) noexcept {
    if (c.hidden_size == 0) return c.input_size * c.action_count + c.action_count;
    return c.input_size * c.hidden_size + c.hidden_size + c.hidden_size * c.action_count +
           c.action_count;
  }

  const QConfig& config() const noexcept { return cfg_; }
  std::span<const double> parameters() const noexcept { return theta_; }
  std::span<double> parameters() noexcept { return theta_; }
  std::int64_t train_steps() const noexcept { return train_steps_; }
  void set_train_steps(std::int64_t n) noexcept { train_steps_ = n; }

  void set_parameters(std::span<const double> theta) {
    if (theta.size() != theta_.size()) throw ShapeMismatch("parameter vector length");
    theta_.assign(theta.begin(), theta.end());
    target_ = theta_;
  }

  std::vector<double> forward(std::span<const double> s) const {
    check_input(s);
    std::vector<double> hidden_act;
    return forward_with(theta_, s, hidden_act);
  }

  /// TD targets r + gamma * max_a' Q(s', a') (just r for terminal transitions).
  std::vector<double> td_targets(const Batch& batch) const {
    const auto& boot = cfg_.target_sync_interval > 0 ? target_ : theta_;
    std::vector<double> y;
    y.reserve(batch.size());
    std::vector<double> scratch;
    for (const Transition* t : batch) {
      double target = t->reward;
      if (!t->done) {
        check_input(t->s_next);
        const auto q = forward_with(boot, t->s_next, scratch);
        target += cfg_.discount * *std::max_element(q.begin(), q.end());
      }
      y.push_back(target);
    }
    return y;
  }

  /// Mean squared TD error and its exact gradient, with the targets held
  /// constant (semi-gradient).
  LossAndGradient gradient(const Batch& batch) const {
    return gradient_with_targets(batch, td_targets(batch));
  }

  LossAndGradient gradient_with_targets(const Batch& batch, std::span<const double> targets) const {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (targets.size() != batch.size()) throw ShapeMismatch("target count");
    LossAndGradient out;
    out.grad.assign(theta_.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const std::size_t nh = cfg_.hidden_size;
    const std::size_t na = cfg_.action_count;
    std::vector<double> h;
    std::vector<double> dz(nh);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Transition& t = *batch[i];
      check_input(t.s);
      if (t.action < 0 || static_cast<std::size_t>(t.action) >= na) throw ShapeMismatch("action code");
      const auto q = forward_with(theta_, t.s, h);
      const double diff = q[t.action] - targets[i];
      out.loss += diff * diff * inv_n;
      const double g = 2.0 * diff * inv_n;
      const auto a = static_cast<std::size_t>(t.action);
      if (!hidden()) {
        for (std::size_t j = 0; j < t.s.size(); ++j) {
          if (t.s[j] != 0.0) out.grad[j * na + a] += g * t.s[j];
        }
        out.grad[b2_offset() + a] += g;
        continue;
      }
      const std::size_t w2 = w2_offset() + a * nh;
      for (std::size_t k = 0; k < nh; ++k) {
        out.grad[w2 + k] += g * h[k];
        dz[k] = g * theta_[w2 + k] * (1.0 - h[k] * h[k]);
      }
      out.grad[b2_offset() + a] += g;
      const std::size_t b1 = b1_offset();
      for (std::size_t k = 0; k < nh; ++k) out.grad[b1 + k] += dz[k];
      for (std::size_t j = 0; j < t.s.size(); ++j) {
        const double x = t.s[j];
        if (x == 0.0) continue;
        double* row = &out.grad[j * nh];
        for (std::size_t k = 0; k < nh; ++k) row[k] += dz[k] * x;
      }
    }
    return out;
  }

  /// One plain gradient-descent step on `batch`; returns the pre-update loss.
  double train_on_batch(const Batch& batch) {
    const auto lg = gradient(batch);
    for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] -= cfg_.learning_rate * lg.grad[i];
    ++train_steps_;
    if (cfg_.target_sync_interval > 0 && train_steps_ % cfg_.target_sync_interval == 0) target_ = theta_;
    return lg.loss;
  }

  double train_step(ReplayBuffer& buffer) {
    if (buffer.size() < cfg_.batch_size) throw UnderfilledBuffer();
    return train_on_batch(buffer.sample(cfg_.batch_size));
  }

  friend bool operator==(const QApproximator& a, const QApproximator& b) {
    return a.theta_ == b.theta_ && a.cfg_.input_size == b.cfg_.input_size &&
           a.cfg_.hidden_size == b.cfg_.hidden_size && a.cfg_.action_count == b.cfg_.action_count;
  }

 private:
  bool hidden() const noexcept { return cfg_.hidden_size > 0; }
  std::size_t b1_offset() const noexcept { return cfg_.input_size * cfg_.hidden_size; }
  std::size_t w2_offset() const noexcept { return b1_offset() + cfg_.hidden_size; }
  std::size_t b2_offset() const noexcept {
    return hidden() ? w2_offset() + cfg_.hidden_size * cfg_.action_count
                    : cfg_.input_size * cfg_.action_count;
  }

  void check_input(std::span<const double> s) const {
    if (s.size() != cfg_.input_size) {
      throw ShapeMismatch("expected " + std::to_string(cfg_.input_size) + " features, got " +
                          std::to_string(s.size()));
    }
  }

  std::vector<double> forward_with(const std::vector<double>& theta, std::span<const double> s,
                                   std::vector<double>& h) const {
    const std::size_t na = cfg_.action_count;
    std::vector<double> q(na);
    if (!hidden()) {
      for (std::size_t a = 0; a < na; ++a) q[a] = theta[b2_offset() + a];
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[j] == 0.0) continue;
        const double* row = &theta[j * na];
        for (std::size_t a = 0; a < na; ++a) q[a] += row[a] * s[j];
      }
      return q;
    }
    const std::size_t nh = cfg_.hidden_size;
    h.assign(theta.begin() + static_cast<std::ptrdiff_t>(b1_offset()),
             theta.begin() + static_cast<std::ptrdiff_t>(b1_offset() + nh));
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double x = s[j];
      if (x == 0.0) continue;
      const double* row = &theta[j * nh];
      for (std::size_t k = 0; k < nh; ++k) h[k] += row[k] * x;
    }
    for (auto& v : h) v = std::tanh(v);
    for (std::size_t a = 0; a < na; ++a) {
      const double* w = &theta[w2_offset() + a * nh];
      double acc = theta[b2_offset() + a];
      for (std::size_t k = 0; k < nh; ++k) acc += w[k] * h[k];
      q[a] = acc;
    }
    return q;
  }

  QConfig cfg_;
  std::vector<double> theta_;
  std::vector<double> target_;
  std::int64_t train_steps_ = 0;
};

inline std::vector<double> q_forward(const QApproximator& net, std::span<const double> s) {
  return net.forward(s);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

inline json checkpoint_to_json(const QApproximator& net) {
  const auto& c = net.config();
  return json{{"format", "dlw-qnet"},
              {"version", kCheckpointVersion},
              {"input_size", c.input_size},
              {"hidden_size", c.hidden_size},
              {"action_count", c.action_count},
              {"learning_rate", c.learning_rate},
              {"discount", c.discount},
              {"batch_size", c.batch_size},
              {"target_sync_interval", c.target_sync_interval},
              {"train_steps", net.train_steps()},
              {"params", std::vector<double>(net.parameters().begin(), net.parameters().end())}};
}

inline QApproximator checkpoint_from_json(const json& j) {
  if (j.value("format", std::string{}) != "dlw-qnet" || j.value("version", 0) != kCheckpointVersion)
    throw std::invalid_argument("not a dlw-qnet v1 checkpoint");
  QConfig c;
  c.input_size = j.at("input_size");
  c.hidden_size = j.at("hidden_size");
  c.action_count = j.at("action_count");
  c.learning_rate = j.at("learning_rate");
  c.discount = j.at("discount");
  c.batch_size = j.at("batch_size");
  c.target_sync_interval = j.at("target_sync_interval");
  QApproximator net(c);
  net.set_parameters(j.at("params").get<std::vector<double>>());
  net.set_train_steps(j.value("train_steps", std::int64_t{0}));
  return net;
}

inline void save_checkpoint(const std::string& path, const QApproximator& net) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << checkpoint_to_json(net).dump() << '\n';
}

inline QApproximator load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Policy

/// Greedy action, ties to the lowest code.
inline int argmax(std::span<const double> q) {
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

/// Epsilon-greedy. At epsilon >= 1 exactly one uniform draw is consumed per
/// call, so the policy is step-for-step identical to a uniform random agent
/// on the same stream.
inline int select_action(std::span<const double> q, double epsilon, Rng& rng) {
  if (q.empty()) throw std::invalid_argument("no actions");
  if (epsilon >= 1.0) return static_cast<int>(rng.below(q.size()));
  if (epsilon <= 0.0) return argmax(q);
  if (rng.uniform() < epsilon) return static_cast<int>(rng.below(q.size()));
  return argmax(q);
}

/// Linear 1.0 -> 0.1 over the first half of the run, then 0.1.
inline double epsilon_at(std::int64_t episode, std::int64_t total_episodes) {
  constexpr double start = 1.0;
  constexpr double floor = 0.1;
  const double half = static_cast<double>(total_episodes) / 2.0;
  if (half <= 0.0 || static_cast<double>(episode) >= half) return floor;
  return start - (start - floor) * static_cast<double>(episode) / half;
}

// ---------------------------------------------------------------------------
// Tabular

class QTable {
 public:
  explicit QTable(std::size_t action_count) : actions_(action_count) {}

  std::size_t action_count() const noexcept { return actions_; }

  double get(std::uint64_t s, int a) const {
    auto it = q_.find(s);
    return it == q_.end() ? 0.0 : it->second.at(static_cast<std::size_t>(a));
  }

  double& at(std::uint64_t s, int a) {
    auto [it, _] = q_.try_emplace(s, actions_, 0.0);
    return it->second.at(static_cast<std::size_t>(a));
  }

  double max_value(std::uint64_t s) const {
    auto it = q_.find(s);
    if (it == q_.end()) return 0.0;
    return *std::max_element(it->second.begin(), it->second.end());
  }

 private:
  std::size_t actions_;
  std::unordered_map<std::uint64_t, std::vector<double>> q_;
};

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') * [not done] - Q(s,a)).
inline void tabular_update(QTable& table, std::uint64_t s, int a, double r, std::uint64_t s_next,
                           double alpha, double gamma, bool done) {
  const double bootstrap = done ? 0.0 : gamma * table.max_value(s_next);
  double& q = table.at(s, a);
  q += alpha * (r + bootstrap - q);
}

}  // namespace dlw
