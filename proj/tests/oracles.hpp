// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used to check the library: a dense
// forward pass written straight from the layer definitions, a central
// finite-difference gradient, and value iteration on small MDPs.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dlw/qlearning.hpp"

namespace dlw::oracle {

/// Dense forward pass over a flat parameter vector laid out as
/// [W1 (input-major), b1, W2 (action-major), b2], or [W (input-major), b]
/// for the linear model.
inline std::vector<double> forward(const QConfig& c, const std::vector<double>& p,
                                   const std::vector<double>& x) {
  const std::size_t ni = c.input_size, nh = c.hidden_size, na = c.action_count;
  std::vector<double> q(na, 0.0);
  if (nh == 0) {
    for (std::size_t a = 0; a < na; ++a) {
      double z = p[ni * na + a];
      for (std::size_t j = 0; j < ni; ++j) z += p[j * na + a] * x[j];
      q[a] = z;
    }
    return q;
  }
  std::vector<double> h(p.begin() + static_cast<std::ptrdiff_t>(ni * nh),
                        p.begin() + static_cast<std::ptrdiff_t>(ni * nh + nh));
  for (std::size_t j = 0; j < ni; ++j) {
    if (x[j] == 0.0) continue;  // exact zeros contribute nothing
    for (std::size_t k = 0; k < nh; ++k) h[k] += p[j * nh + k] * x[j];
  }
  for (auto& v : h) v = std::tanh(v);
  const std::size_t w2 = ni * nh + nh;
  const std::size_t b2 = w2 + nh * na;
  for (std::size_t a = 0; a < na; ++a) {
    double z = p[b2 + a];
    for (std::size_t k = 0; k < nh; ++k) z += p[w2 + a * nh + k] * h[k];
    q[a] = z;
  }
  return q;
}

/// Every parameter uniform in [-scale, scale].
inline std::vector<double> random_parameters(std::size_t n, Rng& rng, double scale = 0.5) {
  std::vector<double> p(n);
  for (auto& v : p) v = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

inline double loss(const QConfig& c, const std::vector<double>& p, const Batch& batch,
                   const std::vector<double>& targets) {
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = forward(c, p, batch[i]->s)[static_cast<std::size_t>(batch[i]->action)] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(batch.size());
}

/// Central differences of the loss with the targets held fixed.
inline std::vector<double> numeric_gradient(const QConfig& c, std::vector<double> p, const Batch& batch,
                                            const std::vector<double>& targets, double eps) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + eps;
    const double up = loss(c, p, batch, targets);
    p[i] = keep - eps;
    const double down = loss(c, p, batch, targets);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(n[i]), 1e-8});
    worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
  }
  return worst;
}

/// Finite MDP with stochastic transitions: p[s][a][s'] and r(s,a).
struct Mdp {
  int states = 0;
  int actions = 0;
  std::vector<std::vector<std::vector<double>>> p;
  std::vector<std::vector<double>> reward;
};

/// Rewards uniform in [0,1]; transition rows are normalised uniform draws.
inline Mdp random_mdp(int states, int actions, Rng& rng) {
  Mdp m{states, actions, {}, {}};
  const auto ns = static_cast<std::size_t>(states);
  for (int s = 0; s < states; ++s) {
    std::vector<std::vector<double>> rows;
    std::vector<double> rw;
    for (int a = 0; a < actions; ++a) {
      std::vector<double> row(ns);
      double total = 0.0;
      for (auto& v : row) total += (v = rng.uniform() + 1e-3);
      for (auto& v : row) v /= total;
      rows.push_back(row);
      rw.push_back(rng.uniform());
    }
    m.p.push_back(rows);
    m.reward.push_back(rw);
  }
  return m;
}

inline int sample_next(const Mdp& m, int s, int a, Rng& rng) {
  double u = rng.uniform();
  const auto& row = m.p[s][a];
  for (int n = 0; n + 1 < m.states; ++n) {
    if ((u -= row[n]) < 0.0) return n;
  }
  return m.states - 1;
}

/// Optimal Q by value iteration, iterated to a fixed point.
inline std::vector<std::vector<double>> value_iteration(const Mdp& m, double gamma) {
  std::vector<std::vector<double>> q(static_cast<std::size_t>(m.states),
                                     std::vector<double>(static_cast<std::size_t>(m.actions), 0.0));
  for (int it = 0; it < 100'000; ++it) {
    std::vector<double> v(static_cast<std::size_t>(m.states));
    for (int s = 0; s < m.states; ++s) v[s] = *std::max_element(q[s].begin(), q[s].end());
    double delta = 0.0;
    for (int s = 0; s < m.states; ++s) {
      for (int a = 0; a < m.actions; ++a) {
        double next = 0.0;
        for (int n = 0; n < m.states; ++n) next += m.p[s][a][n] * v[n];
        const double nq = m.reward[s][a] + gamma * next;
        delta = std::max(delta, std::abs(nq - q[s][a]));
        q[s][a] = nq;
      }
    }
    if (delta < 1e-13) break;
  }
  return q;
}

/// Tabular Q-learning where every (state, action) pair is visited in turn
/// and the next state is sampled. Step size is 1 / (1 + (1 - gamma) (n - 1)).
/// Returns the sup-norm distance to value iteration.
inline double tabular_gap(const Mdp& m, double gamma, int sweeps, Rng& rng) {
  QTable table(static_cast<std::size_t>(m.actions));
  for (int k = 1; k <= sweeps; ++k) {
    const double alpha = 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(k - 1));
    for (int s = 0; s < m.states; ++s) {
      for (int a = 0; a < m.actions; ++a) {
        const int n = sample_next(m, s, a, rng);
        tabular_update(table, static_cast<std::uint64_t>(s), a, m.reward[s][a],
                       static_cast<std::uint64_t>(n), alpha, gamma, false);
      }
    }
  }
  const auto ref = value_iteration(m, gamma);
  double worst = 0.0;
  for (int s = 0; s < m.states; ++s) {
    for (int a = 0; a < m.actions; ++a) {
      worst = std::max(worst, std::abs(table.get(static_cast<std::uint64_t>(s), a) - ref[s][a]));
    }
  }
  return worst;
}

/// Random batch of transitions with sparse inputs, like the gray features.
inline std::vector<Transition> random_transitions(const QConfig& c, std::size_t n, Rng& rng) {
  std::vector<Transition> out;
  const auto features = [&] {
    std::vector<double> x(c.input_size, 0.0);
    for (auto& v : x) {
      if (rng.uniform() < 0.5) v = rng.uniform();
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    t.s = features();
    t.action = static_cast<int>(rng.below(c.action_count));
    t.reward = 2.0 * rng.uniform() - 1.0;
    t.s_next = features();
    t.done = rng.uniform() < 0.25;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace dlw::oracle
