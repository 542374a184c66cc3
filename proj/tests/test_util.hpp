#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "etpareto/etpareto.hpp"

namespace etpareto::testing {

inline Matrix eye(std::size_t n, double s = 1.0) { return Matrix::identity(n, s); }

// F = G = H = I with the given noise levels; the 2D numbers are the evaluation system.
inline FilterParams identity_system(std::size_t n, double q = 0.0049, double r = 0.0009) {
  return {eye(n), eye(n), eye(n), eye(n, q), eye(n, r)};
}

inline Scenario make_scenario(std::size_t n, std::vector<Vec> waypoints, std::vector<HyperRect> obstacles,
                              HyperRect target, Vec deltas, double q = 0.0049, double r = 0.0009, double p0 = 0.002) {
  Scenario s;
  s.name = "fixture";
  s.params = identity_system(n, q, r);
  s.initial = {waypoints.front(), eye(n, p0)};
  s.waypoints = std::move(waypoints);
  s.obstacles = std::move(obstacles);
  s.target = std::move(target);
  s.deltas = std::move(deltas);
  s.control.u_max = Vec(n, 0.5);
  validate(s);
  return s;
}

inline HyperRect box_around(const Vec& c, double half) {
  HyperRect b;
  for (double x : c) {
    b.lo.push_back(x - half);
    b.hi.push_back(x + half);
  }
  return b;
}

// Two segments along the x axis, nothing in the way.
inline Scenario open_line(Vec deltas = {1.0, 2.0}, double noise = 1.0) {
  return make_scenario(2, {{0, 0}, {1, 0}, {2, 0}}, {}, box_around({2, 0}, 0.25), std::move(deltas),
                       0.0049 * noise, 0.0009 * noise, 0.002 * noise);
}

// Practically noise-free version of open_line (noise scaled by 1e-8).
inline Scenario quiet_line(Vec deltas = {1.0, 2.0}) { return open_line(std::move(deltas), 1e-8); }

inline std::filesystem::path scenario_dir() { return ETPARETO_SCENARIO_DIR; }

// Gauss-Jordan inverse with partial pivoting, independent of the library solvers.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a(c, k), a(piv, k));
      std::swap(inv(c, k), inv(piv, k));
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

// Textbook Kalman filter, written out directly.
struct PlainKf {
  Vec x;
  Matrix p;
  void step(const FilterParams& m, const Vec& u, const Vec& y) {
    const Vec xp = m.F * x + m.G * u;
    const Matrix pp = m.F * p * m.F.transpose() + m.Q;
    const Matrix s = m.H * pp * m.H.transpose() + m.R;
    const Matrix k = pp * m.H.transpose() * inverse(s);
    x = xp + k * (y - m.H * xp);
    p = (Matrix::identity(p.rows()) - k * m.H) * pp;
  }
};

// Hand-built MDPs. Non-terminal states come first and only point forward;
// the last three states are coll, tar, free.
struct Row {
  std::size_t state;
  std::size_t action;
  double cost;
  std::vector<std::pair<std::size_t, double>> to;
};

inline MOMDP make_mdp(std::size_t non_terminal, std::size_t actions, const std::vector<Row>& rows) {
  MOMDP m;
  for (std::size_t a = 0; a < actions; ++a) m.action_values.push_back(1.0 + static_cast<double>(a));
  for (std::size_t s = 0; s < non_terminal; ++s) m.states.push_back({{StateKind::Belief, s, {}}, {}});
  m.s_coll = non_terminal;
  m.s_tar = non_terminal + 1;
  m.s_free = non_terminal + 2;
  m.states.push_back({{StateKind::Collision, 0, {}}, {}});
  m.states.push_back({{StateKind::Target, 0, {}}, {}});
  m.states.push_back({{StateKind::Free, 0, {}}, {}});
  for (const Row& r : rows) {
    ActionEntry e;
    e.action = r.action;
    e.cost = r.cost;
    for (auto [t, p] : r.to) e.successors.push_back({t, p});
    m.states.at(r.state).actions.push_back(std::move(e));
  }
  m.validate();
  return m;
}

// Random layered MDP: `layers` layers of `width` states, `actions` actions
// everywhere. Each row spreads mass over the next layer and the terminals.
inline MOMDP random_layered_mdp(std::uint64_t seed, std::size_t layers, std::size_t width, std::size_t actions) {
  RngStream rng(seed);
  const std::size_t nt = 1 + (layers - 1) * width;
  const std::size_t coll = nt, tar = nt + 1, free = nt + 2;
  std::vector<Row> rows;
  auto layer_of = [&](std::size_t s) { return s == 0 ? 0 : 1 + (s - 1) / width; };
  for (std::size_t s = 0; s < nt; ++s) {
    const std::size_t l = layer_of(s);
    for (std::size_t a = 0; a < actions; ++a) {
      std::vector<std::size_t> dest;
      if (l + 1 < layers)
        for (std::size_t j = 0; j < width; ++j) dest.push_back(1 + l * width + j);
      dest.push_back(coll);
      dest.push_back(tar);
      if (l + 1 == layers) dest.push_back(free);
      Vec w;
      double sum = 0.0;
      for (std::size_t i = 0; i < dest.size(); ++i) {
        w.push_back(rng.uniform() + 0.05);
        sum += w.back();
      }
      Row r{s, a, std::floor(rng.uniform() * 20.0), {}};
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < dest.size(); ++i) {
        r.to.push_back({dest[i], w[i] / sum});
        acc += w[i] / sum;
      }
      r.to.push_back({dest.back(), 1.0 - acc});
      rows.push_back(std::move(r));
    }
  }
  return make_mdp(nt, actions, rows);
}

// Every pure policy of a small MDP.
inline std::vector<Policy> all_pure_policies(const MOMDP& m) {
  std::vector<std::size_t> nt;
  for (std::size_t s = 0; s < m.size(); ++s)
    if (!m.terminal(s)) nt.push_back(s);
  std::vector<Policy> out;
  std::vector<std::size_t> choice(m.size(), 0);
  while (true) {
    out.push_back(pure_policy(m, choice));
    std::size_t i = 0;
    for (; i < nt.size(); ++i) {
      if (++choice[nt[i]] < m.num_actions()) break;
      choice[nt[i]] = 0;
    }
    if (i == nt.size()) break;
  }
  return out;
}

}  // namespace etpareto::testing
