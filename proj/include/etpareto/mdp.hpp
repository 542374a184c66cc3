#pragma once

// Finite multi-objective MDP: abstract states at waypoints, one action per
// threshold, empirical transition rows, per-(state, action) energy cost and
// three absorbing terminals (collision, target, free).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "etpareto/errors.hpp"
#include "etpareto/linalg.hpp"

namespace etpareto {

enum class StateKind : std::uint8_t { Belief, Method1Belief, Collision, Target, Free };

inline const char* to_string(StateKind k) {
  switch (k) {
    case StateKind::Belief: return "belief";
    case StateKind::Method1Belief: return "method1";
    case StateKind::Collision: return "coll";
    case StateKind::Target: return "tar";
    case StateKind::Free: return "free";
  }
  return "?";
}

inline StateKind state_kind_from_string(const std::string& s) {
  if (s == "belief") return StateKind::Belief;
  if (s == "method1") return StateKind::Method1Belief;
  if (s == "coll") return StateKind::Collision;
  if (s == "tar") return StateKind::Target;
  if (s == "free") return StateKind::Free;
  throw ParseError("unknown state kind '" + s + "'");
}

inline bool is_terminal(StateKind k) {
  return k == StateKind::Collision || k == StateKind::Target || k == StateKind::Free;
}

struct StateLabel {
  StateKind kind = StateKind::Belief;
  std::size_t waypoint = 0;
  std::vector<std::uint32_t> regions;  // one region index per axis (Belief only)

  friend bool operator==(const StateLabel&, const StateLabel&) = default;
  friend auto operator<=>(const StateLabel&, const StateLabel&) = default;
};

struct Successor {
  std::size_t state;
  double prob;
  friend bool operator==(const Successor&, const Successor&) = default;
};

struct ActionEntry {
  std::size_t action;  // index into MOMDP::action_values
  std::vector<Successor> successors;
  double cost = 0.0;
  // Diagnostics from Monte-Carlo estimation; zero for hand-built models.
  double mean_steps = 0.0;
  double mean_triggers = 0.0;
  double product_cost = 0.0;  // c_m * mean_steps * expected_trigger_rate(delta)
};

struct MdpState {
  StateLabel label;
  std::vector<ActionEntry> actions;  // empty for terminals
};

struct MOMDP {
  Vec action_values;  // the thresholds
  std::vector<MdpState> states;
  std::size_t initial = 0;
  std::size_t s_coll = 0;
  std::size_t s_tar = 0;
  std::size_t s_free = 0;

  std::size_t num_actions() const noexcept { return action_values.size(); }
  std::size_t size() const noexcept { return states.size(); }
  bool terminal(std::size_t s) const { return is_terminal(states.at(s).label.kind); }

  const ActionEntry* find_action(std::size_t s, std::size_t a) const {
    for (const auto& e : states.at(s).actions)
      if (e.action == a) return &e;
    return nullptr;
  }

  std::size_t non_terminal_count() const {
    std::size_t c = 0;
    for (const auto& st : states) c += is_terminal(st.label.kind) ? 0 : 1;
    return c;
  }

  // Row-stochastic transitions, nonnegative costs, absorbing terminals.
  void validate(double tol = 1e-12) const {
    auto fail = [](const std::string& m) { throw ValidationError("MOMDP: " + m); };
    if (initial >= states.size()) fail("initial state out of range");
    for (std::size_t t : {s_coll, s_tar, s_free})
      if (t >= states.size() || !terminal(t)) fail("terminal index does not name a terminal state");
    for (std::size_t s = 0; s < states.size(); ++s) {
      const auto& st = states[s];
      if (is_terminal(st.label.kind)) {
        if (!st.actions.empty()) fail("terminal state " + std::to_string(s) + " has actions");
        continue;
      }
      if (st.actions.empty()) fail("non-terminal state " + std::to_string(s) + " has no actions");
      for (const auto& e : st.actions) {
        if (e.action >= action_values.size()) fail("action index out of range");
        if (!(e.cost >= 0.0)) fail("negative cost");
        double sum = 0.0;
        for (const auto& sc : e.successors) {
          if (sc.state >= states.size()) fail("successor out of range");
          if (!(sc.prob >= 0.0)) fail("negative probability");
          sum += sc.prob;
        }
        if (std::abs(sum - 1.0) > tol) {
          std::ostringstream os;
          os << "row (" << s << ", " << e.action << ") sums to " << sum;
          fail(os.str());
        }
      }
    }
  }
};

// --- JSON ------------------------------------------------------------------

using MdpJson = nlohmann::ordered_json;

inline MdpJson to_json(const MOMDP& m) {
  MdpJson j;
  j["deltas"] = m.action_values;
  j["initial"] = m.initial;
  j["labels"] = MdpJson{{"collision", m.s_coll}, {"target", m.s_tar}, {"free", m.s_free}};
  MdpJson states = MdpJson::array();
  MdpJson transitions = MdpJson::array();
  MdpJson costs = MdpJson::array();
  MdpJson stats = MdpJson::array();
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    const auto& st = m.states[s];
    MdpJson js{{"id", s}, {"kind", to_string(st.label.kind)}};
    if (!is_terminal(st.label.kind)) js["waypoint"] = st.label.waypoint;
    if (st.label.kind == StateKind::Belief) js["regions"] = st.label.regions;
    states.push_back(js);
    for (const auto& e : st.actions) {
      for (const auto& sc : e.successors) transitions.push_back(MdpJson::array({s, e.action, sc.state, sc.prob}));
      costs.push_back(MdpJson::array({s, e.action, e.cost}));
      stats.push_back(MdpJson::array({s, e.action, e.mean_steps, e.mean_triggers, e.product_cost}));
    }
  }
  j["states"] = states;
  j["transitions"] = transitions;
  j["costs"] = costs;
  j["action_stats"] = stats;
  return j;
}

inline MOMDP momdp_from_json(const MdpJson& j) {
  try {
    MOMDP m;
    m.action_values = j.at("deltas").get<Vec>();
    m.initial = j.at("initial").get<std::size_t>();
    const auto& labels = j.at("labels");
    m.s_coll = labels.at("collision").get<std::size_t>();
    m.s_tar = labels.at("target").get<std::size_t>();
    m.s_free = labels.at("free").get<std::size_t>();
    for (const auto& js : j.at("states")) {
      MdpState st;
      st.label.kind = state_kind_from_string(js.at("kind").get<std::string>());
      if (js.contains("waypoint")) st.label.waypoint = js["waypoint"].get<std::size_t>();
      if (js.contains("regions")) st.label.regions = js["regions"].get<std::vector<std::uint32_t>>();
      if (js.at("id").get<std::size_t>() != m.states.size()) throw ParseError("state ids must be 0..n-1 in order");
      m.states.push_back(std::move(st));
    }
    auto entry = [&](std::size_t s, std::size_t a) -> ActionEntry& {
      if (s >= m.states.size()) throw ParseError("state index out of range");
      auto& acts = m.states[s].actions;
      for (auto& e : acts)
        if (e.action == a) return e;
      acts.push_back(ActionEntry{a, {}, 0.0});
      return acts.back();
    };
    for (const auto& c : j.at("costs")) entry(c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>()).cost = c.at(2).get<double>();
    for (const auto& t : j.at("transitions"))
      entry(t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>())
          .successors.push_back({t.at(2).get<std::size_t>(), t.at(3).get<double>()});
    if (j.contains("action_stats"))
      for (const auto& t : j["action_stats"]) {
        auto& e = entry(t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>());
        e.mean_steps = t.at(2).get<double>();
        e.mean_triggers = t.at(3).get<double>();
        e.product_cost = t.at(4).get<double>();
      }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed MDP document: ") + e.what());
  }
}

}  // namespace etpareto
