#pragma once

// Multi-objective analysis of the abstract MDP: strategy evaluation,
// scalarized value iteration, weight-sweep Pareto fronts, point queries with
// initial-state mixtures, and PRISM export/import.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "etpareto/errors.hpp"
#include "etpareto/linalg.hpp"
#include "etpareto/mdp.hpp"
#include "etpareto/parallel.hpp"

namespace etpareto {

struct ObjectivePoint {
  double p_tar = 0.0;
  double p_coll = 0.0;
  double e_c = 0.0;
  friend bool operator==(const ObjectivePoint&, const ObjectivePoint&) = default;
};

/// a dominates b: p_tar no lower, p_coll and e_c no higher, strictly better in one.
inline bool dominates(const ObjectivePoint& a, const ObjectivePoint& b, double tol = 0.0) {
  const bool no_worse = a.p_tar >= b.p_tar - tol && a.p_coll <= b.p_coll + tol && a.e_c <= b.e_c + tol;
  const bool better = a.p_tar > b.p_tar + tol || a.p_coll < b.p_coll - tol || a.e_c < b.e_c - tol;
  return no_worse && better;
}

inline bool same_point(const ObjectivePoint& a, const ObjectivePoint& b, double tol) {
  return std::abs(a.p_tar - b.p_tar) <= tol && std::abs(a.p_coll - b.p_coll) <= tol && std::abs(a.e_c - b.e_c) <= tol;
}

// Per-state distribution over action indices; empty for terminals (and for
// states the policy leaves undefined).
using Policy = std::vector<Vec>;

inline Policy pure_policy(const MOMDP& mdp, const std::vector<std::size_t>& actions) {
  if (actions.size() != mdp.size()) throw InputError("pure_policy: one action per state required");
  Policy p(mdp.size());
  for (std::size_t s = 0; s < mdp.size(); ++s) {
    if (mdp.terminal(s)) continue;
    p[s] = Vec(mdp.num_actions(), 0.0);
    p[s].at(actions[s]) = 1.0;
  }
  return p;
}

// Action index of a deterministic policy per state (npos for terminals).
inline std::vector<std::size_t> pure_actions(const Policy& p) {
  std::vector<std::size_t> out(p.size(), static_cast<std::size_t>(-1));
  for (std::size_t s = 0; s < p.size(); ++s)
    for (std::size_t a = 0; a < p[s].size(); ++a)
      if (p[s][a] == 1.0) out[s] = a;
  return out;
}

// A policy, or an initial-state mixture: with probability `primary_weight`
// the whole run follows `primary`, otherwise `secondary`.
struct Strategy {
  Policy primary;
  std::optional<Policy> secondary;
  double primary_weight = 1.0;
};

namespace detail {

inline std::vector<bool> reachable_under(const MOMDP& mdp, const Policy& policy) {
  std::vector<bool> seen(mdp.size(), false);
  std::vector<std::size_t> stack{mdp.initial};
  seen[mdp.initial] = true;
  while (!stack.empty()) {
    const std::size_t s = stack.back();
    stack.pop_back();
    if (mdp.terminal(s)) continue;
    if (s >= policy.size() || policy[s].size() != mdp.num_actions())
      throw InputError("evaluate_strategy: no choice defined at reachable state " + std::to_string(s));
    for (std::size_t a = 0; a < policy[s].size(); ++a) {
      if (policy[s][a] <= 0.0) continue;
      const ActionEntry* e = mdp.find_action(s, a);
      if (!e) throw InputError("evaluate_strategy: policy picks a missing action at state " + std::to_string(s));
      for (const Successor& su : e->successors)
        if (su.prob > 0.0 && !seen[su.state]) {
          seen[su.state] = true;
          stack.push_back(su.state);
        }
    }
  }
  return seen;
}

// Sweeps states in reverse id order (successors carry larger ids in a built
// MDP, so one sweep is exact) until the largest change is below `tol`.
template <class Update>
void backward_sweeps(const MOMDP& mdp, Update&& update, double tol, const char* who) {
  const std::size_t max_sweeps = mdp.size() + 2;
  for (std::size_t it = 0; it < max_sweeps; ++it) {
    double change = 0.0;
    for (std::size_t s = mdp.size(); s-- > 0;)
      if (!mdp.terminal(s)) change = std::max(change, update(s));
    if (change <= tol) return;
  }
  throw ConvergenceError(std::string(who) + ": backward iteration did not converge (cyclic model?)");
}

}  // namespace detail

/// Reach probabilities of s_tar and s_coll and the expected cumulative cost
/// of the chain induced by `policy` from the initial state.
inline ObjectivePoint evaluate_policy(const MOMDP& mdp, const Policy& policy) {
  const std::vector<bool> live = detail::reachable_under(mdp, policy);
  Vec tar(mdp.size(), 0.0), coll(mdp.size(), 0.0), cost(mdp.size(), 0.0);
  tar[mdp.s_tar] = 1.0;
  coll[mdp.s_coll] = 1.0;
  detail::backward_sweeps(
      mdp,
      [&](std::size_t s) {
        if (!live[s]) return 0.0;
        double t = 0.0, c = 0.0, e = 0.0;
        for (std::size_t a = 0; a < policy[s].size(); ++a) {
          const double pa = policy[s][a];
          if (pa <= 0.0) continue;
          const ActionEntry* entry = mdp.find_action(s, a);
          double ta = 0.0, ca = 0.0, ea = entry->cost;
          for (const Successor& su : entry->successors) {
            ta += su.prob * tar[su.state];
            ca += su.prob * coll[su.state];
            ea += su.prob * cost[su.state];
          }
          t += pa * ta;
          c += pa * ca;
          e += pa * ea;
        }
        const double change = std::max({std::abs(t - tar[s]), std::abs(c - coll[s]), std::abs(e - cost[s])});
        tar[s] = t;
        coll[s] = c;
        cost[s] = e;
        return change;
      },
      1e-12, "evaluate_strategy");
  return {tar[mdp.initial], coll[mdp.initial], cost[mdp.initial]};
}

inline ObjectivePoint evaluate_strategy(const MOMDP& mdp, const Strategy& st) {
  const ObjectivePoint a = evaluate_policy(mdp, st.primary);
  if (!st.secondary || st.primary_weight == 1.0) return a;
  const ObjectivePoint b = evaluate_policy(mdp, *st.secondary);
  const double w = st.primary_weight;
  return {w * a.p_tar + (1 - w) * b.p_tar, w * a.p_coll + (1 - w) * b.p_coll, w * a.e_c + (1 - w) * b.e_c};
}

using Weights = std::array<double, 3>;

struct ScalarizedResult {
  Policy policy;
  ObjectivePoint point;
  double value = 0.0;  // optimal w1 p_tar - w2 p_coll - w3 e_c at the initial state
};

/// Maximizes w1 p_tar - w2 p_coll - w3 e_c by backward induction. Ties go to
/// the smallest action index.
inline ScalarizedResult scalarized_value_iteration(const MOMDP& mdp, const Weights& w) {
  for (double x : w)
    if (!(x >= 0.0)) throw InputError("scalarized_value_iteration: weights must be nonnegative");
  if (w[0] == 0.0 && w[1] == 0.0 && w[2] == 0.0) throw InputError("scalarized_value_iteration: weights are all zero");
  Vec v(mdp.size(), 0.0);
  v[mdp.s_tar] = w[0];
  v[mdp.s_coll] = -w[1];
  std::vector<std::size_t> choice(mdp.size(), 0);
  detail::backward_sweeps(
      mdp,
      [&](std::size_t s) {
        double best = 0.0;
        std::size_t arg = static_cast<std::size_t>(-1);
        for (const ActionEntry& e : mdp.states[s].actions) {
          double q = -w[2] * e.cost;
          for (const Successor& su : e.successors) q += su.prob * v[su.state];
          const double tie = 1e-12 * std::max(1.0, std::abs(q));
          if (arg == static_cast<std::size_t>(-1) || q > best + tie || (std::abs(q - best) <= tie && e.action < arg)) {
            best = q;
            arg = e.action;
          }
        }
        const double change = std::abs(best - v[s]);
        v[s] = best;
        choice[s] = arg;
        return change;
      },
      1e-12, "scalarized_value_iteration");
  ScalarizedResult r;
  r.policy = pure_policy(mdp, choice);
  r.point = evaluate_policy(mdp, r.policy);
  r.value = v[mdp.initial];
  return r;
}

struct FrontVertex {
  ObjectivePoint point;
  Policy policy;
  Weights weights{};
  std::size_t id = 0;
};

struct ParetoFront {
  std::vector<FrontVertex> vertices;
  std::size_t grid = 0;
};

/// Uniform barycentric weight grid over the 2-simplex, in lexicographic order.
inline std::vector<Weights> simplex_grid(std::size_t g) {
  std::vector<Weights> out;
  for (std::size_t i = 0; i <= g; ++i)
    for (std::size_t j = 0; i + j <= g; ++j) {
      const double d = static_cast<double>(g);
      out.push_back({static_cast<double>(i) / d, static_cast<double>(j) / d, static_cast<double>(g - i - j) / d});
    }
  return out;
}

/// Weight-sweep Pareto front. Each grid weight is nudged by 1e-9 in every
/// component so that weights on the simplex boundary still break ties toward
/// undominated strategies. Identical strategies and identical points are kept
/// once (first in grid order); dominated points are dropped; vertices are
/// sorted by descending p_tar, then ascending p_coll and e_c.
inline ParetoFront pareto_front(const MOMDP& mdp, std::size_t grid = 40) {
  if (grid < 2) throw InputError("pareto_front: grid resolution must be >= 2");
  const std::vector<Weights> weights = simplex_grid(grid);
  std::vector<ScalarizedResult> results(weights.size());
  parallel_for(weights.size(), [&](std::size_t i) {
    Weights w = weights[i];
    for (double& x : w) x += 1e-9;
    results[i] = scalarized_value_iteration(mdp, w);
  });

  std::vector<FrontVertex> cand;
  std::set<std::vector<std::size_t>> seen_policies;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!seen_policies.insert(pure_actions(results[i].policy)).second) continue;
    const ObjectivePoint& p = results[i].point;
    const bool dup = std::any_of(cand.begin(), cand.end(), [&](const FrontVertex& v) { return same_point(v.point, p, 1e-12); });
    if (!dup) cand.push_back({p, std::move(results[i].policy), weights[i], 0});
  }
  ParetoFront front;
  front.grid = grid;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < cand.size() && !dominated; ++j)
      dominated = j != i && dominates(cand[j].point, cand[i].point, 1e-12);
    if (!dominated) front.vertices.push_back(cand[i]);
  }
  std::stable_sort(front.vertices.begin(), front.vertices.end(), [](const FrontVertex& a, const FrontVertex& b) {
    if (a.point.p_tar != b.point.p_tar) return a.point.p_tar > b.point.p_tar;
    if (a.point.p_coll != b.point.p_coll) return a.point.p_coll < b.point.p_coll;
    return a.point.e_c < b.point.e_c;
  });
  for (std::size_t i = 0; i < front.vertices.size(); ++i) front.vertices[i].id = i;
  return front;
}

// --- Queries -----------------------------------------------------------------

struct MaxPtar {};
struct MinEnergyGivenPtar {
  double p_tar;
};
struct MinCollGivenEnergy {
  double e_c;
};
using Query = std::variant<MaxPtar, MinEnergyGivenPtar, MinCollGivenEnergy>;

struct Selection {
  Strategy strategy;
  ObjectivePoint predicted;
  std::size_t primary_vertex = 0;
  std::optional<std::size_t> secondary_vertex;
  double alpha = 1.0;  // weight of the primary vertex
};

namespace detail {

inline ObjectivePoint mix(const ObjectivePoint& a, const ObjectivePoint& b, double alpha) {
  return {alpha * a.p_tar + (1 - alpha) * b.p_tar, alpha * a.p_coll + (1 - alpha) * b.p_coll,
          alpha * a.e_c + (1 - alpha) * b.e_c};
}

// Generic constrained query: minimize `objective` subject to constraint(x) >= bound
// (after sign normalization), over vertices and mixtures of pairs that bracket
// the bound. Pure vertices win ties.
template <class Constraint, class Objective>
Selection constrained(const ParetoFront& front, double bound, Constraint cons, Objective obj) {
  constexpr double tol = 1e-12;
  std::optional<Selection> best;
  double best_val = 0.0;
  auto offer = [&](Selection s, bool pure) {
    const double val = obj(s.predicted);
    const bool better = !best || val < best_val - tol || (pure && !best->secondary_vertex && val < best_val) ||
                        (pure && best->secondary_vertex && val <= best_val + tol);
    if (better) {
      best = std::move(s);
      best_val = val;
    }
  };
  const auto& vs = front.vertices;
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (cons(vs[i].point) >= bound - tol) offer(Selection{{vs[i].policy, std::nullopt, 1.0}, vs[i].point, i, std::nullopt, 1.0}, true);
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = 0; j < vs.size(); ++j) {
      const double ci = cons(vs[i].point), cj = cons(vs[j].point);
      if (!(ci > bound + tol && cj < bound - tol)) continue;
      const double alpha = (bound - cj) / (ci - cj);
      Selection s{{vs[i].policy, vs[j].policy, alpha}, mix(vs[i].point, vs[j].point, alpha), i, j, alpha};
      offer(std::move(s), false);
    }
  if (!best) throw InternalError("select_point: no candidate despite feasible bound");
  return *best;
}

}  // namespace detail

/// Picks a strategy from the front.
///   MaxPtar: the top vertex.
///   MinEnergyGivenPtar(p): least energy with p_tar >= p.
///   MinCollGivenEnergy(e): least collision probability with e_c <= e.
/// Constrained queries consider vertices and initial-state mixtures of two
/// vertices on either side of the bound, which meet it with equality.
inline Selection select_point(const ParetoFront& front, const Query& q) {
  if (front.vertices.empty()) throw InputError("select_point: empty front");
  const auto& vs = front.vertices;
  if (std::holds_alternative<MaxPtar>(q)) return {{vs[0].policy, std::nullopt, 1.0}, vs[0].point, 0, std::nullopt, 1.0};
  if (const auto* m = std::get_if<MinEnergyGivenPtar>(&q)) {
    double max_p = 0.0;
    for (const auto& v : vs) max_p = std::max(max_p, v.point.p_tar);
    if (m->p_tar > max_p + 1e-12) {
      std::ostringstream os;
      os << "requested p_tar " << m->p_tar << " exceeds the achievable maximum " << max_p;
      throw InfeasibleError(os.str(), max_p);
    }
    return detail::constrained(
        front, m->p_tar, [](const ObjectivePoint& p) { return p.p_tar; },
        [](const ObjectivePoint& p) { return p.e_c + 1e-9 * p.p_coll; });
  }
  const auto& c = std::get<MinCollGivenEnergy>(q);
  double min_e = vs[0].point.e_c;
  for (const auto& v : vs) min_e = std::min(min_e, v.point.e_c);
  if (c.e_c < min_e - 1e-12) {
    std::ostringstream os;
    os << "energy budget " << c.e_c << " is below the achievable minimum " << min_e;
    throw InfeasibleError(os.str(), min_e);
  }
  return detail::constrained(
      front, -c.e_c, [](const ObjectivePoint& p) { return -p.e_c; },
      [](const ObjectivePoint& p) { return p.p_coll - 1e-9 * p.p_tar; });
}

// --- Serialization -------------------------------------------------------------

using SolverJson = nlohmann::ordered_json;

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string front_csv(const ParetoFront& front) {
  std::ostringstream os;
  os << "p_tar,p_coll,e_c,w1,w2,w3,strategy_id\n";
  for (const auto& v : front.vertices)
    os << format_double(v.point.p_tar) << ',' << format_double(v.point.p_coll) << ',' << format_double(v.point.e_c)
       << ',' << format_double(v.weights[0]) << ',' << format_double(v.weights[1]) << ','
       << format_double(v.weights[2]) << ',' << v.id << '\n';
  return os.str();
}

inline SolverJson point_to_json(const ObjectivePoint& p) {
  return SolverJson{{"p_tar", p.p_tar}, {"p_coll", p.p_coll}, {"e_c", p.e_c}};
}
inline ObjectivePoint point_from_json(const SolverJson& j) {
  return {j.at("p_tar").get<double>(), j.at("p_coll").get<double>(), j.at("e_c").get<double>()};
}

// [[state, [p_0, ..., p_{|A|-1}]], ...] over states with a defined choice.
inline SolverJson policy_to_json(const Policy& p) {
  SolverJson out = SolverJson::array();
  for (std::size_t s = 0; s < p.size(); ++s)
    if (!p[s].empty()) out.push_back(SolverJson::array({s, p[s]}));
  return out;
}

inline Policy policy_from_json(const SolverJson& j, std::size_t num_states) {
  Policy p(num_states);
  for (const auto& row : j) {
    const std::size_t s = row.at(0).get<std::size_t>();
    if (s >= num_states) throw ParseError("policy names state " + std::to_string(s) + " outside the MDP");
    p[s] = row.at(1).get<Vec>();
    double sum = 0.0;
    for (double x : p[s]) {
      if (!(x >= 0.0)) throw ParseError("policy has a negative probability");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ParseError("policy distribution at state " + std::to_string(s) + " does not sum to 1");
  }
  return p;
}

inline SolverJson front_to_json(const ParetoFront& front, const MOMDP& mdp) {
  SolverJson j;
  j["format"] = "etpareto-front";
  j["grid"] = front.grid;
  j["deltas"] = mdp.action_values;
  j["num_states"] = mdp.size();
  SolverJson vs = SolverJson::array();
  for (const auto& v : front.vertices) {
    SolverJson jv = point_to_json(v.point);
    jv["id"] = v.id;
    jv["weights"] = v.weights;
    jv["policy"] = policy_to_json(v.policy);
    vs.push_back(jv);
  }
  j["vertices"] = vs;
  return j;
}

inline ParetoFront front_from_json(const SolverJson& j) {
  try {
    ParetoFront f;
    f.grid = j.at("grid").get<std::size_t>();
    const std::size_t n = j.at("num_states").get<std::size_t>();
    for (const auto& jv : j.at("vertices")) {
      FrontVertex v;
      v.point = point_from_json(jv);
      v.id = jv.at("id").get<std::size_t>();
      v.weights = jv.at("weights").get<Weights>();
      v.policy = policy_from_json(jv.at("policy"), n);
      f.vertices.push_back(std::move(v));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed front document: ") + e.what());
  }
}

inline SolverJson strategy_to_json(const Strategy& s) {
  SolverJson j;
  j["primary"] = policy_to_json(s.primary);
  if (s.secondary) {
    j["mixture"] = SolverJson{{"primary_weight", s.primary_weight}, {"secondary", policy_to_json(*s.secondary)}};
  }
  return j;
}

inline Strategy strategy_from_json(const SolverJson& j, std::size_t num_states) {
  try {
    Strategy s;
    s.primary = policy_from_json(j.at("primary"), num_states);
    if (j.contains("mixture")) {
      const auto& m = j["mixture"];
      s.primary_weight = m.at("primary_weight").get<double>();
      if (!(s.primary_weight >= 0.0 && s.primary_weight <= 1.0)) throw ParseError("mixture weight outside [0, 1]");
      s.secondary = policy_from_json(m.at("secondary"), num_states);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed strategy document: ") + e.what());
  }
}

// --- PRISM -------------------------------------------------------------------

/// PRISM-language rendering: one integer variable `s`, one command per
/// (state, action) labelled [dK], labels for the three terminals and an
/// "energy" reward structure. Terminal states have no commands.
inline std::string export_prism(const MOMDP& mdp) {
  std::ostringstream os;
  os << "// event-triggered communication MDP\n";
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) os << "// action d" << a << " delta=" << format_double(mdp.action_values[a]) << '\n';
  os << "mdp\n\nmodule etpareto\n";
  os << "  s : [0.." << (mdp.size() ? mdp.size() - 1 : 0) << "] init " << mdp.initial << ";\n";
  for (std::size_t s = 0; s < mdp.size(); ++s)
    for (const auto& e : mdp.states[s].actions) {
      os << "  [d" << e.action << "] s=" << s << " -> ";
      for (std::size_t k = 0; k < e.successors.size(); ++k) {
        if (k) os << " + ";
        os << format_double(e.successors[k].prob) << ":(s'=" << e.successors[k].state << ")";
      }
      os << ";\n";
    }
  os << "endmodule\n\n";
  os << "label \"target\" = s=" << mdp.s_tar << ";\n";
  os << "label \"collision\" = s=" << mdp.s_coll << ";\n";
  os << "label \"free\" = s=" << mdp.s_free << ";\n\n";
  os << "rewards \"energy\"\n";
  for (std::size_t s = 0; s < mdp.size(); ++s)
    for (const auto& e : mdp.states[s].actions)
      os << "  [d" << e.action << "] s=" << s << " : " << format_double(e.cost) << ";\n";
  os << "endrewards\n";
  return os.str();
}

inline void export_prism(const MOMDP& mdp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << export_prism(mdp);
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Parses the subset of PRISM emitted by export_prism. Non-terminal states
/// come back with kind Belief and waypoint 0 (labels are not part of PRISM).
inline MOMDP import_prism(const std::string& text) {
  MOMDP m;
  std::istringstream in(text);
  std::string line;
  const std::regex action_re(R"re(^// action d(\d+) delta=(\S+)$)re");
  const std::regex var_re(R"re(^\s*s : \[0\.\.(\d+)\] init (\d+);$)re");
  const std::regex cmd_re(R"re(^\s*\[d(\d+)\] s=(\d+) -> (.*);$)re");
  const std::regex upd_re(R"re(([^ +:]+):\(s'=(\d+)\))re");
  const std::regex label_re(R"re(^label "(\w+)" = s=(\d+);$)re");
  const std::regex reward_re(R"re(^\s*\[d(\d+)\] s=(\d+) : (\S+);$)re");
  bool in_rewards = false, have_var = false;
  std::map<std::string, std::size_t> labels;
  auto entry = [&](std::size_t s, std::size_t a) -> ActionEntry& {
    if (s >= m.states.size()) throw ParseError("PRISM: state " + std::to_string(s) + " out of range");
    for (auto& e : m.states[s].actions)
      if (e.action == a) return e;
    m.states[s].actions.push_back(ActionEntry{a, {}, 0.0});
    return m.states[s].actions.back();
  };
  std::smatch mt;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::regex_match(line, mt, action_re)) {
      const std::size_t a = std::stoul(mt[1]);
      if (m.action_values.size() <= a) m.action_values.resize(a + 1);
      m.action_values[a] = std::stod(mt[2]);
    } else if (std::regex_match(line, mt, var_re)) {
      m.states.resize(std::stoul(mt[1]) + 1);
      m.initial = std::stoul(mt[2]);
      have_var = true;
    } else if (line.rfind("rewards", 0) == 0) {
      in_rewards = true;
    } else if (line == "endrewards") {
      in_rewards = false;
    } else if (!in_rewards && std::regex_match(line, mt, cmd_re)) {
      ActionEntry& e = entry(std::stoul(mt[2]), std::stoul(mt[1]));
      const std::string rhs = mt[3];
      for (auto it = std::sregex_iterator(rhs.begin(), rhs.end(), upd_re); it != std::sregex_iterator(); ++it)
        e.successors.push_back({std::stoul((*it)[2]), std::stod((*it)[1])});
      if (e.successors.empty()) throw ParseError("PRISM line " + std::to_string(lineno) + ": command without updates");
    } else if (in_rewards && std::regex_match(line, mt, reward_re)) {
      entry(std::stoul(mt[2]), std::stoul(mt[1])).cost = std::stod(mt[3]);
    } else if (std::regex_match(line, mt, label_re)) {
      labels[mt[1]] = std::stoul(mt[2]);
    }
  }
  if (!have_var) throw ParseError("PRISM: no state variable declaration");
  for (const char* need : {"target", "collision", "free"})
    if (!labels.count(need)) throw ParseError(std::string("PRISM: missing label \"") + need + "\"");
  m.s_tar = labels["target"];
  m.s_coll = labels["collision"];
  m.s_free = labels["free"];
  for (std::size_t t : {m.s_tar, m.s_coll, m.s_free})
    if (t >= m.states.size()) throw ParseError("PRISM: label names a state out of range");
  m.states[m.s_tar].label.kind = StateKind::Target;
  m.states[m.s_coll].label.kind = StateKind::Collision;
  m.states[m.s_free].label.kind = StateKind::Free;
  return m;
}

}  // namespace etpareto
