#pragma once

// Closed-loop validation of synthesized strategies on the continuous system.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "etpareto/abstraction.hpp"
#include "etpareto/errors.hpp"
#include "etpareto/mo_solver.hpp"
#include "etpareto/parallel.hpp"
#include "etpareto/plant.hpp"
#include "etpareto/rng.hpp"
#include "etpareto/scenario.hpp"

namespace etpareto {

enum class RunOutcome : std::uint8_t { Target, Collision, Free };

inline const char* to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Target: return "tar";
    case RunOutcome::Collision: return "coll";
    case RunOutcome::Free: return "free";
  }
  return "?";
}

struct EmpiricalObjectives {
  double p_tar = 0.0;
  double p_coll = 0.0;
  double p_free = 0.0;
  double e_c_mean = 0.0;
  double e_c_stderr = 0.0;
  std::size_t runs = 0;
  double steps_mean = 0.0;
  std::size_t total_triggers = 0;
  std::size_t total_steps = 0;
};

struct TraceStep {
  std::size_t step;  // time index over the whole run
  std::size_t segment;
  double delta;
  bool trigger;
  Vec true_state;
  Vec estimate;
};

struct TraceRecord {
  std::size_t run = 0;
  std::vector<TraceStep> steps;
  RunOutcome outcome = RunOutcome::Free;
};

struct SimulationOptions {
  std::size_t trace_cap = 300;
  bool force_full_kf = false;
};

struct SimulationResult {
  EmpiricalObjectives objectives;
  std::vector<TraceRecord> traces;
  std::size_t state_misses = 0;  // abstract states unknown to the MDP or strategy
  std::size_t decisions = 0;
};

namespace detail {

struct RunResult {
  std::size_t run = 0;
  RunOutcome outcome = RunOutcome::Free;
  std::size_t triggers = 0;
  std::size_t steps = 0;
  std::size_t misses = 0;
  std::size_t decisions = 0;
  std::optional<TraceRecord> trace;
};

inline std::size_t draw_action(const Vec& dist, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    acc += dist[a];
    if (u < acc) return a;
  }
  for (std::size_t a = dist.size(); a-- > 0;)
    if (dist[a] > 0.0) return a;
  return 0;
}

// Chooses the threshold index at waypoint w for one run.
using Chooser = std::function<std::size_t(std::size_t w, const FilterState& f, RngStream& rng, RunResult& res)>;

inline EmpiricalObjectives tally(const Scenario& sc, const std::vector<RunResult>& runs) {
  EmpiricalObjectives o;
  o.runs = runs.size();
  if (runs.empty()) return o;
  std::size_t tar = 0, coll = 0, freec = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& r : runs) {
    tar += r.outcome == RunOutcome::Target;
    coll += r.outcome == RunOutcome::Collision;
    freec += r.outcome == RunOutcome::Free;
    o.total_triggers += r.triggers;
    o.total_steps += r.steps;
    const double e = sc.comm_cost * static_cast<double>(r.triggers);
    sum += e;
    sum_sq += e * e;
  }
  const double n = static_cast<double>(runs.size());
  o.p_tar = static_cast<double>(tar) / n;
  o.p_coll = static_cast<double>(coll) / n;
  o.p_free = static_cast<double>(freec) / n;
  o.e_c_mean = sum / n;
  o.steps_mean = static_cast<double>(o.total_steps) / n;
  if (runs.size() > 1) {
    const double var = std::max(0.0, (sum_sq - n * o.e_c_mean * o.e_c_mean) / (n - 1.0));
    o.e_c_stderr = std::sqrt(var / n);
  }
  return o;
}

inline SimulationResult simulate(const Scenario& sc, Method method, std::size_t runs, const RngStream& rng,
                                 const SimulationOptions& opts, const Chooser& choose) {
  const ClosedLoop loop(sc);
  const std::size_t segments = sc.segments();
  const GaussianSampler x0_sampler(sc.initial.cov);
  std::vector<RunResult> results(runs);

  parallel_for(runs, [&](std::size_t r) {
    RngStream run_rng = rng.substream(r);
    RunResult& res = results[r];
    res.run = r;
    const bool keep = r < opts.trace_cap;
    if (keep) res.trace = TraceRecord{r, {}, RunOutcome::Free};
    FilterState f{sc.initial, 0, 0, EstimatorMode::ET};
    Vec x = x0_sampler.sample(sc.initial.mean, run_rng);
    std::size_t segment = 0;
    double delta = 0.0;
    RolloutOptions ro;
    ro.method = method;
    ro.force_full_kf = opts.force_full_kf;
    if (keep)
      ro.on_step = [&](const StepRecord& s) {
        res.trace->steps.push_back({res.steps + s.step, segment, delta, s.trigger, s.true_state, s.estimate});
      };
    for (std::size_t w = 0; w < segments; ++w) {
      segment = w;
      const std::size_t a = choose(w, f, run_rng, res);
      delta = sc.deltas.at(a);
      const SegmentOutcome o = segment_rollout(loop, f, x, w + 1, delta, ro, run_rng);
      res.steps += o.steps;
      res.triggers += o.triggers;
      if (o.terminal == SegmentTerminal::Collision) {
        res.outcome = RunOutcome::Collision;
        break;
      }
      f = o.final_filter;
      x = o.final_true_state;
      if (w + 1 == segments) {
        const bool hit = o.terminal == SegmentTerminal::Reached && classify_point(sc, x).kind == PointKind::Target;
        res.outcome = hit ? RunOutcome::Target : RunOutcome::Free;
      }
    }
    if (keep) res.trace->outcome = res.outcome;
  });

  SimulationResult out;
  out.objectives = tally(sc, results);
  for (auto& r : results) {
    out.state_misses += r.misses;
    out.decisions += r.decisions;
    if (r.trace) out.traces.push_back(std::move(*r.trace));
  }
  return out;
}

}  // namespace detail

/// Runs `runs` closed-loop simulations under `strategy`.
///
/// Each run draws x0 ~ N(x0_mean, P0) and resolves a mixture once. At every
/// waypoint the current covariance is mapped to its abstract state and the
/// threshold is drawn from the strategy there; states the MDP or strategy do
/// not know fall back to the smallest threshold and are counted. Run r uses
/// RNG substream r, so results do not depend on scheduling.
inline SimulationResult simulate_strategy(const Scenario& sc, const Abstraction& abs, const Strategy& strategy,
                                          std::size_t runs, const RngStream& rng, const SimulationOptions& opts = {}) {
  if (abs.mdp.num_actions() != sc.deltas.size()) throw InputError("simulate_strategy: MDP and scenario thresholds differ");
  // Mixture choice per run, drawn from its own substream so it does not
  // shift the dynamics' random numbers.
  std::vector<const Policy*> chosen(runs, &strategy.primary);
  if (strategy.secondary) {
    const RngStream mix = rng.substream(hash_label("mixture"));
    for (std::size_t r = 0; r < runs; ++r) {
      RngStream m = mix.substream(r);
      if (!m.bernoulli(strategy.primary_weight)) chosen[r] = &*strategy.secondary;
    }
  }
  const RngStream dyn = rng.substream(hash_label("runs"));
  (void)abs.find(StateLabel{});  // builds the lookup index before workers share it
  return detail::simulate(
      sc, abs.method(), runs, dyn, opts,
      [&](std::size_t w, const FilterState& f, RngStream& r_rng, detail::RunResult& res) -> std::size_t {
        ++res.decisions;
        const Policy& policy = *chosen[res.run];
        const auto id = abs.find(abs.label_for(w, f.belief.cov));
        if (!id || *id >= policy.size() || policy[*id].size() != sc.deltas.size()) {
          ++res.misses;
          return 0;
        }
        return detail::draw_action(policy[*id], r_rng);
      });
}

/// Closed loop with a transmission at every step.
inline EmpiricalObjectives full_kf_baseline(const Scenario& sc, std::size_t runs, const RngStream& rng,
                                            Method method = Method::DiscretizedBelief) {
  SimulationOptions opts;
  opts.trace_cap = 0;
  opts.force_full_kf = true;
  return detail::simulate(sc, method, runs, rng.substream(hash_label("runs")), opts,
                          [](std::size_t, const FilterState&, RngStream&, detail::RunResult&) { return std::size_t{0}; })
      .objectives;
}

/// Every run uses threshold index `action` at every waypoint.
inline SimulationResult simulate_fixed_action(const Scenario& sc, Method method, std::size_t action, std::size_t runs,
                                              const RngStream& rng, const SimulationOptions& opts = {}) {
  if (action >= sc.deltas.size()) throw InputError("simulate_fixed_action: action out of range");
  return detail::simulate(sc, method, runs, rng.substream(hash_label("runs")), opts,
                          [action](std::size_t, const FilterState&, RngStream&, detail::RunResult& res) {
                            ++res.decisions;
                            return action;
                          });
}

struct Comparison {
  double p_tar_pp = 0.0;   // |predicted - empirical| in percentage points
  double p_coll_pp = 0.0;
  double e_c_rel = 0.0;    // |predicted - empirical| / predicted
  bool pass = false;
};

/// Theory-vs-simulation errors; passes when both probability errors are
/// within `tol_pp` points and the energy error within `tol_rel`.
inline Comparison compare_theory_empirical(const ObjectivePoint& predicted, const EmpiricalObjectives& empirical,
                                           double tol_pp = 2.0, double tol_rel = 0.05) {
  Comparison c;
  c.p_tar_pp = 100.0 * std::abs(predicted.p_tar - empirical.p_tar);
  c.p_coll_pp = 100.0 * std::abs(predicted.p_coll - empirical.p_coll);
  const double diff = std::abs(predicted.e_c - empirical.e_c_mean);
  c.e_c_rel = predicted.e_c != 0.0 ? diff / std::abs(predicted.e_c) : (diff == 0.0 ? 0.0 : INFINITY);
  c.pass = c.p_tar_pp <= tol_pp && c.p_coll_pp <= tol_pp && c.e_c_rel <= tol_rel;
  return c;
}

// --- Output ---------------------------------------------------------------------

inline nlohmann::ordered_json objectives_to_json(const EmpiricalObjectives& o) {
  return {{"runs", o.runs},          {"p_tar", o.p_tar},
          {"p_coll", o.p_coll},      {"p_free", o.p_free},
          {"e_c_mean", o.e_c_mean},  {"e_c_stderr", o.e_c_stderr},
          {"steps_mean", o.steps_mean}, {"total_triggers", o.total_triggers},
          {"total_steps", o.total_steps}};
}

inline EmpiricalObjectives objectives_from_json(const nlohmann::ordered_json& j) {
  EmpiricalObjectives o;
  o.runs = j.at("runs").get<std::size_t>();
  o.p_tar = j.at("p_tar").get<double>();
  o.p_coll = j.at("p_coll").get<double>();
  o.p_free = j.at("p_free").get<double>();
  o.e_c_mean = j.at("e_c_mean").get<double>();
  o.e_c_stderr = j.value("e_c_stderr", 0.0);
  o.steps_mean = j.value("steps_mean", 0.0);
  o.total_triggers = j.value("total_triggers", std::size_t{0});
  o.total_steps = j.value("total_steps", std::size_t{0});
  return o;
}

inline std::string trace_csv(const std::vector<TraceRecord>& traces, std::size_t dim) {
  std::ostringstream os;
  os << "run,step,segment,delta,trigger";
  for (std::size_t i = 0; i < dim; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < dim; ++i) os << ",xhat" << i;
  os << ",outcome\n";
  for (const auto& t : traces)
    for (const auto& s : t.steps) {
      os << t.run << ',' << s.step << ',' << s.segment << ',' << format_double(s.delta) << ',' << (s.trigger ? 1 : 0);
      for (double v : s.true_state) os << ',' << format_double(v);
      for (double v : s.estimate) os << ',' << format_double(v);
      os << ',' << to_string(t.outcome) << '\n';
    }
  return os.str();
}

/// Fraction of steps that transmit when the ET filter tracks the open-loop
/// plant (u = 0) with a fixed threshold. The first `burn_in` steps, started
/// from the steady-state KF belief, are not counted.
inline double stationary_trigger_frequency(const FilterParams& params, double delta, std::size_t steps,
                                           RngStream rng, std::size_t burn_in = 200) {
  if (steps == 0) throw InputError("stationary_trigger_frequency: steps must be positive");
  const Plant plant(params);
  const Vec u(params.input_dim(), 0.0);
  Vec x(params.state_dim(), 0.0);
  FilterState f{{x, steady_state_kf_covariance(params).posterior}, 0, 0, EstimatorMode::ET};
  std::size_t triggers = 0;
  for (std::size_t k = 0; k < burn_in + steps; ++k) {
    x = plant.step(x, u, rng);
    const Vec y = plant.measure(x, rng);
    const FilterState pred = predict(f, u, params);
    const TriggerDecision d = decide_trigger(pred, y, delta, params);
    f = update(pred, d, delta, params);
    if (k >= burn_in && d.gamma) ++triggers;
  }
  return static_cast<double>(triggers) / static_cast<double>(steps);
}

}  // namespace etpareto
