#pragma once

// Abstraction of the closed loop to a finite MDP.
//
// Method 2 (discretized belief) groups the beliefs arriving at a waypoint by
// the spectral decomposition of their covariance: each axis (eigenpair,
// ordered by descending eigenvalue) falls into a region given by its angle to
// a nominal direction and its eigenvalue magnitude. Method 1 (enforced
// convergence) drives every belief back to the steady-state KF covariance,
// so each waypoint carries a single belief state.
//
// Transition probabilities and costs are Monte-Carlo frequencies. Every
// abstract state keeps a bounded reservoir of concrete (belief, true state)
// pairs that reached it; transitions out of it are estimated by restarting
// rollouts from that reservoir.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "etpareto/errors.hpp"
#include "etpareto/et_filter.hpp"
#include "etpareto/gaussian.hpp"
#include "etpareto/linalg.hpp"
#include "etpareto/mdp.hpp"
#include "etpareto/parallel.hpp"
#include "etpareto/plant.hpp"
#include "etpareto/rng.hpp"
#include "etpareto/scenario.hpp"

namespace etpareto {

// Region R = {(lambda, theta) | lambda in [lam_lo, lam_hi), theta in [theta_lo, theta_hi)}
// measured against the unit vector v_nom.
struct CovRegion {
  Vec v_nom;
  double theta_lo = 0.0;
  double theta_hi = std::numbers::pi / 2;
  double lam_lo = 0.0;
  double lam_hi = 1.0;
};

// Region table of one axis: the product of theta bins and lambda bins.
// Region index = theta_bin * lambda_bins() + lambda_bin.
struct AxisRegions {
  Vec v_nom;
  Vec theta_edges;   // strictly increasing, first 0, last pi/2
  Vec lambda_edges;  // strictly increasing

  std::size_t theta_bins() const noexcept { return theta_edges.size() - 1; }
  std::size_t lambda_bins() const noexcept { return lambda_edges.size() - 1; }
  std::size_t region_count() const noexcept { return theta_bins() * lambda_bins(); }

  CovRegion region(std::size_t index) const {
    const std::size_t t = index / lambda_bins(), l = index % lambda_bins();
    return {v_nom, theta_edges.at(t), theta_edges.at(t + 1), lambda_edges.at(l), lambda_edges.at(l + 1)};
  }
  std::size_t index(std::size_t theta_bin, std::size_t lambda_bin) const { return theta_bin * lambda_bins() + lambda_bin; }
};

struct WaypointRegions {
  std::vector<AxisRegions> axes;
};

// One table per decision waypoint (index 0 .. N-1).
using RegionTables = std::vector<WaypointRegions>;

using CovState = std::vector<std::uint32_t>;

struct ClassifyStats {
  std::size_t above_cap = 0;
  std::size_t below_floor = 0;
};

namespace detail {

// Half-open bin lookup; values outside the edges clamp to the end bins.
inline std::size_t bin_of(const Vec& edges, double v, bool* above = nullptr, bool* below = nullptr) {
  const std::size_t bins = edges.size() - 1;
  if (v < edges.front()) {
    if (below) *below = true;
    return 0;
  }
  if (v >= edges.back()) {
    if (above) *above = true;
    return bins - 1;
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1, bins - 1);
}

inline bool degenerate_axis(const Vec& values, std::size_t i) {
  const double tol = 1e-9 * std::abs(values.front());
  for (std::size_t j = 0; j < values.size(); ++j)
    if (j != i && std::abs(values[i] - values[j]) <= tol) return true;
  return false;
}

inline double axis_angle(std::span<const double> v, std::span<const double> v_nom) {
  return std::acos(std::clamp(std::abs(dot(v, v_nom)), 0.0, 1.0));
}

}  // namespace detail

/// Maps a covariance to its covariance state (one region index per axis).
///
/// Axis i is the i-th largest eigenpair. Its angle is arccos|v_i . v_nom,i|.
/// Axes whose eigenvalue coincides with another's (within 1e-9 of the
/// largest) have no meaningful orientation and get angle 0. Eigenvalues past
/// the table ends clamp into the end bins and are counted in `stats`.
inline CovState classify_covariance(const Matrix& p, const WaypointRegions& table, ClassifyStats* stats = nullptr) {
  if (!p.square() || p.rows() != table.axes.size()) throw InputError("classify_covariance: dimension mismatch");
  const EigenDecomposition eig = sym_eigen(p);
  if (eig.values.back() < -1e-12 - 1e-9 * std::abs(eig.values.front()))
    throw InputError("classify_covariance: covariance is not positive semidefinite");
  const std::size_t n = p.rows();
  CovState state(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AxisRegions& ax = table.axes[i];
    const double theta = detail::degenerate_axis(eig.values, i) ? 0.0 : detail::axis_angle(eig.vectors.col(i), ax.v_nom);
    bool above = false, below = false;
    const std::size_t lb = detail::bin_of(ax.lambda_edges, eig.values[i], &above, &below);
    const std::size_t tb = detail::bin_of(ax.theta_edges, theta);
    if (stats) {
      stats->above_cap += above ? 1 : 0;
      stats->below_floor += below ? 1 : 0;
    }
    state[i] = static_cast<std::uint32_t>(ax.index(tb, lb));
  }
  return state;
}

struct AbstractionConfig {
  Method method = Method::DiscretizedBelief;
  std::size_t bins_theta = 3;
  std::size_t bins_lambda = 6;
  std::size_t samples_per_action = 500;
  std::size_t pool_cap = 2000;
  std::size_t calibration_runs = 300;
  std::uint64_t seed = 1;
};

/// Per-axis eigenvalue cap: propagate the implicit-only update (no
/// transmissions, largest threshold) from P_KF for `steps` steps and take
/// 1.1 x each eigenvalue of the result.
inline Vec empirical_cov_upper_bound(const Scenario& sc, std::size_t steps) {
  const FilterParams& params = sc.params;
  const double beta = beta_coefficient(sc.deltas.back());
  Matrix p = steady_state_kf_covariance(params).posterior;
  for (std::size_t k = 0; k < steps; ++k)
    p = g_lambda((params.F * p * params.F.transpose() + params.Q).symmetrized(), beta, params);
  Vec caps = sym_eigen(p).values;
  for (double& c : caps) c *= 1.1;
  return caps;
}
inline Vec empirical_cov_upper_bound(const Scenario& sc) { return empirical_cov_upper_bound(sc, sc.term.k_max); }

namespace detail {

inline double quantile_sorted(const Vec& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Keeps edges strictly increasing; always retains first and last.
inline Vec strictly_increasing(const Vec& edges) {
  Vec out{edges.front()};
  for (std::size_t i = 1; i + 1 < edges.size(); ++i)
    if (edges[i] > out.back() && edges[i] < edges.back()) out.push_back(edges[i]);
  out.push_back(edges.back());
  return out;
}

struct EigenSample {
  Vec values;
  Matrix vectors;
};

inline AxisRegions calibrate_axis(const std::vector<EigenSample>& samples, std::size_t axis, std::size_t n,
                                  std::size_t bins_theta, std::size_t bins_lambda, double lambda_floor, double cap) {
  AxisRegions ax;
  // Nominal direction: mean of sign-aligned eigenvectors over samples whose
  // axis is not degenerate.
  Vec ref, acc(n, 0.0);
  std::size_t used = 0;
  for (const auto& s : samples) {
    if (degenerate_axis(s.values, axis)) continue;
    Vec v = s.vectors.col(axis);
    if (ref.empty()) ref = v;
    if (dot(v, ref) < 0.0) v = -1.0 * v;
    acc = acc + v;
    ++used;
  }
  const double len = norm2(acc);
  if (used == 0 || len < 1e-12) {
    ax.v_nom = Vec(n, 0.0);
    ax.v_nom[axis] = 1.0;
  } else {
    ax.v_nom = (1.0 / len) * acc;
  }

  double theta_max = 0.0;
  for (const auto& s : samples)
    if (!degenerate_axis(s.values, axis)) theta_max = std::max(theta_max, axis_angle(s.vectors.col(axis), ax.v_nom));
  const double theta_cap = std::min(std::numbers::pi / 2, 1.1 * theta_max);
  Vec t_edges;
  for (std::size_t b = 0; b < bins_theta; ++b) t_edges.push_back(theta_cap * static_cast<double>(b) / static_cast<double>(bins_theta));
  t_edges.push_back(std::numbers::pi / 2);
  ax.theta_edges = strictly_increasing(t_edges);

  Vec lam;
  for (const auto& s : samples) lam.push_back(s.values[axis]);
  std::sort(lam.begin(), lam.end());
  const double lam_min = lam.front(), lam_max = lam.back();
  double lower = std::min(lam_min, std::max(0.5 * lam_min, lambda_floor));
  double upper = std::max(cap, lam_max);
  if (!(upper > lower)) upper = lower + std::max(1e-15, 1e-6 * std::abs(lower));
  Vec l_edges{lower};
  for (std::size_t b = 1; b < bins_lambda; ++b)
    l_edges.push_back(quantile_sorted(lam, static_cast<double>(b) / static_cast<double>(bins_lambda)));
  l_edges.push_back(upper);
  ax.lambda_edges = strictly_increasing(l_edges);
  return ax;
}

}  // namespace detail

struct CalibrationResult {
  RegionTables tables;
  std::vector<std::size_t> arrivals;  // observations per waypoint
  Vec caps;
};

/// Builds per-waypoint region tables from sampled closed-loop runs.
///
/// Run r starts from the initial belief and holds threshold r mod |deltas|
/// on every segment, so the runs cycle through the threshold set.
/// Eigenpairs of the posterior covariance are recorded at every waypoint
/// arrival (waypoint 0 records P0).
/// Lambda edges are quantiles of the observations, bounded below by the
/// steady-state KF eigenvalue floor (at most half the smallest observation
/// further down) and above by the implicit-only cap. Theta edges are uniform
/// on [0, 1.1 x max observed angle] with the last bin extended to pi/2.
inline CalibrationResult calibrate_regions(const Scenario& sc, const AbstractionConfig& cfg, RngStream rng) {
  if (cfg.calibration_runs < 10) throw InputError("calibrate_regions: calibration_runs must be >= 10");
  if (cfg.bins_theta < 1 || cfg.bins_lambda < 1) throw InputError("calibrate_regions: bins must be >= 1");
  const ClosedLoop loop(sc);
  const std::size_t n = sc.dim(), segments = sc.segments();
  const GaussianSampler x0_sampler(sc.initial.cov);

  std::vector<std::vector<detail::EigenSample>> obs(segments);
  const EigenDecomposition e0 = sym_eigen(sc.initial.cov);
  for (std::size_t r = 0; r < cfg.calibration_runs; ++r) obs[0].push_back({e0.values, e0.vectors});

  std::vector<std::vector<std::vector<detail::EigenSample>>> per_run(cfg.calibration_runs);
  parallel_for(cfg.calibration_runs, [&](std::size_t r) {
    RngStream run_rng = rng.substream(r);
    FilterState f{sc.initial, 0, 0, EstimatorMode::ET};
    Vec x = x0_sampler.sample(sc.initial.mean, run_rng);
    auto& mine = per_run[r];
    mine.resize(segments);
    for (std::size_t w = 0; w + 1 < segments; ++w) {
      const double delta = sc.deltas[r % sc.deltas.size()];
      const SegmentOutcome o = segment_rollout(loop, f, x, w + 1, delta, {}, run_rng);
      if (o.terminal == SegmentTerminal::Collision) break;
      f = o.final_filter;
      x = o.final_true_state;
      const EigenDecomposition e = sym_eigen(f.belief.cov);
      mine[w + 1].push_back({e.values, e.vectors});
    }
  });
  for (const auto& run : per_run)
    for (std::size_t w = 1; w < segments; ++w) obs[w].insert(obs[w].end(), run[w].begin(), run[w].end());

  CalibrationResult out;
  out.caps = empirical_cov_upper_bound(sc);
  const double floor = sym_eigen(steady_state_kf_covariance(sc.params).posterior).values.back();
  for (std::size_t w = 0; w < segments; ++w) {
    out.arrivals.push_back(obs[w].size());
    if (obs[w].empty())
      throw ConvergenceError("calibrate_regions: no calibration run reached waypoint " + std::to_string(w));
    WaypointRegions table;
    for (std::size_t i = 0; i < n; ++i)
      table.axes.push_back(detail::calibrate_axis(obs[w], i, n, cfg.bins_theta, cfg.bins_lambda, floor, out.caps[i]));
    out.tables.push_back(std::move(table));
  }
  return out;
}

// --- Belief pools ------------------------------------------------------------

struct PoolSample {
  GaussianBelief belief;
  Vec true_state;
};

// Reservoir (algorithm R) of concrete beliefs that reached one abstract state.
class BeliefPool {
 public:
  BeliefPool(std::size_t cap, RngStream rng) : cap_(cap), rng_(rng) {}

  void add(PoolSample s) {
    ++seen_;
    if (samples_.size() < cap_) {
      samples_.push_back(std::move(s));
      return;
    }
    const std::uint64_t j = rng_.below(seen_);
    if (j < cap_) samples_[j] = std::move(s);
  }

  const PoolSample& draw(RngStream& rng) const {
    if (samples_.empty()) throw InternalError("BeliefPool: draw from an empty pool");
    return samples_[rng.below(samples_.size())];
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t seen() const noexcept { return seen_; }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<PoolSample>& samples() const noexcept { return samples_; }

 private:
  std::size_t cap_;
  RngStream rng_;
  std::size_t seen_ = 0;
  std::vector<PoolSample> samples_;
};

struct AbstractionDiagnostics {
  std::size_t rollouts = 0;
  std::size_t lambda_above_cap = 0;
  std::size_t lambda_below_floor = 0;
  std::size_t segment_timeouts = 0;
  std::size_t method1_unconverged = 0;
};

struct Abstraction {
  AbstractionConfig config;
  MOMDP mdp;
  RegionTables regions;            // empty for Method 1
  std::vector<BeliefPool> pools;   // per state; not serialized
  AbstractionDiagnostics diagnostics;

  Method method() const noexcept { return config.method; }

  /// Abstract state a concrete belief at decision waypoint `waypoint` maps to.
  StateLabel label_for(std::size_t waypoint, const Matrix& cov, ClassifyStats* stats = nullptr) const {
    if (config.method == Method::EnforcedConvergence) return {StateKind::Method1Belief, waypoint, {}};
    return {StateKind::Belief, waypoint, classify_covariance(cov, regions.at(waypoint), stats)};
  }

  std::optional<std::size_t> find(const StateLabel& label) const {
    if (index_.size() != mdp.size()) {
      index_.clear();
      for (std::size_t s = 0; s < mdp.size(); ++s) index_.emplace(mdp.states[s].label, s);
    }
    const auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  mutable std::map<StateLabel, std::size_t> index_;
};

namespace detail {

struct Arrival {
  StateLabel label;
  PoolSample sample;  // meaningful for belief arrivals only
};

struct JobResult {
  std::vector<Arrival> arrivals;
  double triggers = 0.0;
  double steps = 0.0;
  ClassifyStats stats;
  std::size_t timeouts = 0;
  std::size_t unconverged = 0;
};

}  // namespace detail

/// Builds the MDP by breadth-first exploration over waypoints.
///
/// For every reachable abstract state s and threshold index a, M starting
/// pairs are drawn from s's pool and rolled out to the next waypoint.
/// T(s, a, .) is the arrival frequency and C(s, a) = c_m x mean triggers.
/// Collisions go to s_coll; completing the last segment goes to s_tar when
/// the true state is in the target, otherwise (or on a last-segment timeout)
/// to s_free. A timeout on an earlier segment still counts as arrival at the
/// next waypoint. Each (state, action) pair owns an RNG substream and pools
/// are merged in (state, action, sample) order, so the result does not
/// depend on thread scheduling.
inline Abstraction build_mdp(const Scenario& sc, const AbstractionConfig& cfg, RegionTables regions, RngStream rng) {
  if (cfg.samples_per_action == 0) throw InputError("build_mdp: samples_per_action must be >= 1");
  if (cfg.pool_cap == 0) throw InputError("build_mdp: pool_cap must be >= 1");
  const bool method1 = cfg.method == Method::EnforcedConvergence;
  const std::size_t segments = sc.segments();
  if (!method1 && regions.size() < segments) throw InputError("build_mdp: region tables missing for some waypoints");
  if (segments == 0) throw InputError("build_mdp: scenario has no segments");

  const ClosedLoop loop(sc);
  Abstraction abs;
  abs.config = cfg;
  abs.regions = std::move(regions);
  abs.mdp.action_values = sc.deltas;
  const std::size_t num_actions = sc.deltas.size();
  const std::size_t m = cfg.samples_per_action;
  const RngStream pool_rng = rng.substream(hash_label("pool"));
  const RngStream job_rng = rng.substream(hash_label("transition"));

  std::map<StateLabel, std::size_t> ids;
  std::vector<StateLabel> labels;
  auto intern = [&](const StateLabel& l) {
    const auto [it, fresh] = ids.emplace(l, labels.size());
    if (fresh) {
      labels.push_back(l);
      abs.pools.emplace_back(cfg.pool_cap, pool_rng.substream(it->second));
    }
    return it->second;
  };

  // Initial state, seeded with (N(x0, P0), x0 sample) pairs.
  {
    const StateLabel l0 = abs.label_for(0, sc.initial.cov);
    const std::size_t s0 = intern(l0);
    RngStream seed_rng = rng.substream(hash_label("initial"));
    const GaussianSampler x0_sampler(sc.initial.cov);
    for (std::size_t i = 0; i < cfg.pool_cap; ++i) abs.pools[s0].add({sc.initial, x0_sampler.sample(sc.initial.mean, seed_rng)});
    abs.mdp.initial = s0;
  }

  const StateLabel coll{StateKind::Collision, 0, {}}, tar{StateKind::Target, 0, {}}, free{StateKind::Free, 0, {}};
  RolloutOptions opts;
  opts.method = cfg.method;

  std::vector<std::map<std::size_t, std::map<StateLabel, std::size_t>>> counts;  // [s][a][label]
  std::vector<std::vector<detail::JobResult>> results_by_state;

  std::size_t layer_begin = 0;
  for (std::size_t w = 0; w < segments; ++w) {
    const std::size_t layer_end = labels.size();
    const std::size_t layer_size = layer_end - layer_begin;
    const bool last = w + 1 == segments;
    std::vector<detail::JobResult> jobs(layer_size * num_actions);

    parallel_for(jobs.size(), [&](std::size_t j) {
      const std::size_t s = layer_begin + j / num_actions, a = j % num_actions;
      const double delta = sc.deltas[a];
      RngStream r = job_rng.substream(s, a);
      detail::JobResult& res = jobs[j];
      res.arrivals.reserve(m);
      for (std::size_t k = 0; k < m; ++k) {
        const PoolSample& start = abs.pools[s].draw(r);
        const FilterState f0{start.belief, 0, 0, EstimatorMode::ET};
        const SegmentOutcome o = segment_rollout(loop, f0, start.true_state, w + 1, delta, opts, r);
        res.triggers += static_cast<double>(o.triggers);
        res.steps += static_cast<double>(o.steps);
        if (o.terminal == SegmentTerminal::None) ++res.timeouts;
        if (o.covariance_unconverged) ++res.unconverged;
        if (o.terminal == SegmentTerminal::Collision) {
          res.arrivals.push_back({coll, {}});
        } else if (last) {
          const bool hit = o.terminal == SegmentTerminal::Reached &&
                           classify_point(sc, o.final_true_state).kind == PointKind::Target;
          res.arrivals.push_back({hit ? tar : free, {}});
        } else {
          res.arrivals.push_back({abs.label_for(w + 1, o.final_filter.belief.cov, &res.stats),
                                  {o.final_filter.belief, o.final_true_state}});
        }
      }
    });

    counts.resize(layer_end);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const std::size_t s = layer_begin + j / num_actions, a = j % num_actions;
      detail::JobResult& res = jobs[j];
      auto& row = counts[s][a];
      for (auto& arr : res.arrivals) {
        ++row[arr.label];
        if (!is_terminal(arr.label.kind)) {
          const std::size_t dest = intern(arr.label);
          abs.pools[dest].add(std::move(arr.sample));
        }
      }
      MdpState placeholder;
      if (abs.mdp.states.size() <= s) abs.mdp.states.resize(s + 1);
      ActionEntry e;
      e.action = a;
      e.mean_triggers = res.triggers / static_cast<double>(m);
      e.mean_steps = res.steps / static_cast<double>(m);
      e.cost = sc.comm_cost * e.mean_triggers;
      e.product_cost = sc.comm_cost * e.mean_steps * expected_trigger_rate(sc.deltas[a], sc.params.meas_dim());
      abs.mdp.states[s].actions.push_back(std::move(e));
      abs.diagnostics.rollouts += m;
      abs.diagnostics.lambda_above_cap += res.stats.above_cap;
      abs.diagnostics.lambda_below_floor += res.stats.below_floor;
      abs.diagnostics.segment_timeouts += res.timeouts;
      abs.diagnostics.method1_unconverged += res.unconverged;
      res.arrivals.clear();
    }
    layer_begin = layer_end;
  }

  // Terminals go last, in fixed order.
  const std::size_t belief_count = labels.size();
  abs.mdp.states.resize(belief_count + 3);
  for (std::size_t s = 0; s < belief_count; ++s) abs.mdp.states[s].label = labels[s];
  abs.mdp.s_coll = belief_count;
  abs.mdp.s_tar = belief_count + 1;
  abs.mdp.s_free = belief_count + 2;
  abs.mdp.states[abs.mdp.s_coll].label = coll;
  abs.mdp.states[abs.mdp.s_tar].label = tar;
  abs.mdp.states[abs.mdp.s_free].label = free;
  abs.pools.emplace_back(1, pool_rng);
  abs.pools.emplace_back(1, pool_rng);
  abs.pools.emplace_back(1, pool_rng);

  auto resolve = [&](const StateLabel& l) -> std::size_t {
    switch (l.kind) {
      case StateKind::Collision: return abs.mdp.s_coll;
      case StateKind::Target: return abs.mdp.s_tar;
      case StateKind::Free: return abs.mdp.s_free;
      default: return ids.at(l);
    }
  };
  for (std::size_t s = 0; s < belief_count; ++s) {
    for (auto& e : abs.mdp.states[s].actions) {
      std::vector<Successor> succ;
      for (const auto& [label, count] : counts[s][e.action])
        succ.push_back({resolve(label), static_cast<double>(count) / static_cast<double>(m)});
      std::sort(succ.begin(), succ.end(), [](const Successor& x, const Successor& y) { return x.state < y.state; });
      e.successors = std::move(succ);
    }
  }
  return abs;
}

/// Calibrates (Method 2) and builds the abstraction from config.seed.
inline Abstraction build_abstraction(const Scenario& sc, const AbstractionConfig& cfg) {
  const RngStream base(cfg.seed);
  RegionTables tables;
  if (cfg.method == Method::DiscretizedBelief)
    tables = calibrate_regions(sc, cfg, base.substream(hash_label("calibrate"))).tables;
  return build_mdp(sc, cfg, std::move(tables), base.substream(hash_label("build")));
}

// --- Refinement probe ----------------------------------------------------------

struct RefinementReport {
  std::vector<std::size_t> coarse_states;
  Vec delta_p_max;  // per coarse state
  double median = 0.0;
  double max = 0.0;
};

namespace detail {

inline double median_of(Vec v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Maps a fine-table region onto the coarse table by its midpoint.
inline std::uint32_t coarse_region_of(const AxisRegions& fine, std::uint32_t fine_index, const AxisRegions& coarse) {
  const CovRegion r = fine.region(fine_index);
  const double t_mid = 0.5 * (r.theta_lo + r.theta_hi), l_mid = 0.5 * (r.lam_lo + r.lam_hi);
  return static_cast<std::uint32_t>(coarse.index(bin_of(coarse.theta_edges, t_mid), bin_of(coarse.lambda_edges, l_mid)));
}

inline StateLabel coarse_label_of(const StateLabel& fine, const Abstraction& fa, const Abstraction& ca) {
  if (fine.kind != StateKind::Belief) return fine;
  StateLabel out = fine;
  for (std::size_t i = 0; i < fine.regions.size(); ++i)
    out.regions[i] = coarse_region_of(fa.regions.at(fine.waypoint).axes[i], fine.regions[i],
                                      ca.regions.at(fine.waypoint).axes[i]);
  return out;
}

inline StateLabel terminal_free_label(const StateLabel& l) {
  if (is_terminal(l.kind)) return {l.kind, 0, {}};
  return l;
}

}  // namespace detail

/// Compares an abstraction against its refinement. For each coarse state,
/// dP_max is the largest |T_fine - T_coarse| over its fine substates,
/// actions and coarse destinations (fine states mapped by region midpoint).
inline RefinementReport refinement_probe(const Abstraction& coarse, const Abstraction& fine) {
  RefinementReport rep;
  std::map<std::size_t, double> worst;
  for (std::size_t f = 0; f < fine.mdp.size(); ++f) {
    const MdpState& fs = fine.mdp.states[f];
    if (is_terminal(fs.label.kind)) continue;
    const auto c = coarse.find(detail::coarse_label_of(fs.label, fine, coarse));
    if (!c) continue;
    double& slot = worst[*c];
    for (const ActionEntry& fe : fs.actions) {
      const ActionEntry* ce = coarse.mdp.find_action(*c, fe.action);
      if (!ce) continue;
      std::map<StateLabel, double> diff;
      for (const Successor& s : fe.successors)
        diff[detail::terminal_free_label(detail::coarse_label_of(fine.mdp.states[s.state].label, fine, coarse))] += s.prob;
      for (const Successor& s : ce->successors)
        diff[detail::terminal_free_label(coarse.mdp.states[s.state].label)] -= s.prob;
      for (const auto& [label, d] : diff) slot = std::max(slot, std::abs(d));
    }
  }
  for (const auto& [c, v] : worst) {
    rep.coarse_states.push_back(c);
    rep.delta_p_max.push_back(v);
    rep.max = std::max(rep.max, v);
  }
  rep.median = detail::median_of(rep.delta_p_max);
  return rep;
}

/// Builds the abstraction at `coarse_cfg` and at doubled bin counts (same
/// seed and sample budget) and compares them.
inline RefinementReport refinement_probe(const Scenario& sc, const AbstractionConfig& coarse_cfg) {
  AbstractionConfig fine_cfg = coarse_cfg;
  fine_cfg.bins_theta *= 2;
  fine_cfg.bins_lambda *= 2;
  const Abstraction coarse = build_abstraction(sc, coarse_cfg);
  const Abstraction fine = build_abstraction(sc, fine_cfg);
  return refinement_probe(coarse, fine);
}

// --- Scalability ---------------------------------------------------------------

struct RegionCounts {
  std::size_t element_regions;   // n(n+1)/2: one per distinct covariance entry
  std::size_t spectral_regions;  // n: one per eigen-axis
  double spectral_state_bound;   // N d^n + 3
  double element_state_bound;    // N d^{n(n+1)/2} + 3
};

inline RegionCounts region_count_formulas(std::size_t n, std::size_t d, std::size_t waypoints) {
  if (n < 1 || d < 1) throw InputError("region_count_formulas: n and d must be >= 1");
  RegionCounts r;
  r.element_regions = n * (n + 1) / 2;
  r.spectral_regions = n;
  const double dd = static_cast<double>(d), nw = static_cast<double>(waypoints);
  r.spectral_state_bound = nw * std::pow(dd, static_cast<double>(r.spectral_regions)) + 3.0;
  r.element_state_bound = nw * std::pow(dd, static_cast<double>(r.element_regions)) + 3.0;
  return r;
}

// --- Serialization ---------------------------------------------------------------

inline MdpJson regions_to_json(const RegionTables& tables) {
  MdpJson out = MdpJson::array();
  for (const auto& wp : tables) {
    MdpJson axes = MdpJson::array();
    for (const auto& ax : wp.axes)
      axes.push_back(MdpJson{{"v_nom", ax.v_nom}, {"theta_edges", ax.theta_edges}, {"lambda_edges", ax.lambda_edges}});
    out.push_back(MdpJson{{"axes", axes}});
  }
  return out;
}

inline RegionTables regions_from_json(const MdpJson& j) {
  RegionTables tables;
  for (const auto& wp : j) {
    WaypointRegions w;
    for (const auto& ax : wp.at("axes"))
      w.axes.push_back({ax.at("v_nom").get<Vec>(), ax.at("theta_edges").get<Vec>(), ax.at("lambda_edges").get<Vec>()});
    tables.push_back(std::move(w));
  }
  return tables;
}

inline MdpJson config_to_json(const AbstractionConfig& c) {
  return MdpJson{{"method", static_cast<int>(c.method)},
                 {"bins_theta", c.bins_theta},
                 {"bins_lambda", c.bins_lambda},
                 {"samples_per_action", c.samples_per_action},
                 {"pool_cap", c.pool_cap},
                 {"calibration_runs", c.calibration_runs},
                 {"seed", c.seed}};
}

inline AbstractionConfig config_from_json(const MdpJson& j) {
  AbstractionConfig c;
  const int method = j.at("method").get<int>();
  if (method != 1 && method != 2) throw ParseError("method must be 1 or 2");
  c.method = static_cast<Method>(method);
  c.bins_theta = j.at("bins_theta").get<std::size_t>();
  c.bins_lambda = j.at("bins_lambda").get<std::size_t>();
  c.samples_per_action = j.at("samples_per_action").get<std::size_t>();
  c.pool_cap = j.at("pool_cap").get<std::size_t>();
  c.calibration_runs = j.at("calibration_runs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

/// MDP document: the transition structure plus what a simulator needs to map
/// concrete beliefs back to abstract states.
inline MdpJson to_json(const Abstraction& a) {
  MdpJson j;
  j["format"] = "etpareto-mdp";
  j["version"] = 1;
  j["method"] = static_cast<int>(a.config.method);
  j["config"] = config_to_json(a.config);
  const MdpJson body = to_json(a.mdp);
  for (const auto& [k, v] : body.items()) j[k] = v;
  j["regions"] = regions_to_json(a.regions);
  j["diagnostics"] = MdpJson{{"rollouts", a.diagnostics.rollouts},
                             {"lambda_above_cap", a.diagnostics.lambda_above_cap},
                             {"lambda_below_floor", a.diagnostics.lambda_below_floor},
                             {"segment_timeouts", a.diagnostics.segment_timeouts},
                             {"method1_unconverged", a.diagnostics.method1_unconverged}};
  return j;
}

inline Abstraction abstraction_from_json(const MdpJson& j) {
  try {
    Abstraction a;
    a.config = config_from_json(j.at("config"));
    a.mdp = momdp_from_json(j);
    if (j.contains("regions")) a.regions = regions_from_json(j["regions"]);
    if (j.contains("diagnostics")) {
      const auto& d = j["diagnostics"];
      a.diagnostics.rollouts = d.value("rollouts", std::size_t{0});
      a.diagnostics.lambda_above_cap = d.value("lambda_above_cap", std::size_t{0});
      a.diagnostics.lambda_below_floor = d.value("lambda_below_floor", std::size_t{0});
      a.diagnostics.segment_timeouts = d.value("segment_timeouts", std::size_t{0});
      a.diagnostics.method1_unconverged = d.value("method1_unconverged", std::size_t{0});
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed MDP document: ") + e.what());
  }
}

}  // namespace etpareto
