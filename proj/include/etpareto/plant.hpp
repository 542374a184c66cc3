#pragma once

// Ground-truth plant, waypoint-stabilizing control law, segment termination
// and the closed-loop single-segment rollout.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>

#include "etpareto/errors.hpp"
#include "etpareto/et_filter.hpp"
#include "etpareto/gaussian.hpp"
#include "etpareto/linalg.hpp"
#include "etpareto/rng.hpp"
#include "etpareto/scenario.hpp"

namespace etpareto {

enum class Method : int { EnforcedConvergence = 1, DiscretizedBelief = 2 };

struct ControlLaw {
  Matrix gain;  // p x n
  Vec u_max;    // per component
  Vec target_waypoint;
};

/// u = clamp(K (wp - x_hat), -u_max, u_max) componentwise.
inline Vec control(const Vec& x_hat, const ControlLaw& law) {
  Vec u = law.gain * (law.target_waypoint - x_hat);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], -law.u_max[i], law.u_max[i]);
  return u;
}

/// zeta: true iff ||x_hat - wp||_2 <= eps_x or k_i >= k_max.
inline bool terminated(const Vec& x_hat, const Vec& waypoint, std::size_t k_i, const TerminationParams& term) {
  return norm2(x_hat - waypoint) <= term.eps_x || k_i >= term.k_max;
}

/// Stationary LQR gain with identity state and input weights, by Riccati iteration.
inline Matrix lqr_gain(const Matrix& f, const Matrix& g, std::size_t max_iter = 100000, double tol = 1e-13) {
  const std::size_t n = f.rows(), p = g.cols();
  const Matrix ft = f.transpose(), gt = g.transpose();
  Matrix s = Matrix::identity(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Matrix gts_f = gt * s * f;
    const Matrix next =
        (Matrix::identity(n) + ft * s * f - gts_f.transpose() * solve_spd(Matrix::identity(p) + gt * s * g, gts_f))
            .symmetrized();
    const double diff = max_abs_diff(next, s);
    s = next;
    if (diff <= tol * std::max(1.0, s.max_abs())) return solve_spd(Matrix::identity(p) + gt * s * g, gt * s * f);
  }
  throw ConvergenceError("lqr_gain: Riccati iteration did not converge");
}

// Linear-Gaussian plant with precomputed noise factors.
class Plant {
 public:
  explicit Plant(FilterParams params)
      : params_(std::move(params)), process_(params_.Q), measurement_(params_.R) {}

  const FilterParams& params() const noexcept { return params_; }

  /// x' = F x + G u + w, w ~ N(0, Q).
  Vec step(const Vec& x, const Vec& u, RngStream& rng) const {
    return params_.F * x + params_.G * u + process_.noise(rng);
  }

  /// y = H x + v, v ~ N(0, R).
  Vec measure(const Vec& x, RngStream& rng) const { return params_.H * x + measurement_.noise(rng); }

 private:
  FilterParams params_;
  GaussianSampler process_;
  GaussianSampler measurement_;
};

inline Vec plant_step(const Plant& plant, const Vec& x, const Vec& u, RngStream& rng) { return plant.step(x, u, rng); }
inline Vec measure(const Plant& plant, const Vec& x, RngStream& rng) { return plant.measure(x, rng); }

enum class SegmentTerminal { None, Collision, Reached };

struct SegmentOutcome {
  FilterState final_filter;
  Vec final_true_state;
  std::size_t steps = 0;
  std::size_t triggers = 0;
  SegmentTerminal terminal = SegmentTerminal::None;
  std::size_t obstacle = 0;          // valid for Collision
  bool covariance_unconverged = false;  // Method 1 hit k_max before ||P - P_KF|| <= eps_p
};

struct StepRecord {
  std::size_t step;
  const Vec& true_state;
  const Vec& estimate;
  bool trigger;
  EstimatorMode mode;
};

struct RolloutOptions {
  Method method = Method::DiscretizedBelief;
  bool force_full_kf = false;  // transmit every measurement
  std::function<void(const StepRecord&)> on_step;
};

// Everything about a scenario's closed loop that does not change between
// rollouts: the plant, the feedback gain and the steady-state KF covariance.
class ClosedLoop {
 public:
  explicit ClosedLoop(const Scenario& scenario)
      : scenario_(&scenario),
        plant_(scenario.params),
        gain_(scenario.control.gain ? *scenario.control.gain : lqr_gain(scenario.params.F, scenario.params.G)),
        p_kf_(steady_state_kf_covariance(scenario.params).posterior) {}

  const Scenario& scenario() const noexcept { return *scenario_; }
  const Plant& plant() const noexcept { return plant_; }
  const Matrix& gain() const noexcept { return gain_; }
  const Matrix& steady_state_covariance() const noexcept { return p_kf_; }

  ControlLaw law_for(std::size_t waypoint_index) const {
    return {gain_, scenario_->control.u_max, scenario_->waypoints.at(waypoint_index)};
  }

 private:
  const Scenario* scenario_;
  Plant plant_;
  Matrix gain_;
  Matrix p_kf_;
};

/// Runs one segment toward waypoint `target_index`.
///
/// Per step: control, plant step, collision test on the true state,
/// measurement, predict, trigger decision, update, termination test.
/// Method 2 stops on mean convergence alone. Method 1 switches the estimator
/// to KF within eps_kf of the waypoint (every KF step transmits) and stops
/// only when the mean has converged and ||P - P_KF||_max <= eps_p.
/// k_max always bounds the number of steps.
inline SegmentOutcome segment_rollout(const ClosedLoop& loop, const FilterState& start_filter, const Vec& start_true,
                                      std::size_t target_index, double delta, const RolloutOptions& opts,
                                      RngStream& rng) {
  const Scenario& sc = loop.scenario();
  const FilterParams& params = sc.params;
  const ControlLaw law = loop.law_for(target_index);
  const Vec& wp = law.target_waypoint;
  const bool method1 = opts.method == Method::EnforcedConvergence;

  SegmentOutcome out;
  FilterState f = start_filter;
  f.step_in_segment = 0;
  f.triggers_in_segment = 0;
  f.mode = EstimatorMode::ET;
  Vec x = start_true;

  auto maybe_switch = [&] {
    if (method1 && f.mode == EstimatorMode::ET && norm2(f.belief.mean - wp) <= sc.method1.eps_kf)
      f.mode = EstimatorMode::KF;
  };
  auto cov_converged = [&] {
    return max_abs_diff(f.belief.cov, loop.steady_state_covariance()) <= sc.method1.eps_p;
  };
  auto mean_converged = [&] { return norm2(f.belief.mean - wp) <= sc.term.eps_x; };
  auto finish = [&](SegmentTerminal t) {
    out.final_filter = f;
    out.final_true_state = x;
    out.steps = f.step_in_segment;
    out.triggers = f.triggers_in_segment;
    out.terminal = t;
    return out;
  };

  maybe_switch();
  if (mean_converged() && (!method1 || cov_converged())) return finish(SegmentTerminal::Reached);

  while (f.step_in_segment < sc.term.k_max) {
    const Vec u = control(f.belief.mean, law);
    x = loop.plant().step(x, u, rng);
    const PointClass pc = classify_point(sc, x);
    if (pc.kind == PointKind::Collision) {
      ++f.step_in_segment;
      out.obstacle = pc.obstacle;
      return finish(SegmentTerminal::Collision);
    }
    const Vec y = loop.plant().measure(x, rng);
    const FilterState pred = predict(f, u, params);
    const bool full = opts.force_full_kf || f.mode == EstimatorMode::KF;
    const TriggerDecision d = full ? forced_trigger(pred, y, params) : decide_trigger(pred, y, delta, params);
    f = update(pred, d, delta, params);
    if (opts.on_step) opts.on_step(StepRecord{f.step_in_segment, x, f.belief.mean, d.gamma, f.mode});
    maybe_switch();
    if (mean_converged() && (!method1 || cov_converged())) return finish(SegmentTerminal::Reached);
  }
  out.covariance_unconverged = method1 && !cov_converged();
  return finish(SegmentTerminal::None);
}

}  // namespace etpareto
