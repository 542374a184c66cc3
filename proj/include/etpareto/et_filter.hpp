#pragma once

// Event-triggered MMSE estimator. The sensor transmits y_k only when the
// whitened innovation leaves the box ||eps||_inf <= delta; otherwise the
// filter applies an attenuated covariance correction using the implicit
// knowledge that the innovation stayed inside the box.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <utility>

#include "etpareto/errors.hpp"
#include "etpareto/gaussian.hpp"
#include "etpareto/linalg.hpp"

namespace etpareto {

struct FilterParams {
  Matrix F;  // n x n
  Matrix G;  // n x p
  Matrix H;  // m x n
  Matrix Q;  // n x n process noise
  Matrix R;  // m x m measurement noise

  std::size_t state_dim() const noexcept { return F.rows(); }
  std::size_t input_dim() const noexcept { return G.cols(); }
  std::size_t meas_dim() const noexcept { return H.rows(); }

  void check_dimensions() const {
    const std::size_t n = F.rows();
    auto fail = [](const char* what) { throw InputError(std::string("FilterParams: ") + what); };
    if (n == 0 || !F.square()) fail("F must be square and non-empty");
    if (G.rows() != n || G.cols() == 0) fail("G must be n x p");
    if (H.cols() != n || H.rows() == 0) fail("H must be m x n");
    if (Q.rows() != n || Q.cols() != n) fail("Q must be n x n");
    if (R.rows() != H.rows() || !R.square()) fail("R must be m x m");
  }
};

enum class EstimatorMode : std::uint8_t { ET, KF };

struct FilterState {
  GaussianBelief belief;
  std::size_t step_in_segment = 0;
  std::size_t triggers_in_segment = 0;
  EstimatorMode mode = EstimatorMode::ET;
};

struct TriggerDecision {
  bool gamma = false;
  Vec epsilon;
  Vec innovation;
  Matrix innovation_cov;
};

/// A priori update: x- = F x + G u, P- = F P F^T + Q. Advances the segment step counter.
inline FilterState predict(const FilterState& state, const Vec& u, const FilterParams& params) {
  if (state.belief.mean.size() != params.state_dim() || u.size() != params.input_dim())
    throw InputError("predict: dimension mismatch");
  FilterState next = state;
  next.belief.mean = params.F * state.belief.mean + params.G * u;
  next.belief.cov = (params.F * state.belief.cov * params.F.transpose() + params.Q).symmetrized();
  ++next.step_in_segment;
  return next;
}

inline Matrix innovation_covariance(const Matrix& p_minus, const FilterParams& params) {
  return (params.R + params.H * p_minus * params.H.transpose()).symmetrized();
}

/// K = P- H^T (H P- H^T + R)^{-1}.
inline Matrix kalman_gain(const Matrix& p_minus, const FilterParams& params) {
  const Matrix z_cov = innovation_covariance(p_minus, params);
  // Z symmetric, so K^T = Z^{-1} H P-.
  return solve_spd(z_cov, params.H * p_minus).transpose();
}

/// g_lambda(P) = P - lambda P H^T (H P H^T + R)^{-1} H P.
/// lambda = 1 is the Kalman posterior; lambda = beta(delta) is the implicit update.
inline Matrix g_lambda(const Matrix& p, double lambda, const FilterParams& params) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("g_lambda: lambda must lie in [0, 1]");
  if (lambda == 0.0 || p.max_abs() == 0.0) return p;
  const Matrix hp = params.H * p;
  const Matrix correction = hp.transpose() * solve_spd(innovation_covariance(p, params), hp);
  return (p - lambda * correction).symmetrized();
}

/// Innovation, its covariance, the whitened innovation and the trigger
/// decision for the predicted state. Ties ||eps||_inf == delta do not trigger.
inline TriggerDecision decide_trigger(const FilterState& predicted, const Vec& y, double delta,
                                      const FilterParams& params) {
  if (y.size() != params.meas_dim()) throw InputError("decide_trigger: measurement dimension mismatch");
  TriggerDecision d;
  d.innovation = y - params.H * predicted.belief.mean;
  d.innovation_cov = innovation_covariance(predicted.belief.cov, params);
  if (norm_inf(d.innovation) == 0.0) {
    d.epsilon = Vec(y.size(), 0.0);
  } else {
    d.epsilon = whiten_innovation(d.innovation, d.innovation_cov);
  }
  d.gamma = norm_inf(d.epsilon) > delta;
  return d;
}

// Decision that always transmits (full Kalman filter). epsilon is left empty.
inline TriggerDecision forced_trigger(const FilterState& predicted, const Vec& y, const FilterParams& params) {
  if (y.size() != params.meas_dim()) throw InputError("forced_trigger: measurement dimension mismatch");
  TriggerDecision d;
  d.innovation = y - params.H * predicted.belief.mean;
  d.innovation_cov = innovation_covariance(predicted.belief.cov, params);
  d.gamma = true;
  return d;
}

/// A posteriori update.
///   gamma = 1: x = x- + K z, P = g_1(P-) (Joseph form).
///   gamma = 0: x = x-,       P = g_beta(delta)(P-).
inline FilterState update(const FilterState& predicted, const TriggerDecision& decision, double delta,
                          const FilterParams& params) {
  FilterState next = predicted;
  const Matrix& p_minus = predicted.belief.cov;
  if (decision.gamma) {
    if (p_minus.max_abs() != 0.0) {
      const Matrix k = kalman_gain(p_minus, params);
      next.belief.mean = predicted.belief.mean + k * decision.innovation;
      const Matrix i_kh = Matrix::identity(p_minus.rows()) - k * params.H;
      next.belief.cov = (i_kh * p_minus * i_kh.transpose() + k * params.R * k.transpose()).symmetrized();
    }
    ++next.triggers_in_segment;
  } else {
    // delta = 0 only reaches here when eps == 0 exactly; beta's limit there is 1.
    const double lambda = delta > 0.0 ? beta_coefficient(delta) : 1.0;
    next.belief.cov = g_lambda(p_minus, lambda, params);
  }
  return next;
}

struct SteadyStateCovariance {
  Matrix posterior;  // P_KF
  Matrix prior;      // F P_KF F^T + Q
  std::size_t iterations = 0;
};

/// Fixed point of the Riccati recursion P- = F P F^T + Q, P = g_1(P-),
/// iterated from P = 0 until successive posteriors agree to `tol` in max-norm.
inline SteadyStateCovariance steady_state_kf_covariance(const FilterParams& params, double tol = 1e-12,
                                                        std::size_t max_iter = 100000) {
  params.check_dimensions();
  const std::size_t n = params.state_dim();
  Matrix p(n, n);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Matrix prior = (params.F * p * params.F.transpose() + params.Q).symmetrized();
    Matrix post = g_lambda(prior, 1.0, params);
    const double diff = max_abs_diff(post, p);
    p = std::move(post);
    if (diff < tol) return {p, (params.F * p * params.F.transpose() + params.Q).symmetrized(), it};
  }
  std::ostringstream os;
  os << "steady_state_kf_covariance: no convergence within " << max_iter << " iterations";
  throw ConvergenceError(os.str());
}

}  // namespace etpareto
