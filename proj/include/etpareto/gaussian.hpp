#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>

#include "etpareto/errors.hpp"
#include "etpareto/linalg.hpp"
#include "etpareto/rng.hpp"

namespace etpareto {

struct GaussianBelief {
  Vec mean;
  Matrix cov;

  std::size_t dim() const noexcept { return mean.size(); }
};

/// Upper tail of the standard normal, Q(delta) = P(N(0,1) > delta).
inline double gaussian_tail_q(double delta) {
  if (!std::isfinite(delta) || delta < 0.0) throw InputError("gaussian_tail_q: delta must be finite and >= 0");
  return 0.5 * std::erfc(delta / std::numbers::sqrt2);
}

/// Attenuation of the Kalman correction applied when no measurement is sent:
/// beta(delta) = (2/sqrt(2 pi)) delta exp(-delta^2/2) / (1 - 2 Q(delta)).
/// This is one minus the variance of a standard normal truncated to
/// [-delta, delta]. 1 - 2Q is evaluated as erf() to keep precision near 0.
inline double beta_coefficient(double delta) {
  if (!std::isfinite(delta) || delta <= 0.0)
    throw InputError("beta_coefficient: delta must be > 0 (delta = 0 is the explicit-update case)");
  const double inside = std::erf(delta / std::numbers::sqrt2);
  return 2.0 / std::sqrt(2.0 * std::numbers::pi) * delta * std::exp(-0.5 * delta * delta) / inside;
}

/// Probability that at least one of m independent whitened innovation
/// components exceeds delta in magnitude: 1 - (1 - 2Q(delta))^m.
inline double expected_trigger_rate(double delta, std::size_t m) {
  if (m == 0) throw InputError("expected_trigger_rate: measurement dimension must be >= 1");
  if (!std::isfinite(delta) || delta < 0.0) throw InputError("expected_trigger_rate: delta must be >= 0");
  const double inside = std::erf(delta / std::numbers::sqrt2);
  return 1.0 - std::pow(inside, static_cast<double>(m));
}

// Symmetric square root S (S S^T = cov) via the eigendecomposition, which
// tolerates semidefinite covariances. Eigenvalues in (-1e-9, 0) are floored.
inline Matrix covariance_sqrt(const Matrix& cov) {
  const EigenDecomposition eig = sym_eigen(cov);
  const double tol = 1e-9 * std::max(1.0, eig.values.front());
  Matrix s = eig.vectors;
  for (std::size_t c = 0; c < s.cols(); ++c) {
    double lam = eig.values[c];
    if (lam < -tol) {
      std::ostringstream os;
      os << "covariance is indefinite (eigenvalue " << lam << ")";
      throw InputError(os.str());
    }
    const double root = std::sqrt(std::max(lam, 0.0));
    for (std::size_t r = 0; r < s.rows(); ++r) s(r, c) *= root;
  }
  return s;
}

// Draws from N(mean, S S^T) with a precomputed factor. Reuse this in
// inner loops instead of refactoring the covariance every call.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  explicit GaussianSampler(const Matrix& cov) : factor_(covariance_sqrt(cov)) {}

  std::size_t dim() const noexcept { return factor_.rows(); }

  Vec noise(RngStream& rng) const {
    const std::size_t n = factor_.rows();
    Vec z(n);
    for (double& v : z) v = rng.normal();
    return factor_ * z;
  }

  Vec sample(const Vec& mean, RngStream& rng) const { return mean + noise(rng); }

 private:
  Matrix factor_;
};

inline Vec sample_belief(const GaussianBelief& belief, RngStream& rng) {
  return GaussianSampler(belief.cov).sample(belief.mean, rng);
}

/// Whitens an innovation: epsilon = Lambda^{-1/2} V^T z where Z = V Lambda V^T,
/// so that cov(epsilon) = I when z ~ N(0, Z).
inline Vec whiten_innovation(const Vec& z, const Matrix& innovation_cov) {
  if (innovation_cov.rows() != z.size()) throw InputError("whiten_innovation: dimension mismatch");
  const EigenDecomposition eig = sym_eigen(innovation_cov);
  if (!(eig.values.back() > 1e-12)) {
    std::ostringstream os;
    os << "whiten_innovation: innovation covariance is singular (eigenvalue " << eig.values.back() << ")";
    throw NumericalError(os.str());
  }
  Vec eps = eig.vectors.transpose() * z;
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] /= std::sqrt(eig.values[i]);
  return eps;
}

}  // namespace etpareto
