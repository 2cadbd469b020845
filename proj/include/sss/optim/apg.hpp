// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>

namespace sss::optim {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// S_alpha(z)_i = sign(z_i) * max(|z_i| - alpha, 0).
///
/// Entries with |z_i| <= alpha come out as exactly +0.0; nothing downstream
/// applies an epsilon threshold.
template <typename Derived>
Vector<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& z,
                                                typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  if (!(alpha >= Scalar(0))) throw ValidationError("soft_threshold: alpha must be non-negative");
  return z.unaryExpr([alpha](Scalar v) {
    const Scalar mag = std::abs(v) - alpha;
    if (mag <= Scalar(0)) return Scalar(0);
    return v > Scalar(0) ? mag : -mag;
  });
}

/// Coordinate-wise thresholds, one alpha_i per entry.
template <typename DerivedZ, typename DerivedA>
Vector<typename DerivedZ::Scalar> soft_threshold(const Eigen::MatrixBase<DerivedZ>& z,
                                                 const Eigen::MatrixBase<DerivedA>& alpha) {
  using Scalar = typename DerivedZ::Scalar;
  if (z.size() != alpha.size()) {
    throw ValidationError("soft_threshold: " + std::to_string(alpha.size()) + " thresholds for " +
                          std::to_string(z.size()) + " entries");
  }
  if ((alpha.array() < Scalar(0)).any()) {
    throw ValidationError("soft_threshold: thresholds must be non-negative");
  }
  Vector<Scalar> out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const Scalar mag = std::abs(z[i]) - alpha[i];
    out[i] = mag <= Scalar(0) ? Scalar(0) : (z[i] > Scalar(0) ? mag : -mag);
  }
  return out;
}

/// Penalty gamma_i >= 0 per scaling factor, gradient step eta and momentum mu
/// for the proximal updates of the scaling factors.
template <typename Scalar>
struct SparseRegConfigT {
  Vector<Scalar> gamma;
  Scalar eta = Scalar(0.01);
  Scalar mu = Scalar(0.9);

  void validate(Eigen::Index structures) const {
    if (gamma.size() != structures) {
      throw ValidationError("sparse config: " + std::to_string(gamma.size()) +
                            " penalty weights for " + std::to_string(structures) + " factors");
    }
    if ((gamma.array() < Scalar(0)).any() || !gamma.allFinite()) {
      throw ValidationError("sparse config: gamma must be finite and non-negative");
    }
    if (!(eta > Scalar(0)) || !std::isfinite(eta)) {
      throw ValidationError("sparse config: eta must be positive");
    }
    if (!(mu >= Scalar(0) && mu < Scalar(1))) {
      throw ValidationError("sparse config: mu must lie in [0, 1)");
    }
  }

  /// Per-coordinate proximal thresholds eta * gamma_i.
  Vector<Scalar> thresholds() const { return eta * gamma; }

  static SparseRegConfigT uniform(Eigen::Index structures, Scalar gamma, Scalar eta = Scalar(0.01),
                                  Scalar mu = Scalar(0.9)) {
    return {Vector<Scalar>::Constant(structures, gamma), eta, mu};
  }
};
using SparseRegConfig = SparseRegConfigT<double>;

/// Extrapolation weight (t - 2) / (t + 1) of the classic accelerated scheme.
template <typename Scalar = double>
Scalar apg_extrapolation(std::int64_t t) {
  return Scalar(t - 2) / Scalar(t + 1);
}

/// One classic accelerated proximal gradient step:
///   d = lambda_{t-1} + (t-2)/(t+1) (lambda_{t-1} - lambda_{t-2})
///   z = d - eta * grad(d)
///   lambda_t = S_{eta gamma}(z)
/// `grad` evaluates the smooth part's gradient at the extrapolated point.
template <typename Scalar, typename GradFn>
Vector<Scalar> apg_classic_step(const Vector<Scalar>& prev, const Vector<Scalar>& prev2, GradFn&& grad,
                                const SparseRegConfigT<Scalar>& config, std::int64_t t) {
  if (t < 1) throw ValidationError("apg_classic_step: iteration counter starts at 1");
  config.validate(prev.size());
  const Vector<Scalar> d = prev + apg_extrapolation<Scalar>(t) * (prev - prev2);
  const Vector<Scalar> z = d - config.eta * Vector<Scalar>(grad(d));
  return soft_threshold(z, config.thresholds());
}

template <typename Scalar>
struct ApgMomentumStateT {
  Vector<Scalar> lambda;
  Vector<Scalar> velocity;
};
using ApgMomentumState = ApgMomentumStateT<double>;

/// Momentum form of the same iteration, with the caller choosing mu_{t-1}:
///   z = lambda + mu v - eta * grad(lambda + mu v)
///   v' = S_{eta gamma}(z) - lambda
///   lambda' = lambda + v'
/// With mu = (t-2)/(t+1) and v = lambda_{t-1} - lambda_{t-2} it reproduces
/// apg_classic_step. `config.mu` is ignored in favour of `mu`.
template <typename Scalar, typename GradFn>
ApgMomentumStateT<Scalar> apg_momentum_step(const ApgMomentumStateT<Scalar>& state, GradFn&& grad,
                                            const SparseRegConfigT<Scalar>& config, Scalar mu) {
  config.validate(state.lambda.size());
  if (state.velocity.size() != state.lambda.size()) {
    throw ValidationError("apg_momentum_step: velocity and lambda lengths differ");
  }
  const Vector<Scalar> lookahead = state.lambda + mu * state.velocity;
  const Vector<Scalar> z = lookahead - config.eta * Vector<Scalar>(grad(lookahead));
  ApgMomentumStateT<Scalar> next;
  next.velocity = soft_threshold(z, config.thresholds()) - state.lambda;
  next.lambda = state.lambda + next.velocity;
  return next;
}

/// Stored state of the lookahead form. `lambda_prime` is the point the
/// network is evaluated at; the actual iterate is lambda_prime - mu * velocity.
template <typename Scalar>
struct ApgStateT {
  Vector<Scalar> lambda_prime;
  Vector<Scalar> velocity;
  std::int64_t iteration = 0;

  /// Start from lambda with zero velocity, so lambda_prime == lambda.
  static ApgStateT start(const Vector<Scalar>& lambda) {
    return {lambda, Vector<Scalar>::Zero(lambda.size()), 0};
  }
};
using ApgState = ApgStateT<double>;

/// lambda = lambda_prime - mu * velocity. An exact zero produced by the
/// proximal step survives this subtraction bit-exactly, because lambda_prime
/// was formed as 0 + mu * velocity.
template <typename Scalar>
Vector<Scalar> recovered_lambda(const ApgStateT<Scalar>& state, Scalar mu) {
  return state.lambda_prime - mu * state.velocity;
}

/// apg_nag_step with the gradient at lambda_prime already computed (the
/// training loop obtains it from the shared backward pass).
template <typename Scalar>
ApgStateT<Scalar> apg_nag_update(const ApgStateT<Scalar>& state, const Vector<Scalar>& grad_at_prime,
                                 const SparseRegConfigT<Scalar>& config) {
  config.validate(state.lambda_prime.size());
  if (state.velocity.size() != state.lambda_prime.size() ||
      grad_at_prime.size() != state.lambda_prime.size()) {
    throw ValidationError("apg_nag_step: state and gradient lengths differ");
  }
  const Vector<Scalar> z = state.lambda_prime - config.eta * grad_at_prime;
  const Vector<Scalar> prox = soft_threshold(z, config.thresholds());
  ApgStateT<Scalar> next;
  next.velocity = prox - state.lambda_prime + config.mu * state.velocity;
  next.lambda_prime = prox + config.mu * next.velocity;
  next.iteration = state.iteration + 1;
  return next;
}

/// One step of the lookahead form, needing the gradient only at the stored
/// lambda_prime:
///   z = lambda' - eta * grad(lambda')
///   v = S_{eta gamma}(z) - lambda' + mu v
///   lambda' = S_{eta gamma}(z) + mu v
template <typename Scalar, typename GradFn>
ApgStateT<Scalar> apg_nag_step(const ApgStateT<Scalar>& state, GradFn&& grad,
                               const SparseRegConfigT<Scalar>& config) {
  return apg_nag_update(state, Vector<Scalar>(grad(state.lambda_prime)), config);
}

/// G + sum_i gamma_i |lambda_i|.
template <typename Scalar, typename Derived>
Scalar composite_objective(Scalar smooth, const Eigen::MatrixBase<Derived>& lambda,
                           const Vector<Scalar>& gamma) {
  return smooth + gamma.dot(lambda.cwiseAbs());
}

}  // namespace sss::optim
