// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/errors.hpp"
#include "sss/optim/apg.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace sss::optim {

template <typename Scalar>
struct LassoResult {
  Vector<Scalar> solution;
  Scalar objective;
  Scalar gap;  // duality gap at exit (KKT residual when gamma == 0)
  std::int64_t sweeps;
};

/// 1/2 ||A x - b||^2 + gamma ||x||_1.
template <typename DerivedA, typename DerivedB, typename DerivedX>
typename DerivedA::Scalar lasso_objective(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b,
                                          const Eigen::MatrixBase<DerivedX>& x,
                                          typename DerivedA::Scalar gamma) {
  return (a * x - b).squaredNorm() / 2 + gamma * x.template lpNorm<1>();
}

/// Cyclic coordinate descent for the LASSO. Independent of the proximal
/// gradient code path; used as a reference solution.
///
/// Stops when the duality gap (or, for gamma == 0, the gradient sup-norm)
/// drops to tol * max(1, objective). Throws NumericalError after max_sweeps.
template <typename DerivedA, typename DerivedB>
LassoResult<typename DerivedA::Scalar> lasso_reference_solve(const Eigen::MatrixBase<DerivedA>& a,
                                                             const Eigen::MatrixBase<DerivedB>& b,
                                                             typename DerivedA::Scalar gamma,
                                                             typename DerivedA::Scalar tol = 1e-10,
                                                             std::int64_t max_sweeps = 200000) {
  using Scalar = typename DerivedA::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != b.size()) throw ValidationError("lasso: A rows and b length differ");
  if (a.rows() > 200 || a.cols() > 200) throw ValidationError("lasso: reference solver is limited to 200x200");
  if (!(gamma >= 0)) throw ValidationError("lasso: gamma must be non-negative");

  const Mat A = a;
  const Vector<Scalar> B = b;
  const Vector<Scalar> col_sq = A.colwise().squaredNorm().transpose();
  Vector<Scalar> x = Vector<Scalar>::Zero(A.cols());
  Vector<Scalar> r = B;

  for (std::int64_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (col_sq[j] == 0) continue;
      const Scalar rho = A.col(j).dot(r) + col_sq[j] * x[j];
      const Scalar mag = std::abs(rho) - gamma;
      const Scalar next = mag <= 0 ? Scalar(0) : (rho > 0 ? mag : -mag) / col_sq[j];
      if (next != x[j]) {
        r -= (next - x[j]) * A.col(j);
        x[j] = next;
      }
    }
    // Recompute the residual to keep accumulated drift out of the gap.
    r = B - A * x;
    const Vector<Scalar> corr = A.transpose() * r;
    const Scalar primal = r.squaredNorm() / 2 + gamma * x.template lpNorm<1>();
    Scalar gap;
    if (gamma > 0) {
      const Scalar sup = corr.template lpNorm<Eigen::Infinity>();
      const Scalar s = sup > gamma ? gamma / sup : Scalar(1);
      const Vector<Scalar> theta = s * r;
      const Scalar dual = B.squaredNorm() / 2 - (B - theta).squaredNorm() / 2;
      gap = primal - dual;
    } else {
      gap = corr.template lpNorm<Eigen::Infinity>();
    }
    if (gap <= tol * std::max(Scalar(1), primal)) return {x, primal, gap, sweep};
  }
  throw NumericalError("lasso: coordinate descent did not reach tolerance " + std::to_string(tol) +
                       " within " + std::to_string(max_sweeps) + " sweeps");
}

}  // namespace sss::optim
