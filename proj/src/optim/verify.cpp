// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/optim/verify.hpp"

#include "sss/optim/apg.hpp"
#include "sss/optim/lasso.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace sss::optim {

namespace {

constexpr Eigen::Index kDim = 20;

struct Quadratic {
  Eigen::MatrixXd q;
  Eigen::VectorXd c;
  Eigen::VectorXd start;
  SparseRegConfig config;

  Eigen::VectorXd grad(const Eigen::VectorXd& x) const { return q * x - c; }
};

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

double largest_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

Quadratic make_quadratic(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd m = gaussian(rng, kDim, kDim);
  Quadratic p;
  p.q = m.transpose() * m / static_cast<double>(kDim) + 0.1 * Eigen::MatrixXd::Identity(kDim, kDim);
  p.c = gaussian(rng, kDim, 1);
  p.start = gaussian(rng, kDim, 1);
  std::uniform_real_distribution<double> weight(0.05, 0.5);
  Eigen::VectorXd gamma(kDim);
  for (Eigen::Index i = 0; i < kDim; ++i) gamma[i] = weight(rng);
  p.config = {gamma, 1.0 / largest_eigenvalue(p.q), 0.9};
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

CheckResult check_classic_vs_momentum(std::uint64_t seed, int iterations, double tol) {
  const Quadratic p = make_quadratic(seed);
  auto grad = [&](const Eigen::VectorXd& x) { return p.grad(x); };
  Eigen::VectorXd prev = p.start, prev2 = p.start;
  ApgMomentumState m{p.start, Eigen::VectorXd::Zero(kDim)};
  double worst = 0.0;
  int zeros = 0;
  for (int t = 1; t <= iterations; ++t) {
    const Eigen::VectorXd next = apg_classic_step(prev, prev2, grad, p.config, t);
    m = apg_momentum_step(m, grad, p.config, apg_extrapolation<double>(t));
    worst = std::max(worst, (next - m.lambda).lpNorm<Eigen::Infinity>());
    prev2 = prev;
    prev = next;
    zeros = static_cast<int>((next.array() == 0.0).count());
  }
  return {"classic vs momentum form", worst <= tol, worst, tol,
          std::to_string(iterations) + " iterations, " + std::to_string(zeros) + " exact zeros at exit"};
}

CheckResult check_momentum_vs_lookahead(std::uint64_t seed, int iterations, double mu, double tol) {
  const Quadratic p = make_quadratic(seed);
  SparseRegConfig config = p.config;
  config.mu = mu;
  auto grad = [&](const Eigen::VectorXd& x) { return p.grad(x); };
  ApgMomentumState m{p.start, Eigen::VectorXd::Zero(kDim)};
  ApgState s = ApgState::start(p.start);
  double worst = 0.0;
  for (int t = 1; t <= iterations; ++t) {
    m = apg_momentum_step(m, grad, config, mu);
    s = apg_nag_step(s, grad, config);
    worst = std::max(worst, (recovered_lambda(s, mu) - m.lambda).lpNorm<Eigen::Infinity>());
  }
  return {"momentum vs lookahead form", worst <= tol, worst, tol,
          std::to_string(iterations) + " iterations, mu " + fmt(mu)};
}

CheckResult check_lasso_agreement(std::uint64_t seed, int max_iterations, double tol) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd a = gaussian(rng, 20, 50);
  const Eigen::VectorXd b = gaussian(rng, 20, 1);
  const double gamma = 0.1 * (a.transpose() * b).lpNorm<Eigen::Infinity>();
  const auto ref = lasso_reference_solve(a, b, gamma, 1e-13);

  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;
  const double lipschitz = largest_eigenvalue(ata);
  SparseRegConfig config = SparseRegConfig::uniform(50, gamma, 1.0 / lipschitz, 0.9);
  auto grad = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(ata * x - atb); };

  ApgState s = ApgState::start(Eigen::VectorXd::Zero(50));
  int reached = -1;
  double excess = 0.0;
  for (int t = 1; t <= max_iterations; ++t) {
    s = apg_nag_step(s, grad, config);
    excess = lasso_objective(a, b, recovered_lambda(s, config.mu), gamma) - ref.objective;
    if (reached < 0 && excess <= tol) reached = t;
  }
  const bool pass = reached > 0 && excess <= tol;
  std::string detail = "reference objective " + fmt(ref.objective) + " after " + std::to_string(ref.sweeps) +
                       " sweeps; ";
  detail += reached > 0 ? "within tolerance from iteration " + std::to_string(reached)
                        : "never within tolerance";
  return {"lasso vs coordinate descent", pass, excess, tol, detail};
}

std::vector<CheckResult> verify_optim_suite() {
  return {check_classic_vs_momentum(), check_momentum_vs_lookahead(), check_lasso_agreement()};
}

}  // namespace sss::optim
