// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/nn/gradcheck.hpp"

#include "sss/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sss::nn {

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double epsilon) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + epsilon;
    const double up = f(probe);
    probe[i] = x[i] - epsilon;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

namespace {
double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  double worst = 0.0;
  for (Index i = 0; i < numeric.size(); ++i) {
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(numeric[i])));
  }
  return worst;
}
}  // namespace

double finite_diff_check(Layer layer, const Tensor& input, double epsilon, Mode mode,
                         std::vector<double> lambda) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw ValidationError("finite_diff_check: epsilon must lie in (0, 1e-2]");
  }
  auto ctx_for = [&](const std::vector<double>& l) { return ForwardContext{mode, l}; };

  Tensor out = forward(layer, input, ctx_for(lambda));
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Tensor probe(out.shape());
  for (Index i = 0; i < probe.size(); ++i) probe[i] = normal(rng);
  const GradientBundle analytic = backward(layer, probe);

  auto objective = [&](const Tensor& x, const std::vector<double>& l) {
    Layer copy = layer;
    return forward(copy, x, ctx_for(l)).values().dot(probe.values());
  };

  double worst = relative_error(
      analytic.grad_input.values(),
      central_difference([&](const Eigen::VectorXd& v) { return objective(Tensor(input.shape(), v), lambda); },
                         input.values(), epsilon));

  auto& ps = params(layer);
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const Tensor original = ps[p];
    auto f = [&](const Eigen::VectorXd& v) {
      ps[p].values() = v;
      const double r = objective(input, lambda);
      ps[p] = original;
      return r;
    };
    worst = std::max(worst, relative_error(analytic.grad_params[p].values(),
                                           central_difference(f, original.values(), epsilon)));
  }

  if (auto* scale = std::get_if<ChannelScale>(&layer)) {
    const Eigen::VectorXd l0 = Eigen::Map<const Eigen::VectorXd>(lambda.data(), static_cast<Index>(lambda.size()));
    auto f = [&](const Eigen::VectorXd& v) {
      return objective(input, std::vector<double>(v.data(), v.data() + v.size()));
    };
    const Eigen::VectorXd numeric = central_difference(f, l0, epsilon).segment(scale->offset(), scale->factors());
    worst = std::max(worst, relative_error(analytic.grad_params.at(0).values(), numeric));
  }
  return worst;
}

}  // namespace sss::nn
