// include/werfair/optim.hpp

// Copyright 2026  The werfair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WERFAIR_OPTIM_HPP_
#define WERFAIR_OPTIM_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace werfair {

struct BfgsOptions {
  int max_evaluations = 200;
  double gradient_tolerance = 1e-6;
  // Accepted when the line search stalls at the limit of floating-point
  // resolution of the objective.
  double stall_tolerance = 1e-4;
};

struct BfgsResult {
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

/// Objective for minimization: returns f(x) and writes the gradient. May throw;
/// a throwing trial point is treated as f = +inf.
using Objective = std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)>;

/// Quasi-Newton (BFGS, inverse-Hessian form) minimizer with optional lower
/// bounds. Bounded coordinates sitting on their bound with a gradient pushing
/// outward are frozen for the step; the convergence test uses the projected
/// gradient.
inline BfgsResult minimize_bfgs(const Objective &fn, Eigen::VectorXd x,
                                const Eigen::VectorXd &lower,
                                const Eigen::MatrixXd &initial_inverse_hessian,
                                const BfgsOptions &opt = {}) {
  const Eigen::Index n = x.size();
  auto project = [&lower](Eigen::VectorXd v) {
    return v.cwiseMax(lower).eval();
  };
  auto safe_eval = [&fn](const Eigen::VectorXd &at, Eigen::VectorXd &g) {
    try {
      const double v = fn(at, g);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (...) {
      return std::numeric_limits<double>::infinity();
    }
  };

  BfgsResult res;
  x = project(x);
  Eigen::VectorXd g(n);
  double f = safe_eval(x, g);
  res.evaluations = 1;
  if (!std::isfinite(f)) {
    res.x = x;
    res.value = f;
    return res;
  }

  Eigen::MatrixXd h = initial_inverse_hessian;
  bool just_reset = true;
  for (;;) {
    std::vector<bool> active(n, false);
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] <= lower[i] && g[i] > 0.0) {
        active[i] = true;
        pg[i] = 0.0;
      }
    }
    const double pg_norm = pg.lpNorm<Eigen::Infinity>();
    if (pg_norm <= opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evaluations) break;

    Eigen::VectorXd d = -(h * pg);
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[i]) d[i] = 0.0;
    if (!(pg.dot(d) < 0.0)) {
      h = initial_inverse_hessian;
      just_reset = true;
      d = -(h * pg);
      for (Eigen::Index i = 0; i < n; ++i)
        if (active[i]) d[i] = 0.0;
      if (!(pg.dot(d) < 0.0)) d = -pg;
    }
    // Keep trial points in a sane neighbourhood.
    const double largest = d.lpNorm<Eigen::Infinity>();
    double t = largest > 10.0 ? 10.0 / largest : 1.0;

    Eigen::VectorXd xt, gt(n);
    double ft = std::numeric_limits<double>::infinity();
    bool accepted = false;
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::fabs(f));
    while (res.evaluations < opt.max_evaluations && t > 1e-14) {
      xt = project(x + t * d);
      ft = safe_eval(xt, gt);
      ++res.evaluations;
      if (ft <= f + 1e-4 * g.dot(xt - x) + noise) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted || (xt - x).lpNorm<Eigen::Infinity>() == 0.0) {
      if (pg_norm <= opt.stall_tolerance) {
        res.converged = true;
        break;
      }
      if (just_reset || res.evaluations >= opt.max_evaluations) break;
      h = initial_inverse_hessian;
      just_reset = true;
      continue;
    }
    ++res.iterations;
    just_reset = false;
    const Eigen::VectorXd s = xt - x;
    const Eigen::VectorXd y = gt - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += rho * ((1.0 + rho * y.dot(hy)) * (s * s.transpose()) -
                  (hy * s.transpose() + s * hy.transpose()));
    }
    x = xt;
    f = ft;
    g = gt;
  }
  res.x = x;
  res.value = f;
  res.gradient = g;
  return res;
}

}  // namespace werfair

#endif  // WERFAIR_OPTIM_HPP_
