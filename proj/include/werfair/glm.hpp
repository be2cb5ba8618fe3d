// include/werfair/glm.hpp

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

#ifndef WERFAIR_GLM_HPP_
#define WERFAIR_GLM_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "werfair/dataset.hpp"
#include "werfair/design.hpp"
#include "werfair/errors.hpp"

namespace werfair {

/// Poisson log-likelihood with log link and offset, including the
/// -log(C!) terms so that fixed- and mixed-effect likelihoods share a scale.
inline double poisson_log_likelihood(const Design &d,
                                     const Eigen::VectorXd &beta) {
  const Eigen::VectorXd eta = d.offset + d.x * beta;
  double ll = 0.0;
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    const double y = d.y[r];
    ll += y * eta[r] - std::exp(eta[r]) - std::lgamma(y + 1.0);
  }
  return ll;
}

inline Eigen::VectorXd poisson_gradient(const Design &d,
                                        const Eigen::VectorXd &beta) {
  const Eigen::VectorXd mu = (d.offset + d.x * beta).array().exp().matrix();
  return d.x.transpose() * (d.y - mu);
}

struct GlmOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double relative_tolerance = 1e-10;
};

struct FittedGLM {
  ModelSpec spec;
  GroupFactor factor;
  std::vector<std::string> names;
  std::vector<int> level_column;
  Eigen::VectorXd coefficients;
  // Inverse observed information at the estimate.
  Eigen::MatrixXd covariance;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t corpus_fingerprint = 0;
  std::size_t observations = 0;

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(coefficients.size());
  }
};

namespace detail {

struct NewtonResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd information;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline Eigen::VectorXd initial_coefficients(const Design &d) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.cols());
  double exposure = 0.0;
  for (Eigen::Index r = 0; r < d.rows(); ++r) exposure += std::exp(d.offset[r]);
  const double rate = std::max(d.y.sum(), 0.5) / exposure;
  if (!d.names.empty() && d.names.front() == "(Intercept)") {
    beta[0] = std::log(rate);
  } else {
    for (int c : d.level_column)
      if (c >= 0) beta[c] = std::log(rate);
  }
  return beta;
}

// Newton-Raphson on the Poisson log-likelihood; equivalent to IRLS for the
// canonical log link.
inline NewtonResult poisson_newton(const Design &d, const GlmOptions &opt) {
  NewtonResult res;
  Eigen::VectorXd beta = initial_coefficients(d);
  double lgamma_sum = 0.0;
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    lgamma_sum += std::lgamma(d.y[r] + 1.0);

  auto evaluate = [&](const Eigen::VectorXd &b, Eigen::VectorXd &mu) {
    const Eigen::VectorXd eta = d.offset + d.x * b;
    mu = eta.array().exp().matrix();
    return d.y.dot(eta) - mu.sum() - lgamma_sum;
  };

  Eigen::VectorXd mu;
  double ll = evaluate(beta, mu);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd grad = d.x.transpose() * (d.y - mu);
    const bool small_grad = grad.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance;
    const bool small_change =
        std::isfinite(previous) &&
        std::fabs(ll - previous) <= opt.relative_tolerance * std::fabs(ll);
    res.information = d.x.transpose() * mu.asDiagonal() * d.x;
    if (small_grad && (small_change || iter == 0)) {
      // One more full step; near the optimum it is essentially free and
      // takes the estimate to working precision.
      Eigen::LDLT<Eigen::MatrixXd> ldlt(res.information);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Eigen::VectorXd polish_mu;
        const Eigen::VectorXd polish = beta + ldlt.solve(grad);
        const double polish_ll = evaluate(polish, polish_mu);
        if (polish_ll >= ll - 1e-12 * std::fabs(ll)) {
          beta = polish;
          mu = polish_mu;
          ll = polish_ll;
          res.information = d.x.transpose() * mu.asDiagonal() * d.x;
        }
      }
      res.converged = true;
      res.iterations = iter;
      break;
    }
    if (iter >= opt.max_iterations) {
      res.iterations = iter;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(res.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      res.iterations = iter;
      break;
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd trial_mu;
    Eigen::VectorXd trial = beta + step;
    double trial_ll = evaluate(trial, trial_mu);
    while (!(trial_ll >= ll - 1e-12 * std::fabs(ll)) && t > 1e-10) {
      t *= 0.5;
      trial = beta + t * step;
      trial_ll = evaluate(trial, trial_mu);
    }
    previous = ll;
    beta = trial;
    mu = trial_mu;
    ll = trial_ll;
  }
  res.beta = beta;
  res.log_likelihood = ll;
  return res;
}

}  // namespace detail

/// Maximum-likelihood Poisson regression of errors on the fixed-effect terms
/// of `spec`, with offset log(ref_words).
inline FittedGLM fit_glm(const Corpus &corpus, const ModelSpec &spec,
                         const GlmOptions &options = {}) {
  const Design d = build_design(corpus, spec);
  check_full_rank(d);
  auto res = detail::poisson_newton(d, options);
  std::vector<double> last(res.beta.data(), res.beta.data() + res.beta.size());
  if (!res.converged)
    throw ConvergenceError("Poisson regression did not reach gradient "
                           "tolerance within " +
                               std::to_string(options.max_iterations) +
                               " iterations",
                           last);
  FittedGLM fit;
  fit.spec = spec;
  fit.factor = corpus.factor;
  fit.names = d.names;
  fit.level_column = d.level_column;
  fit.coefficients = res.beta;
  const auto p = d.cols();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(res.information);
  fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  fit.log_likelihood = poisson_log_likelihood(d, res.beta);
  fit.iterations = res.iterations;
  fit.converged = true;
  fit.corpus_fingerprint = corpus.fingerprint();
  fit.observations = corpus.utterances.size();
  return fit;
}

namespace detail {

inline Design design_for(const FittedGLM &fit, const Corpus &corpus) {
  const Design d = build_design(corpus, fit.spec);
  if (d.cols() != fit.coefficients.size() || d.names != fit.names)
    throw ModelError("fitted model does not match corpus: expected " +
                     std::to_string(fit.coefficients.size()) +
                     " coefficients, design has " + std::to_string(d.cols()));
  return d;
}

}  // namespace detail

/// Exact Poisson log-likelihood of `fit` evaluated on `corpus`.
inline double log_likelihood(const FittedGLM &fit, const Corpus &corpus) {
  return poisson_log_likelihood(detail::design_for(fit, corpus),
                                fit.coefficients);
}

/// Pearson chi-square over residual degrees of freedom. Values well above 1
/// indicate overdispersion relative to the Poisson model.
inline double dispersion(const FittedGLM &fit, const Corpus &corpus) {
  const Design d = detail::design_for(fit, corpus);
  const auto dof = d.rows() - d.cols();
  if (dof <= 0) throw ModelError("no residual degrees of freedom");
  const Eigen::VectorXd mu =
      (d.offset + d.x * fit.coefficients).array().exp().matrix();
  double pearson = 0.0;
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    if (!(mu[r] > 0.0))
      throw ModelError("zero fitted rate for utterance '" +
                       corpus.utterances[d.row_source[r]].id + "'");
    const double resid = d.y[r] - mu[r];
    pearson += resid * resid / mu[r];
  }
  return pearson / static_cast<double>(dof);
}

}  // namespace werfair

#endif  // WERFAIR_GLM_HPP_
