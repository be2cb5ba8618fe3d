// include/werfair/glmm.hpp

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

#ifndef WERFAIR_GLMM_HPP_
#define WERFAIR_GLMM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "werfair/dataset.hpp"
#include "werfair/design.hpp"
#include "werfair/errors.hpp"
#include "werfair/glm.hpp"
#include "werfair/optim.hpp"
#include "werfair/parallel.hpp"
#include "werfair/quadrature.hpp"

// Mixed-effects Poisson regression with one Gaussian random intercept per
// speaker:
//
//   r_i ~ N(0, sigma^2),  C_ij | r_i ~ Poisson(N_ij exp(x_ij' beta + r_i)).
//
// The random intercept enters every utterance of a speaker identically, so a
// speaker's joint log-density in r depends on the data only through
//   Y = sum_j C_ij,  M = sum_j N_ij exp(x_ij' beta),
//   K = sum_j C_ij log(N_ij exp(x_ij' beta)) - log(C_ij!),
// namely h(r) = K + Y r - M e^r - r^2 / (2 sigma^2) - log(sigma) - log(2 pi)/2.
// The marginal likelihood of a speaker is the integral of exp(h), evaluated
// with adaptive Gauss-Hermite quadrature around the mode of h.

namespace werfair {

enum class SigmaScale { Log, Linear };

struct MixedModelSpec {
  ModelSpec base;
  // Only per-speaker random intercepts are supported.
  std::string grouping = "speaker";

  friend bool operator==(const MixedModelSpec &, const MixedModelSpec &) =
      default;
};

struct GlmmOptions {
  int nodes = 15;
  int max_evaluations = 200;
  double gradient_tolerance = 1e-6;
  // sigma below this is reported as the boundary estimate sigma = 0.
  double sigma_floor = 1e-6;
  SigmaScale sigma_scale = SigmaScale::Log;
  int inner_max_iterations = 100;
  unsigned threads = 1;
  GlmOptions glm;
};

/// Sufficient statistics of one speaker block at fixed beta.
struct BlockStats {
  double errors = 0.0;     // Y
  double expected = 0.0;   // M
  double constant = 0.0;   // K
};

/// Marginal log-likelihood of one block and the scalars needed for its
/// gradient: d/dbeta = sum_j C_j x_j + beta_coef * sum_j mu_j x_j, and the
/// derivative with respect to log(sigma).
struct BlockEval {
  double loglik = 0.0;
  double mode = 0.0;
  double beta_coef = -1.0;
  double dlog_sigma = 0.0;
};

namespace detail {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// Conditional mode of the random intercept: root of
/// Y - M e^r - r / sigma^2 (strictly decreasing and concave in r).
inline double block_mode(double y, double m, double sigma, int max_iterations) {
  const double prec = 1.0 / (sigma * sigma);
  double r = 0.0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const double er = std::exp(r);
    const double f = y - m * er - r * prec;
    const double fp = -m * er - prec;
    const double step = std::clamp(-f / fp, -2.0, 2.0);
    r += step;
    if (std::fabs(step) <= 1e-14 * std::max(1.0, std::fabs(r))) return r;
  }
  const double f = y - m * std::exp(r) - r * prec;
  if (std::fabs(f) <= 1e-10) return r;
  throw ConvergenceError("conditional mode search exceeded " +
                             std::to_string(max_iterations) + " iterations",
                         {r});
}

}  // namespace detail

/// Adaptive Gauss-Hermite approximation of log integral exp(h(r)) dr for one
/// speaker block. sigma == 0 gives the plain Poisson log-likelihood; a
/// one-node rule gives the Laplace approximation.
inline BlockEval evaluate_block(const BlockStats &b, double sigma,
                                const GaussHermiteRule &rule,
                                int inner_max_iterations = 100) {
  BlockEval out;
  if (sigma <= 0.0) {
    out.loglik = b.constant - b.expected;
    return out;
  }
  const double y = b.errors, m = b.expected;
  const double s2 = sigma * sigma;
  const double prec = 1.0 / s2;
  const double r = detail::block_mode(y, m, sigma, inner_max_iterations);
  const double er = std::exp(r);
  const double curv = m * er + prec;  // -h''(r)
  const double scale = 1.0 / std::sqrt(curv);
  const double spread = M_SQRT2 * scale;
  const double h_mode = b.constant + y * r - m * er - 0.5 * r * r * prec -
                        std::log(sigma) - detail::kHalfLog2Pi;

  const std::size_t n = rule.size();
  double terms_max = -std::numeric_limits<double>::infinity();
  // Small fixed-size buffers cover the usual node counts without allocation.
  double stack_terms[64];
  std::vector<double> heap_terms;
  double *terms = stack_terms;
  if (n > 64) {
    heap_terms.resize(n);
    terms = heap_terms.data();
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double z = rule.nodes[k];
    const double u = spread * z;
    const double a = r + u;
    const double delta =
        y * u - m * er * std::expm1(u) - 0.5 * (a * a - r * r) * prec;
    terms[k] = rule.log_weights[k] + z * z + delta;
    terms_max = std::max(terms_max, terms[k]);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    terms[k] = std::exp(terms[k] - terms_max);
    total += terms[k];
  }
  out.loglik = h_mode + std::log(spread) + terms_max + std::log(total);
  out.mode = r;

  double e_exp = 0.0, e_hp = 0.0, e_hpz = 0.0, e_a2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = terms[k] / total;
    const double z = rule.nodes[k];
    const double u = spread * z;
    const double a = r + u;
    const double ea = er * std::exp(u);
    const double hp = y - m * ea - a * prec;
    e_exp += w * ea;
    e_hp += w * hp;
    e_hpz += w * hp * z;
    e_a2 += w * a * a;
  }
  // beta: the mode and curvature move with M; implicit differentiation of
  // h'(mode) = 0 gives d mode = -e^r / curv per unit of M'.
  const double dmode_b = -er / curv;
  const double dcurv_b = er * (1.0 + m * dmode_b);
  const double dlogs_b = -0.5 * dcurv_b / curv;
  out.beta_coef = dlogs_b - e_exp + dmode_b * e_hp +
                  M_SQRT2 * scale * dlogs_b * e_hpz;
  // log(sigma)
  const double dmode_t = 2.0 * r * prec / curv;
  const double dcurv_t = -2.0 * prec + m * er * dmode_t;
  const double dlogs_t = -0.5 * dcurv_t / curv;
  out.dlog_sigma = dlogs_t + e_a2 * prec - 1.0 + e_hp * dmode_t +
                   M_SQRT2 * scale * dlogs_t * e_hpz;
  return out;
}

/// One speaker's utterances: error counts, reference lengths and the fixed
/// part of the linear predictor (without the log-length offset).
struct SpeakerBlock {
  std::vector<std::int64_t> errors;
  std::vector<std::int64_t> ref_words;
  std::vector<double> linear_predictor;
};

inline BlockStats block_stats(const SpeakerBlock &block) {
  if (block.errors.size() != block.ref_words.size() ||
      block.errors.size() != block.linear_predictor.size())
    throw ModelError("speaker block fields have different lengths");
  BlockStats s;
  for (std::size_t j = 0; j < block.errors.size(); ++j) {
    const double y = static_cast<double>(block.errors[j]);
    const double eta = std::log(static_cast<double>(block.ref_words[j])) +
                       block.linear_predictor[j];
    s.errors += y;
    s.expected += std::exp(eta);
    s.constant += y * eta - std::lgamma(y + 1.0);
  }
  return s;
}

/// log of the integral over r of prod_j Poisson(C_j | N_j e^{eta_j + r})
/// times the N(0, sigma^2) density of r, by adaptive Gauss-Hermite
/// quadrature with `nodes` points.
inline double speaker_marginal_loglik(const SpeakerBlock &block, double sigma,
                                      int nodes = 15) {
  if (sigma < 0.0) throw ModelError("sigma must be non-negative");
  return evaluate_block(block_stats(block), sigma, gauss_hermite(nodes)).loglik;
}

/// Marginal log-likelihood of a design over (beta, sigma parameter), with
/// analytic gradient. The last parameter is log(sigma) or sigma depending on
/// the scale.
class GlmmObjective {
 public:
  GlmmObjective(const Design &design, int nodes, SigmaScale scale,
                unsigned threads = 1, int inner_max_iterations = 100)
      : design_(design),
        rule_(gauss_hermite(nodes)),
        scale_(scale),
        threads_(threads),
        inner_max_iterations_(inner_max_iterations) {
    log_factorial_.resize(design.rows());
    for (Eigen::Index r = 0; r < design.rows(); ++r)
      log_factorial_[r] = std::lgamma(design.y[r] + 1.0);
  }

  Eigen::Index size() const { return design_.cols() + 1; }

  double sigma_of(double param) const {
    return scale_ == SigmaScale::Log ? std::exp(param) : param;
  }
  double param_of(double sigma) const {
    return scale_ == SigmaScale::Log ? std::log(sigma) : sigma;
  }

  /// Per-block statistics at beta, in block order.
  std::vector<BlockStats> stats(const Eigen::VectorXd &beta,
                                Eigen::VectorXd *mu_out = nullptr) const {
    const Eigen::VectorXd eta = design_.offset + design_.x * beta;
    Eigen::VectorXd mu = eta.array().exp().matrix();
    std::vector<BlockStats> out(design_.blocks());
    for (std::size_t b = 0; b < design_.blocks(); ++b) {
      BlockStats s;
      for (std::size_t r = design_.block_begin[b];
           r < design_.block_begin[b + 1]; ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        s.errors += design_.y[i];
        s.expected += mu[i];
        s.constant += design_.y[i] * eta[i] - log_factorial_[r];
      }
      out[b] = s;
    }
    if (mu_out) *mu_out = std::move(mu);
    return out;
  }

  std::vector<BlockEval> blocks(const Eigen::VectorXd &params,
                                Eigen::VectorXd *mu_out = nullptr) const {
    const Eigen::Index p = design_.cols();
    const double sigma = sigma_of(params[p]);
    const auto st = stats(params.head(p), mu_out);
    std::vector<BlockEval> evals(st.size());
    const std::size_t chunks = threads_ <= 1 ? 1 : threads_ * 4;
    const std::size_t per_chunk = (st.size() + chunks - 1) / chunks;
    parallel_for(chunks, threads_, [&](std::size_t c) {
      const std::size_t lo = c * per_chunk;
      const std::size_t hi = std::min(st.size(), lo + per_chunk);
      for (std::size_t b = lo; b < hi; ++b)
        evals[b] = evaluate_block(st[b], sigma, rule_, inner_max_iterations_);
    });
    return evals;
  }

  /// Marginal log-likelihood; fills `grad` (same layout as params) if given.
  double log_likelihood(const Eigen::VectorXd &params,
                        Eigen::VectorXd *grad = nullptr) const {
    const Eigen::Index p = design_.cols();
    Eigen::VectorXd mu;
    const auto evals = blocks(params, grad ? &mu : nullptr);
    double ll = 0.0;
    for (const auto &e : evals) ll += e.loglik;
    if (grad) {
      Eigen::VectorXd v = design_.y;
      double dlog_sigma = 0.0;
      for (std::size_t b = 0; b < evals.size(); ++b) {
        for (std::size_t r = design_.block_begin[b];
             r < design_.block_begin[b + 1]; ++r) {
          const auto i = static_cast<Eigen::Index>(r);
          v[i] += evals[b].beta_coef * mu[i];
        }
        dlog_sigma += evals[b].dlog_sigma;
      }
      grad->resize(p + 1);
      grad->head(p) = design_.x.transpose() * v;
      const double sigma = sigma_of(params[p]);
      (*grad)[p] =
          scale_ == SigmaScale::Log ? dlog_sigma : dlog_sigma / sigma;
    }
    return ll;
  }

 private:
  const Design &design_;
  const GaussHermiteRule &rule_;
  SigmaScale scale_;
  unsigned threads_;
  int inner_max_iterations_;
  std::vector<double> log_factorial_;
};

struct FittedGLMM {
  MixedModelSpec spec;
  GroupFactor factor;
  std::vector<std::string> names;
  std::vector<int> level_column;
  Eigen::VectorXd fixed_coefficients;
  double sigma = 0.0;
  double log_marginal_likelihood = 0.0;
  Eigen::MatrixXd fixed_covariance;
  std::map<std::string, double> conditional_modes;
  int quadrature_nodes = 15;
  bool converged = false;
  // sigma estimate on the boundary (reported as exactly 0).
  bool boundary = false;
  int evaluations = 0;
  std::uint64_t corpus_fingerprint = 0;
  std::size_t observations = 0;

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(fixed_coefficients.size());
  }
};

namespace detail {

inline std::map<std::string, double> modes_by_speaker(
    const Design &d, const std::vector<BlockEval> &evals) {
  std::map<std::string, double> modes;
  for (std::size_t b = 0; b < d.blocks(); ++b)
    modes[d.block_speaker[b]] = evals[b].mode;
  return modes;
}

inline std::map<std::string, double> zero_modes(const Design &d) {
  std::map<std::string, double> modes;
  for (const auto &s : d.block_speaker) modes[s] = 0.0;
  return modes;
}

}  // namespace detail

/// Marginal maximum likelihood fit of (beta, sigma) by quasi-Newton
/// optimization, warm-started from the fixed-effects fit.
inline FittedGLMM fit_glmm(const Corpus &corpus, const MixedModelSpec &spec,
                           const GlmmOptions &options = {}) {
  if (spec.grouping != "speaker")
    throw ModelError("unsupported grouping '" + spec.grouping + "'");
  if (spec.base.include_factor && !corpus.speaker_level_factor())
    throw SpeakerGroupConflictError(
        "factor '" + corpus.factor.name +
        "' varies within a speaker; the mixed model needs a speaker-level "
        "factor");
  const Design d = build_design(corpus, spec.base);
  if (d.blocks() < 2)
    throw ModelError("mixed model needs at least 2 speakers");
  check_full_rank(d);

  const FittedGLM glm = fit_glm(corpus, spec.base, options.glm);
  const Eigen::Index p = d.cols();

  FittedGLMM fit;
  fit.spec = spec;
  fit.factor = corpus.factor;
  fit.names = d.names;
  fit.level_column = d.level_column;
  fit.quadrature_nodes = options.nodes;
  fit.corpus_fingerprint = corpus.fingerprint();
  fit.observations = corpus.utterances.size();

  GlmmObjective objective(d, options.nodes, options.sigma_scale,
                          options.threads, options.inner_max_iterations);

  double phi = 1.0;
  if (d.rows() > p) phi = dispersion(glm, corpus);
  const double sigma0 = std::max(std::sqrt(std::max(phi - 1.0, 0.0)), 0.05);

  Eigen::VectorXd x0(p + 1);
  x0.head(p) = glm.coefficients;
  x0[p] = objective.param_of(sigma0);
  Eigen::VectorXd lower =
      Eigen::VectorXd::Constant(p + 1, -std::numeric_limits<double>::infinity());
  lower[p] = objective.param_of(options.sigma_floor);

  int evaluations = 0;
  Objective negative = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    ++evaluations;
    const double ll = objective.log_likelihood(x, &g);
    g = -g;
    return -ll;
  };

  // Initial inverse Hessian: fixed-effects covariance for beta, a one-sided
  // difference of the gradient for the variance parameter.
  Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(p + 1, p + 1);
  h0.topLeftCorner(p, p) = glm.covariance;
  {
    Eigen::VectorXd g0, g1;
    const double f0 = negative(x0, g0);
    const double step = 1e-3 * std::max(1.0, std::fabs(x0[p]));
    Eigen::VectorXd x1 = x0;
    x1[p] += step;
    const double f1 = negative(x1, g1);
    const double curvature = (g1[p] - g0[p]) / step;
    h0(p, p) = std::isfinite(f0) && std::isfinite(f1) && curvature > 0.0
                   ? 1.0 / curvature
                   : 1.0;
  }

  BfgsOptions bfgs;
  bfgs.max_evaluations = options.max_evaluations;
  bfgs.gradient_tolerance = options.gradient_tolerance;
  const BfgsResult res = minimize_bfgs(negative, x0, lower, h0, bfgs);
  fit.evaluations = evaluations;

  // One-sided score for sigma^2 at the fixed-effects fit; non-positive means
  // sigma = 0 is a local maximum of the marginal likelihood.
  double score = 0.0;
  for (const auto &s : objective.stats(glm.coefficients)) {
    const double resid = s.errors - s.expected;
    score += 0.5 * (resid * resid - s.expected);
  }

  const double interior_ll = -res.value;
  const double sigma_hat = objective.sigma_of(res.x[p]);
  const bool at_floor = sigma_hat <= options.sigma_floor * (1.0 + 1e-9);
  const bool no_gain = !(interior_ll > glm.log_likelihood + 1e-8);
  bool boundary = at_floor || !(interior_ll >= glm.log_likelihood) ||
                  (score <= 0.0 && no_gain);
  if (!res.converged && score <= 0.0 && no_gain) boundary = true;
  if (!res.converged && !boundary)
    throw ConvergenceError(
        "mixed model optimizer stopped after " +
            std::to_string(res.evaluations) + " evaluations",
        std::vector<double>(res.x.data(), res.x.data() + res.x.size()));

  if (boundary) {
    fit.boundary = true;
    fit.sigma = 0.0;
    fit.fixed_coefficients = glm.coefficients;
    fit.log_marginal_likelihood = glm.log_likelihood;
    fit.fixed_covariance = glm.covariance;
    fit.conditional_modes = detail::zero_modes(d);
    fit.converged = true;
    return fit;
  }

  // Observed information by central differences of the analytic gradient.
  const Eigen::Index q = p + 1;
  Eigen::MatrixXd hess(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double step = 1e-4 * std::max(1.0, std::fabs(res.x[j]));
    Eigen::VectorXd up = res.x, down = res.x, gu, gd;
    up[j] += step;
    down[j] -= step;
    negative(up, gu);
    negative(down, gd);
    hess.col(j) = (gu - gd) / (2.0 * step);
  }
  hess = (0.5 * (hess + hess.transpose())).eval();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw ConvergenceError(
        "observed information of the mixed model is not positive definite",
        std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(q, q));

  fit.fixed_coefficients = res.x.head(p);
  fit.sigma = sigma_hat;
  fit.log_marginal_likelihood = interior_ll;
  fit.fixed_covariance = cov.topLeftCorner(p, p);
  fit.fixed_covariance =
      (0.5 * (fit.fixed_covariance + fit.fixed_covariance.transpose())).eval();
  fit.conditional_modes = detail::modes_by_speaker(d, objective.blocks(res.x));
  fit.converged = true;
  return fit;
}

namespace detail {

inline Design design_for(const FittedGLMM &fit, const Corpus &corpus) {
  const Design d = build_design(corpus, fit.spec.base);
  if (d.cols() != fit.fixed_coefficients.size() || d.names != fit.names)
    throw ModelError("fitted mixed model does not match corpus");
  return d;
}

inline Eigen::VectorXd params_of(const FittedGLMM &fit) {
  const Eigen::Index p = fit.fixed_coefficients.size();
  Eigen::VectorXd params(p + 1);
  params.head(p) = fit.fixed_coefficients;
  params[p] = fit.sigma;
  return params;
}

}  // namespace detail

/// Empirical Bayes modes of the speaker intercepts at the fitted parameters.
inline std::map<std::string, double> conditional_modes(const FittedGLMM &fit,
                                                       const Corpus &corpus) {
  const Design d = detail::design_for(fit, corpus);
  if (fit.sigma <= 0.0) return detail::zero_modes(d);
  GlmmObjective objective(d, fit.quadrature_nodes, SigmaScale::Linear);
  return detail::modes_by_speaker(d, objective.blocks(detail::params_of(fit)));
}

/// Marginal log-likelihood of `fit` re-evaluated on `corpus`.
inline double marginal_log_likelihood(const FittedGLMM &fit,
                                      const Corpus &corpus) {
  const Design d = detail::design_for(fit, corpus);
  GlmmObjective objective(d, fit.quadrature_nodes, SigmaScale::Linear);
  return objective.log_likelihood(detail::params_of(fit));
}

}  // namespace werfair

#endif  // WERFAIR_GLMM_HPP_
