// include/werfair/inference.hpp

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

#ifndef WERFAIR_INFERENCE_HPP_
#define WERFAIR_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "werfair/dataset.hpp"
#include "werfair/errors.hpp"
#include "werfair/glm.hpp"
#include "werfair/glmm.hpp"
#include "werfair/parallel.hpp"
#include "werfair/random.hpp"

namespace werfair {

enum class RatioMethod { BootstrapPercentile, WaldLogScale };

inline const char *to_string(RatioMethod m) {
  return m == RatioMethod::BootstrapPercentile ? "bootstrap-percentile"
                                               : "wald-log-scale";
}

/// WER ratio of a case level over a control level with a confidence interval.
struct RatioEstimate {
  double ratio = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double level = 0.95;
  RatioMethod method = RatioMethod::WaldLogScale;
  // Bootstrap only: replicates drawn, degenerate resamples redrawn, and
  // whether the point estimate fell outside the percentile interval.
  std::size_t replicates = 0;
  std::size_t redraws = 0;
  bool point_outside_interval = false;

  /// The interval excludes a ratio of 1.
  bool significant() const { return ci_low > 1.0 || ci_high < 1.0; }
};

struct TestResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  bool significant_at_05 = false;
};

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
  if (df <= 0.0) return x > 0.0 ? 0.0 : 1.0;
  if (!(x > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Two-sided standard normal critical value for a confidence level.
inline double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ModelError("confidence level must be in (0, 1)");
  boost::math::normal_distribution<double> normal;
  return boost::math::quantile(normal, 0.5 + 0.5 * level);
}

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  unsigned threads = 1;
};

namespace detail {

struct GroupCounts {
  std::vector<std::int64_t> errors;
  std::vector<std::int64_t> words;
  std::int64_t total_errors = 0;
  std::int64_t total_words = 0;
};

inline GroupCounts group_counts(const Corpus &corpus, std::size_t level) {
  GroupCounts g;
  for (const auto &u : corpus.utterances) {
    if (u.level != level) continue;
    g.errors.push_back(u.errors);
    g.words.push_back(u.ref_words);
    g.total_errors += u.errors;
    g.total_words += u.ref_words;
  }
  return g;
}

// Sum of errors and words over one resample with replacement.
inline std::pair<std::int64_t, std::int64_t> resample_sums(
    const GroupCounts &g, RandomStream &rng) {
  const std::uint64_t n = g.errors.size();
  std::int64_t e = 0, w = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t k = rng.bounded(n);
    e += g.errors[k];
    w += g.words[k];
  }
  return {e, w};
}

// Index of the lower percentile order statistic; the upper one is its mirror
// image, so swapping case and control exactly inverts the interval.
inline std::size_t percentile_rank(std::size_t replicates, double level) {
  const double alpha = 1.0 - level;
  const auto k = static_cast<std::size_t>(
      std::floor(0.5 * alpha * static_cast<double>(replicates + 1)));
  return std::clamp<std::size_t>(k, 1, replicates);
}

}  // namespace detail

/// Ratio of empirical WERs with a percentile bootstrap interval. Utterances
/// are resampled with replacement independently within each group; each
/// (replicate, level) pair has its own random stream.
inline RatioEstimate baseline_ratio(const Corpus &corpus,
                                    std::size_t case_level,
                                    std::size_t control_level,
                                    const BootstrapOptions &options = {}) {
  if (case_level >= corpus.factor.size() || control_level >= corpus.factor.size())
    throw UnknownGroupError("case or control level out of range");
  if (options.replicates < 100)
    throw InputError("bootstrap needs at least 100 replicates");
  const auto case_g = detail::group_counts(corpus, case_level);
  const auto ctrl_g = detail::group_counts(corpus, control_level);
  if (case_g.errors.empty() || ctrl_g.errors.empty())
    throw InputError("case or control level has no utterances");
  if (ctrl_g.total_errors == 0)
    throw InfiniteRatioError("control group '" +
                             corpus.factor.levels[control_level] +
                             "' has zero errors; WER ratio is infinite");
  auto wer_ratio = [](std::int64_t ec, std::int64_t wc, std::int64_t eo,
                      std::int64_t wo) {
    return (static_cast<double>(ec) / static_cast<double>(wc)) /
           (static_cast<double>(eo) / static_cast<double>(wo));
  };

  RatioEstimate est;
  est.method = RatioMethod::BootstrapPercentile;
  est.level = options.level;
  est.replicates = options.replicates;
  est.ratio = wer_ratio(case_g.total_errors, case_g.total_words,
                        ctrl_g.total_errors, ctrl_g.total_words);

  const RandomStream master(options.seed);
  std::vector<double> ratios(options.replicates);
  std::vector<std::size_t> redraws(options.replicates, 0);
  parallel_for(options.replicates, options.threads, [&](std::size_t rep) {
    const RandomStream stream = master.split(rep);
    RandomStream case_rng = stream.split(case_level);
    RandomStream ctrl_rng = stream.split(control_level);
    for (;;) {
      const auto [ec, wc] = detail::resample_sums(case_g, case_rng);
      const auto [eo, wo] = detail::resample_sums(ctrl_g, ctrl_rng);
      const double r = wer_ratio(ec, wc, eo, wo);
      if (wc > 0 && wo > 0 && !std::isnan(r)) {
        ratios[rep] = r;
        return;
      }
      ++redraws[rep];
    }
  });
  for (auto r : redraws) est.redraws += r;

  std::sort(ratios.begin(), ratios.end());
  const std::size_t k = detail::percentile_rank(options.replicates, options.level);
  est.ci_low = ratios[k - 1];
  est.ci_high = ratios[options.replicates - k];
  est.point_outside_interval = est.ratio < est.ci_low || est.ratio > est.ci_high;
  return est;
}

namespace detail {

inline RatioEstimate wald_ratio(const GroupFactor &factor,
                                const std::vector<int> &level_column,
                                const Eigen::VectorXd &coefficients,
                                const Eigen::MatrixXd &covariance,
                                bool converged, std::size_t case_level,
                                std::size_t control_level, double level) {
  if (!converged) throw ModelError("model fit did not converge");
  if (case_level >= factor.size() || control_level >= factor.size())
    throw UnknownGroupError("case or control level out of range");
  const bool has_factor = std::any_of(level_column.begin(), level_column.end(),
                                      [](int c) { return c >= 0; });
  if (!has_factor)
    throw ModelError("model does not contain factor '" + factor.name + "'");
  Eigen::VectorXd contrast = Eigen::VectorXd::Zero(coefficients.size());
  if (level_column[case_level] >= 0) contrast[level_column[case_level]] += 1.0;
  if (level_column[control_level] >= 0)
    contrast[level_column[control_level]] -= 1.0;
  const double diff = contrast.dot(coefficients);
  const double var = std::max(0.0, contrast.dot(covariance * contrast));
  const double half = normal_critical_value(level) * std::sqrt(var);
  RatioEstimate est;
  est.method = RatioMethod::WaldLogScale;
  est.level = level;
  est.ratio = std::exp(diff);
  est.ci_low = std::exp(diff - half);
  est.ci_high = std::exp(diff + half);
  return est;
}

}  // namespace detail

/// exp(mu_case - mu_control) with a Wald interval on the log scale.
inline RatioEstimate model_ratio(const FittedGLM &fit, std::size_t case_level,
                                 std::size_t control_level,
                                 double level = 0.95) {
  return detail::wald_ratio(fit.factor, fit.level_column, fit.coefficients,
                            fit.covariance, fit.converged, case_level,
                            control_level, level);
}

inline RatioEstimate model_ratio(const FittedGLMM &fit, std::size_t case_level,
                                 std::size_t control_level,
                                 double level = 0.95) {
  return detail::wald_ratio(fit.factor, fit.level_column,
                            fit.fixed_coefficients, fit.fixed_covariance,
                            fit.converged, case_level, control_level, level);
}

namespace detail {

inline TestResult likelihood_ratio(double ll_full, double ll_reduced,
                                   std::size_t df) {
  TestResult t;
  t.statistic = std::max(0.0, 2.0 * (ll_full - ll_reduced));
  t.df = df;
  t.p_value = df == 0 ? 1.0 : chi_square_sf(t.statistic, static_cast<double>(df));
  t.significant_at_05 = t.p_value < 0.05;
  return t;
}

inline void check_nested(const ModelSpec &full, const ModelSpec &reduced,
                         std::uint64_t full_fp, std::uint64_t reduced_fp,
                         std::size_t full_count, std::size_t reduced_count) {
  if (full_fp != reduced_fp)
    throw ModelError("models were fitted on different corpora");
  if (!reduced.nested_in(full) || reduced_count > full_count)
    throw ModelError("reduced model is not nested in the full model");
}

}  // namespace detail

/// Likelihood ratio test of a reduced model against a full model fitted on
/// the same corpus.
inline TestResult lrt(const FittedGLM &full, const FittedGLM &reduced) {
  detail::check_nested(full.spec, reduced.spec, full.corpus_fingerprint,
                       reduced.corpus_fingerprint, full.parameter_count(),
                       reduced.parameter_count());
  return detail::likelihood_ratio(full.log_likelihood, reduced.log_likelihood,
                                  full.parameter_count() -
                                      reduced.parameter_count());
}

inline TestResult lrt(const FittedGLMM &full, const FittedGLMM &reduced) {
  if (full.spec.grouping != reduced.spec.grouping)
    throw ModelError("mixed models have different random-effect structure");
  detail::check_nested(full.spec.base, reduced.spec.base,
                       full.corpus_fingerprint, reduced.corpus_fingerprint,
                       full.parameter_count(), reduced.parameter_count());
  return detail::likelihood_ratio(full.log_marginal_likelihood,
                                  reduced.log_marginal_likelihood,
                                  full.parameter_count() -
                                      reduced.parameter_count());
}

}  // namespace werfair

#endif  // WERFAIR_INFERENCE_HPP_
