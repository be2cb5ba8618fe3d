// include/werfair/report.hpp

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

#ifndef WERFAIR_REPORT_HPP_
#define WERFAIR_REPORT_HPP_

#include <cmath>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "werfair/dataset.hpp"
#include "werfair/glm.hpp"
#include "werfair/glmm.hpp"
#include "werfair/inference.hpp"
#include "werfair/simulation.hpp"

namespace werfair {

inline constexpr const char *kVersion = "0.1.0";
inline constexpr const char *kAnalysisSchema = "werfair.analysis/1";
inline constexpr const char *kSimulationSchema = "werfair.simulation/1";
inline constexpr const char *kWerSchema = "werfair.wer/1";

using Json = nlohmann::ordered_json;

namespace detail {

// JSON has no infinities; they are written as null.
inline Json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace detail

inline Json to_json(const LevelSummary &s) {
  return Json{{"level", s.label},         {"utterances", s.utterances},
              {"speakers", s.speakers},   {"words", s.words},
              {"errors", s.errors},       {"wer", detail::number(s.wer)}};
}

inline Json to_json(const CorpusSummary &s) {
  Json levels = Json::array();
  for (const auto &l : s.levels) levels.push_back(to_json(l));
  return Json{{"levels", levels},
              {"total", to_json(s.total)},
              {"excluded", s.excluded},
              {"insertions", s.edit_breakdown.insertions},
              {"deletions", s.edit_breakdown.deletions},
              {"substitutions", s.edit_breakdown.substitutions}};
}

inline Json to_json(const RatioEstimate &r) {
  Json j{{"ratio", detail::number(r.ratio)},
         {"ci_low", detail::number(r.ci_low)},
         {"ci_high", detail::number(r.ci_high)},
         {"level", r.level},
         {"interval", to_string(r.method)},
         {"significant", r.significant()}};
  if (r.method == RatioMethod::BootstrapPercentile) {
    j["replicates"] = r.replicates;
    j["redraws"] = r.redraws;
    j["point_outside_interval"] = r.point_outside_interval;
  }
  return j;
}

inline Json to_json(const TestResult &t) {
  return Json{{"statistic", t.statistic},
              {"df", t.df},
              {"p_value", t.p_value},
              {"significant_at_05", t.significant_at_05}};
}

namespace detail {

inline Json coefficient_table(const std::vector<std::string> &names,
                              const Eigen::VectorXd &beta,
                              const Eigen::MatrixXd &cov) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    rows.push_back(Json{{"name", names[i]},
                        {"estimate", beta[i]},
                        {"std_error", std::sqrt(std::max(0.0, cov(i, i)))}});
  return rows;
}

}  // namespace detail

inline Json to_json(const FittedGLM &fit) {
  return Json{{"log_likelihood", fit.log_likelihood},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"coefficients", detail::coefficient_table(
                                   fit.names, fit.coefficients, fit.covariance)}};
}

inline Json to_json(const FittedGLMM &fit) {
  Json modes = Json::array();
  for (const auto &[speaker, mode] : fit.conditional_modes)
    modes.push_back(Json{{"speaker", speaker}, {"mode", mode}});
  return Json{{"log_likelihood", fit.log_marginal_likelihood},
              {"sigma", fit.sigma},
              {"boundary", fit.boundary},
              {"quadrature_nodes", fit.quadrature_nodes},
              {"evaluations", fit.evaluations},
              {"converged", fit.converged},
              {"coefficients",
               detail::coefficient_table(fit.names, fit.fixed_coefficients,
                                         fit.fixed_covariance)},
              {"conditional_modes", modes}};
}

inline Json to_json(const ExperimentConfig &config) {
  if (const auto *c = std::get_if<ConfoundingConfig>(&config))
    return Json{{"n_per_group", c->n_per_group},
                {"words_per_utt", c->words_per_utt},
                {"base_rate", std::exp(c->base_mu)},
                {"theta", c->theta},
                {"p_case", c->p_case},
                {"p_control", c->p_control}};
  const auto &s = std::get<SpeakerEffectConfig>(config);
  return Json{{"n_speakers_per_group", s.n_speakers_per_group},
              {"n_per_group", s.n_per_group},
              {"words_per_utt", s.words_per_utt},
              {"base_rate", std::exp(s.base_mu)},
              {"sigma", s.sigma}};
}

/// Canonical JSON form of a simulation report. The worker count is not part
/// of the report, so the output is identical for any number of threads.
inline Json to_json(const SimReport &report, bool include_records = true) {
  Json methods = Json::array();
  for (Method m : report.options.methods) methods.push_back(to_string(m));
  Json config = to_json(report.config);
  config["methods"] = methods;
  config["bootstrap_replicates"] = report.options.bootstrap_replicates;
  config["nodes"] = report.options.nodes;
  config["level"] = report.options.level;

  Json summary = Json::object();
  for (const auto &s : report.summaries)
    summary[to_string(s.method)] = Json{{"mean_ratio", s.mean_ratio},
                                        {"fp_rate", s.fp_rate},
                                        {"successes", s.successes},
                                        {"failures", s.failures}};

  Json j{{"schema", kSimulationSchema},
         {"tool_version", kVersion},
         {"experiment", experiment_name(report.config)},
         {"seed", report.seed},
         {"replications", report.replications},
         {"config", config},
         {"summary", summary}};

  const MethodSummary *model = nullptr;
  for (const auto &s : report.summaries)
    if (s.method != Method::Baseline) model = &s;
  if (const auto *b = report.summary(Method::Baseline)) {
    j["mean_ratio_baseline"] = b->mean_ratio;
    j["fp_rate_baseline"] = b->fp_rate;
  }
  if (model) {
    j["model_method"] = to_string(model->method);
    j["mean_ratio_model"] = model->mean_ratio;
    j["fp_rate_model"] = model->fp_rate;
  }

  if (include_records) {
    Json records = Json::array();
    for (const auto &r : report.records) {
      Json row{{"replication", r.replication},
               {"method", to_string(r.method)},
               {"failed", r.failed}};
      if (r.failed) {
        row["error"] = r.error;
      } else {
        row["ratio"] = detail::number(r.estimate.ratio);
        row["ci_low"] = detail::number(r.estimate.ci_low);
        row["ci_high"] = detail::number(r.estimate.ci_high);
        row["significant"] = r.estimate.significant();
      }
      if (r.sigma) row["sigma"] = *r.sigma;
      records.push_back(row);
    }
    j["records"] = records;
  }
  return j;
}

}  // namespace werfair

#endif  // WERFAIR_REPORT_HPP_
