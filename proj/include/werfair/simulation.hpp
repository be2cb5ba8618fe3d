// include/werfair/simulation.hpp

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

#ifndef WERFAIR_SIMULATION_HPP_
#define WERFAIR_SIMULATION_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "werfair/dataset.hpp"
#include "werfair/errors.hpp"
#include "werfair/glm.hpp"
#include "werfair/glmm.hpp"
#include "werfair/inference.hpp"
#include "werfair/parallel.hpp"
#include "werfair/random.hpp"

namespace werfair {

/// Independent utterances whose error rate is raised by exp(theta) whenever
/// a Bernoulli(p_group) confounder is present.
struct ConfoundingConfig {
  std::size_t n_per_group = 5000;
  std::int64_t words_per_utt = 10;
  double base_mu = std::log(0.05);
  double theta = 0.1;
  double p_case = 0.5;
  double p_control = 0.5;
};

/// Speakers with a N(0, sigma^2) intercept on the log error rate; every
/// speaker has n_per_group / n_speakers_per_group utterances.
struct SpeakerEffectConfig {
  std::size_t n_speakers_per_group = 100;
  std::size_t n_per_group = 5000;
  std::int64_t words_per_utt = 10;
  double base_mu = std::log(0.05);
  double sigma = 0.4;
};

using ExperimentConfig = std::variant<ConfoundingConfig, SpeakerEffectConfig>;

inline const char *experiment_name(const ExperimentConfig &config) {
  return std::holds_alternative<ConfoundingConfig>(config) ? "confounding"
                                                           : "speaker";
}

// Level order of generated corpora; control is the reference level.
inline constexpr std::size_t kCaseLevel = 0;
inline constexpr std::size_t kControlLevel = 1;

namespace detail {

inline GroupFactor case_control_factor() {
  GroupFactor f;
  f.name = "group";
  f.levels = {"case", "control"};
  f.reference_level = kControlLevel;
  return f;
}

inline std::string numbered(const char *prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

}  // namespace detail

/// Corpus with the confounder recorded as covariate "confounder". Each
/// utterance gets its own synthetic speaker.
inline Corpus gen_confounding(const ConfoundingConfig &config,
                              std::uint64_t seed) {
  if (config.n_per_group < 1) throw InputError("n_per_group must be >= 1");
  if (config.words_per_utt < 1) throw InputError("words_per_utt must be >= 1");
  for (double p : {config.p_case, config.p_control})
    if (!(p >= 0.0 && p <= 1.0))
      throw InputError("confounding probabilities must be in [0, 1]");
  Corpus corpus;
  corpus.factor = detail::case_control_factor();
  corpus.covariate_names = {"confounder"};
  corpus.utterances.reserve(2 * config.n_per_group);
  // Latent draws and counts use separate streams, so configurations that
  // share a seed also share their confounder pattern.
  const RandomStream root(seed);
  RandomStream latent = root.split(0);
  RandomStream counts = root.split(1);
  const double words = static_cast<double>(config.words_per_utt);
  for (std::size_t level : {kCaseLevel, kControlLevel}) {
    const double p = level == kCaseLevel ? config.p_case : config.p_control;
    const char *tag = level == kCaseLevel ? "case-u" : "control-u";
    for (std::size_t i = 0; i < config.n_per_group; ++i) {
      const double z = latent.bernoulli(p) ? 1.0 : 0.0;
      Utterance u;
      u.id = detail::numbered(tag, i);
      u.speaker = u.id;
      u.level = level;
      u.ref_words = config.words_per_utt;
      u.errors = counts.poisson(words * std::exp(config.base_mu + config.theta * z));
      u.covariates = {z};
      corpus.utterances.push_back(std::move(u));
    }
  }
  return corpus;
}

struct SpeakerEffectSample {
  Corpus corpus;
  // Simulated intercept of every speaker.
  std::map<std::string, double> true_effects;
};

inline SpeakerEffectSample gen_speaker_effect(const SpeakerEffectConfig &config,
                                              std::uint64_t seed) {
  if (config.n_speakers_per_group < 1)
    throw InputError("n_speakers_per_group must be >= 1");
  if (config.n_per_group % config.n_speakers_per_group != 0)
    throw InputError("n_per_group must be divisible by n_speakers_per_group");
  if (config.words_per_utt < 1) throw InputError("words_per_utt must be >= 1");
  if (!(config.sigma >= 0.0)) throw InputError("sigma must be >= 0");
  SpeakerEffectSample sample;
  Corpus &corpus = sample.corpus;
  corpus.factor = detail::case_control_factor();
  corpus.utterances.reserve(2 * config.n_per_group);
  const std::size_t per_speaker =
      config.n_per_group / config.n_speakers_per_group;
  const RandomStream root(seed);
  RandomStream latent = root.split(0);
  RandomStream counts = root.split(1);
  const double words = static_cast<double>(config.words_per_utt);
  for (std::size_t level : {kCaseLevel, kControlLevel}) {
    const char *tag = level == kCaseLevel ? "case-s" : "control-s";
    for (std::size_t s = 0; s < config.n_speakers_per_group; ++s) {
      const std::string speaker = detail::numbered(tag, s);
      const double r = config.sigma * latent.normal();
      sample.true_effects[speaker] = r;
      const double mean = words * std::exp(config.base_mu + r);
      for (std::size_t j = 0; j < per_speaker; ++j) {
        Utterance u;
        u.id = speaker + "-u" + std::to_string(j);
        u.speaker = speaker;
        u.level = level;
        u.ref_words = config.words_per_utt;
        u.errors = counts.poisson(mean);
        corpus.utterances.push_back(std::move(u));
      }
    }
  }
  return sample;
}

enum class Method { Baseline, Glm, Glmm };

inline const char *to_string(Method m) {
  switch (m) {
    case Method::Baseline: return "baseline";
    case Method::Glm: return "glm";
    case Method::Glmm: return "glmm";
  }
  return "unknown";
}

inline Method parse_method(const std::string &name) {
  if (name == "baseline") return Method::Baseline;
  if (name == "glm") return Method::Glm;
  if (name == "glmm") return Method::Glmm;
  throw InputError("unknown method '" + name + "' (baseline|glm|glmm)");
}

struct ExperimentOptions {
  std::vector<Method> methods = {Method::Baseline, Method::Glm};
  std::size_t replications = 1000;
  std::uint64_t seed = 0;
  std::size_t bootstrap_replicates = 1000;
  int nodes = 15;
  double level = 0.95;
  unsigned threads = 1;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  Method method = Method::Baseline;
  bool failed = false;
  std::string error;
  RatioEstimate estimate;
  // Mixed model only.
  std::optional<double> sigma;
};

struct MethodSummary {
  Method method = Method::Baseline;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean_ratio = 0.0;
  double fp_rate = 0.0;
};

struct SimReport {
  ExperimentConfig config;
  ExperimentOptions options;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::vector<MethodSummary> summaries;
  std::vector<ReplicationRecord> records;

  const MethodSummary *summary(Method m) const {
    for (const auto &s : summaries)
      if (s.method == m) return &s;
    return nullptr;
  }
};

namespace detail {

inline Corpus generate(const ExperimentConfig &config, std::uint64_t seed,
                       std::map<std::string, double> *truth = nullptr) {
  if (const auto *c = std::get_if<ConfoundingConfig>(&config))
    return gen_confounding(*c, seed);
  auto sample = gen_speaker_effect(std::get<SpeakerEffectConfig>(config), seed);
  if (truth) *truth = std::move(sample.true_effects);
  return std::move(sample.corpus);
}

inline ModelSpec model_spec_for(const Corpus &corpus) {
  ModelSpec spec;
  spec.covariates = corpus.covariate_names;
  return spec;
}

inline ReplicationRecord run_method(Method method, const Corpus &corpus,
                                    std::uint64_t bootstrap_seed,
                                    const ExperimentOptions &opt) {
  ReplicationRecord rec;
  rec.method = method;
  try {
    switch (method) {
      case Method::Baseline: {
        BootstrapOptions b;
        b.replicates = opt.bootstrap_replicates;
        b.seed = bootstrap_seed;
        b.level = opt.level;
        rec.estimate = baseline_ratio(corpus, kCaseLevel, kControlLevel, b);
        break;
      }
      case Method::Glm: {
        const FittedGLM fit = fit_glm(corpus, model_spec_for(corpus));
        rec.estimate = model_ratio(fit, kCaseLevel, kControlLevel, opt.level);
        break;
      }
      case Method::Glmm: {
        GlmmOptions g;
        g.nodes = opt.nodes;
        const FittedGLMM fit =
            fit_glmm(corpus, MixedModelSpec{model_spec_for(corpus)}, g);
        rec.estimate = model_ratio(fit, kCaseLevel, kControlLevel, opt.level);
        rec.sigma = fit.sigma;
        break;
      }
    }
  } catch (const Error &e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace detail

/// Repeats generate-then-analyze `replications` times. Replication i uses
/// streams derived from (seed, i) only, so the report does not depend on the
/// worker count. Per-replication fit failures are recorded, not thrown.
inline SimReport run_experiment(const ExperimentConfig &config,
                                const ExperimentOptions &options) {
  if (options.replications < 1) throw InputError("replications must be >= 1");
  if (options.methods.empty()) throw InputError("no methods selected");
  // Validate the generator settings once, up front.
  detail::generate(config, 0);

  const std::size_t m = options.methods.size();
  std::vector<ReplicationRecord> records(options.replications * m);
  const RandomStream master(options.seed);
  parallel_for(options.replications, options.threads, [&](std::size_t rep) {
    const RandomStream stream = master.split(rep);
    RandomStream data_stream = stream.split(0);
    RandomStream boot_stream = stream.split(1);
    const Corpus corpus = detail::generate(config, data_stream());
    const std::uint64_t boot_seed = boot_stream();
    for (std::size_t k = 0; k < m; ++k) {
      auto rec = detail::run_method(options.methods[k], corpus, boot_seed, options);
      rec.replication = rep;
      records[rep * m + k] = std::move(rec);
    }
  });

  SimReport report;
  report.config = config;
  report.options = options;
  report.replications = options.replications;
  report.seed = options.seed;
  for (std::size_t k = 0; k < m; ++k) {
    MethodSummary s;
    s.method = options.methods[k];
    double ratio_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t rep = 0; rep < options.replications; ++rep) {
      const auto &rec = records[rep * m + k];
      if (rec.failed) {
        ++s.failures;
        continue;
      }
      ++s.successes;
      ratio_sum += rec.estimate.ratio;
      if (rec.estimate.significant()) ++positives;
    }
    if (s.successes > 0) {
      s.mean_ratio = ratio_sum / static_cast<double>(s.successes);
      s.fp_rate =
          static_cast<double>(positives) / static_cast<double>(s.successes);
    }
    report.summaries.push_back(s);
  }
  report.records = std::move(records);
  return report;
}

}  // namespace werfair

#endif  // WERFAIR_SIMULATION_HPP_
