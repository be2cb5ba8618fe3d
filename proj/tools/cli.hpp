// tools/cli.hpp

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

#ifndef WERFAIR_TOOLS_CLI_HPP_
#define WERFAIR_TOOLS_CLI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "werfair/werfair.hpp"

namespace werfair::cli {

enum ExitCode { kOk = 0, kInputError = 2, kConvergenceError = 3, kInternalError = 4 };

inline constexpr const char *kSeedEnv = "WERFAIR_SEED";

inline std::uint64_t default_seed() {
  const char *s = std::getenv(kSeedEnv);
  if (!s || !*s) return 0;
  char *end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0')
    throw InputError(std::string(kSeedEnv) + " is not an unsigned integer: " + s);
  return v;
}

inline InputFormat parse_format(const std::string &s) {
  if (s == "auto") return InputFormat::Auto;
  if (s == "jsonl") return InputFormat::JsonLines;
  if (s == "csv") return InputFormat::Csv;
  throw InputError("unknown format '" + s + "'");
}

inline std::string fmt(const char *spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

inline void write_file(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
}

// Numbers read back from a report; null stands for an infinite value.
inline double num(const Json &j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

// ---------------------------------------------------------------- wer

struct WerArgs {
  std::string input;
  std::string format = "auto";
  std::string factor = "group";
  bool no_normalize = false;
  std::string output;
  bool json = false;
};

inline Json wer_report(const WerArgs &a) {
  LoadOptions lo;
  lo.format = parse_format(a.format);
  lo.factor_field = a.factor;
  lo.normalize = !a.no_normalize;
  lo.require_speaker_level_factor = false;
  const Corpus corpus = load_corpus(a.input, lo);
  const CorpusSummary s = summarize(corpus);
  Json excluded = Json::array();
  for (const auto &e : corpus.exclusions)
    excluded.push_back(Json{{"id", e.id}, {"line", e.line}, {"reason", e.reason}});
  return Json{{"schema", kWerSchema},
              {"tool_version", kVersion},
              {"config",
               {{"input", a.input},
                {"format", a.format},
                {"factor", a.factor},
                {"normalize", !a.no_normalize}}},
              {"corpus", to_json(s)},
              {"exclusions", excluded}};
}

inline void render_wer(const Json &r, std::ostream &out) {
  const Json &c = r["corpus"];
  const Json &t = c["total"];
  const double wer = num(t["wer"]);
  out << "%WER " << fmt("%.2f", 100.0 * wer) << " [ " << t["errors"].get<long long>()
      << " / " << t["words"].get<long long>() << ", " << c["insertions"] << " ins, "
      << c["deletions"] << " del, " << c["substitutions"] << " sub ]\n";
  out << "WER " << fmt("%.4f", wer) << "\n";
  out << "utterances " << t["utterances"] << ", speakers " << t["speakers"]
      << ", excluded " << c["excluded"] << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %10s %10s %8s\n", "level",
                "utts", "speakers", "words", "errors", "WER");
  out << line;
  for (const auto &l : c["levels"]) {
    std::snprintf(line, sizeof(line), "%-16s %8lld %8lld %10lld %10lld %8.4f\n",
                  l["level"].get<std::string>().c_str(), l["utterances"].get<long long>(),
                  l["speakers"].get<long long>(), l["words"].get<long long>(),
                  l["errors"].get<long long>(), num(l["wer"]));
    out << line;
  }
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string input;
  std::string format = "auto";
  std::string factor = "group";
  std::string case_level;
  std::string control_level;
  std::vector<std::string> methods = {"glmm"};
  std::vector<std::string> covariates;
  int nodes = 15;
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  bool no_normalize = false;
  unsigned threads = 1;
  std::string output;
  bool json = false;
};

inline Json analyze_report(const AnalyzeArgs &a) {
  std::vector<Method> methods;
  for (const auto &m : a.methods) methods.push_back(parse_method(m));
  if (methods.empty()) throw InputError("no methods selected");
  bool mixed = false;
  for (Method m : methods) mixed = mixed || m == Method::Glmm;

  LoadOptions lo;
  lo.format = parse_format(a.format);
  lo.factor_field = a.factor;
  lo.normalize = !a.no_normalize;
  lo.require_speaker_level_factor = mixed;
  Corpus corpus = load_corpus(a.input, lo);
  corpus.validate(mixed);

  const std::string control =
      a.control_level.empty() ? corpus.factor.levels[0] : a.control_level;
  const std::size_t control_idx = corpus.factor.index_of(control);
  std::string case_label = a.case_level;
  if (case_label.empty())
    case_label = corpus.factor.levels[control_idx == 0 ? 1 : 0];
  const std::size_t case_idx = corpus.factor.index_of(case_label);
  corpus.factor.reference_level = control_idx;

  std::vector<std::string> covs = a.covariates;
  if (covs.size() == 1 && covs[0] == "all") covs = corpus.covariate_names;
  for (const auto &c : covs)
    if (std::find(corpus.covariate_names.begin(), corpus.covariate_names.end(), c) ==
        corpus.covariate_names.end())
      throw InputError("unknown covariate '" + c + "'");

  ModelSpec full;
  full.covariates = covs;
  ModelSpec reduced = full;
  reduced.include_factor = false;

  Json method_names = Json::array();
  for (Method m : methods) method_names.push_back(to_string(m));
  Json report{{"schema", kAnalysisSchema},
              {"tool_version", kVersion},
              {"seed", a.seed},
              {"config",
               {{"input", a.input},
                {"format", a.format},
                {"factor", a.factor},
                {"case", case_label},
                {"control", control},
                {"methods", method_names},
                {"covariates", covs},
                {"nodes", a.nodes},
                {"bootstrap", a.bootstrap},
                {"seed", a.seed},
                {"level", a.level},
                {"normalize", !a.no_normalize}}},
              {"corpus", to_json(summarize(corpus))}};

  Json ratios = Json::array(), tests = Json::array(), models = Json::object();
  for (Method m : methods) {
    Json row;
    switch (m) {
      case Method::Baseline: {
        BootstrapOptions b;
        b.replicates = a.bootstrap;
        b.seed = a.seed;
        b.level = a.level;
        b.threads = a.threads;
        row = to_json(baseline_ratio(corpus, case_idx, control_idx, b));
        break;
      }
      case Method::Glm: {
        const FittedGLM f = fit_glm(corpus, full);
        const FittedGLM r = fit_glm(corpus, reduced);
        row = to_json(model_ratio(f, case_idx, control_idx, a.level));
        tests.push_back(Json{{"method", "glm"}, {"term", a.factor}});
        tests.back().update(to_json(lrt(f, r)));
        Json mj = to_json(f);
        if (f.observations > f.parameter_count())
          mj["dispersion"] = dispersion(f, corpus);
        models["glm"] = mj;
        break;
      }
      case Method::Glmm: {
        GlmmOptions g;
        g.nodes = a.nodes;
        g.threads = a.threads;
        const FittedGLMM f = fit_glmm(corpus, MixedModelSpec{full}, g);
        const FittedGLMM r = fit_glmm(corpus, MixedModelSpec{reduced}, g);
        row = to_json(model_ratio(f, case_idx, control_idx, a.level));
        tests.push_back(Json{{"method", "glmm"}, {"term", a.factor}});
        tests.back().update(to_json(lrt(f, r)));
        models["glmm"] = to_json(f);
        break;
      }
    }
    Json named{{"method", to_string(m)}};
    named.update(row);
    ratios.push_back(named);
  }
  report["ratios"] = ratios;
  report["tests"] = tests;
  report["models"] = models;
  return report;
}

inline void render_analysis(const Json &r, std::ostream &out) {
  const Json &cfg = r["config"];
  out << "werfair " << r["tool_version"].get<std::string>() << "  factor "
      << cfg["factor"].get<std::string>() << ": " << cfg["case"].get<std::string>()
      << " vs " << cfg["control"].get<std::string>() << "  seed " << r["seed"] << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %10s %10s %8s\n", "level", "utts",
                "speakers", "words", "errors", "WER");
  out << line;
  for (const auto &l : r["corpus"]["levels"]) {
    std::snprintf(line, sizeof(line), "%-16s %8lld %8lld %10lld %10lld %8.4f\n",
                  l["level"].get<std::string>().c_str(), l["utterances"].get<long long>(),
                  l["speakers"].get<long long>(), l["words"].get<long long>(),
                  l["errors"].get<long long>(), num(l["wer"]));
    out << line;
  }
  out << "\n";
  std::snprintf(line, sizeof(line), "%-10s %8s  %-20s %s\n", "method", "ratio",
                "CI", "interval");
  out << line;
  for (const auto &row : r["ratios"]) {
    const int pct = static_cast<int>(std::lround(100.0 * row["level"].get<double>()));
    const std::string ci = "(" + fmt("%.2f", num(row["ci_low"])) + ", " +
                           fmt("%.2f", num(row["ci_high"])) + ")";
    std::snprintf(line, sizeof(line), "%-10s %8.2f  %-20s %d%% %s\n",
                  row["method"].get<std::string>().c_str(), num(row["ratio"]),
                  ci.c_str(), pct, row["interval"].get<std::string>().c_str());
    out << line;
  }
  for (const auto &t : r["tests"]) {
    std::snprintf(line, sizeof(line), "LRT %-5s %s: chi2 %.4f  df %lld  p %.4g\n",
                  t["method"].get<std::string>().c_str(),
                  t["term"].get<std::string>().c_str(), t["statistic"].get<double>(),
                  t["df"].get<long long>(), t["p_value"].get<double>());
    out << line;
  }
  if (r["models"].contains("glmm")) {
    const Json &g = r["models"]["glmm"];
    out << "speaker sd " << fmt("%.4f", g["sigma"].get<double>())
        << (g["boundary"].get<bool>() ? " (boundary)" : "") << "\n";
  }
  for (const auto &[name, m] : r["models"].items()) {
    out << "\n" << name << " coefficients (log-likelihood "
        << fmt("%.4f", m["log_likelihood"].get<double>()) << ")\n";
    for (const auto &c : m["coefficients"]) {
      std::snprintf(line, sizeof(line), "  %-24s %12.6f %12.6f\n",
                    c["name"].get<std::string>().c_str(), c["estimate"].get<double>(),
                    c["std_error"].get<double>());
      out << line;
    }
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string experiment = "confounding";
  double p_case = 0.5;
  double p_control = 0.5;
  std::size_t n_per_group = 5000;
  std::int64_t words = 10;
  double base_rate = 0.05;
  double theta = 0.1;
  std::size_t speakers = 100;
  double sigma = 0.4;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  std::size_t bootstrap = 1000;
  int nodes = 15;
  double level = 0.95;
  unsigned threads = 1;
  std::string output;
  std::string csv;
  bool json = false;
};

inline SimReport simulate(const SimulateArgs &a) {
  ExperimentConfig config;
  std::vector<Method> methods;
  if (a.experiment == "confounding") {
    ConfoundingConfig c;
    c.n_per_group = a.n_per_group;
    c.words_per_utt = a.words;
    c.base_mu = std::log(a.base_rate);
    c.theta = a.theta;
    c.p_case = a.p_case;
    c.p_control = a.p_control;
    config = c;
    methods = {Method::Baseline, Method::Glm};
  } else if (a.experiment == "speaker") {
    SpeakerEffectConfig s;
    s.n_speakers_per_group = a.speakers;
    s.n_per_group = a.n_per_group;
    s.words_per_utt = a.words;
    s.base_mu = std::log(a.base_rate);
    s.sigma = a.sigma;
    config = s;
    methods = {Method::Baseline, Method::Glmm};
  } else {
    throw InputError("unknown experiment '" + a.experiment + "'");
  }
  if (!(a.base_rate > 0.0)) throw InputError("base rate must be positive");
  if (!a.methods.empty()) {
    methods.clear();
    for (const auto &m : a.methods) methods.push_back(parse_method(m));
  }
  ExperimentOptions o;
  o.methods = methods;
  o.replications = a.reps;
  o.seed = a.seed;
  o.bootstrap_replicates = a.bootstrap;
  o.nodes = a.nodes;
  o.level = a.level;
  o.threads = a.threads;
  return run_experiment(config, o);
}

inline std::string records_csv(const SimReport &report) {
  std::ostringstream s;
  s << "replication,method,failed,ratio,ci_low,ci_high,significant,sigma,error\n";
  for (const auto &r : report.records) {
    s << r.replication << ',' << to_string(r.method) << ',' << (r.failed ? 1 : 0);
    if (r.failed) {
      s << ",,,,,";
    } else {
      s << ',' << fmt("%.17g", r.estimate.ratio) << ',' << fmt("%.17g", r.estimate.ci_low)
        << ',' << fmt("%.17g", r.estimate.ci_high) << ','
        << (r.estimate.significant() ? 1 : 0) << ',';
    }
    if (r.sigma) s << fmt("%.17g", *r.sigma);
    s << ',';
    if (r.failed) {
      std::string e = r.error;
      std::string q;
      for (char ch : e) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      s << '"' << q << '"';
    }
    s << '\n';
  }
  return s.str();
}

inline void render_simulation(const Json &r, std::ostream &out) {
  out << "experiment " << r["experiment"].get<std::string>() << "  replications "
      << r["replications"] << "  seed " << r["seed"] << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %12s %14s %9s\n", "method", "mean ratio",
                "false positive", "failures");
  out << line;
  for (const auto &[name, s] : r["summary"].items()) {
    std::snprintf(line, sizeof(line), "%-10s %12.3f %13.1f%% %9lld\n", name.c_str(),
                  s["mean_ratio"].get<double>(), 100.0 * s["fp_rate"].get<double>(),
                  s["failures"].get<long long>());
    out << line;
  }
}

// ---------------------------------------------------------------- driver

inline void emit(const Json &report, const std::string &output, bool json,
                 void (*render)(const Json &, std::ostream &), std::ostream &out) {
  const std::string text = report.dump(2) + "\n";
  if (!output.empty()) write_file(output, text);
  if (json)
    out << text;
  else
    render(report, out);
}

/// Runs the tool with the given arguments and returns the process exit code.
inline int run(int argc, const char *const *argv, std::ostream &out,
               std::ostream &err) {
  CLI::App app{"Word error rate scoring and group fairness analysis", "werfair"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::uint64_t env_seed = 0;
  try {
    env_seed = default_seed();
  } catch (const InputError &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  WerArgs wa;
  auto *wer = app.add_subcommand("wer", "Score a corpus and print WER per level");
  wer->add_option("input", wa.input, "JSONL or CSV corpus")->required();
  wer->add_option("--format", wa.format, "auto, jsonl or csv")->capture_default_str();
  wer->add_option("--factor", wa.factor, "Name of the group field")->capture_default_str();
  wer->add_flag("--no-normalize", wa.no_normalize, "Keep token case");
  wer->add_option("-o,--output", wa.output, "Write the JSON report here");
  wer->add_flag("--json", wa.json, "Print JSON instead of a table");

  AnalyzeArgs aa;
  aa.seed = env_seed;
  auto *an = app.add_subcommand("analyze", "Estimate and test a group WER ratio");
  an->add_option("input", aa.input, "JSONL or CSV corpus")->required();
  an->add_option("--format", aa.format, "auto, jsonl or csv")->capture_default_str();
  an->add_option("--factor", aa.factor, "Name of the group field")->capture_default_str();
  an->add_option("--case", aa.case_level, "Level in the numerator");
  an->add_option("--control", aa.control_level,
                 "Level in the denominator (default: first level)");
  an->add_option("--method", aa.methods, "baseline, glm, glmm (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  an->add_option("--covariates", aa.covariates, "Covariate names, or 'all'")
      ->delimiter(',');
  an->add_option("--nodes", aa.nodes, "Quadrature nodes")->capture_default_str();
  an->add_option("--bootstrap", aa.bootstrap, "Bootstrap replicates")
      ->capture_default_str();
  an->add_option("--seed", aa.seed, "Seed (default from WERFAIR_SEED)")
      ->capture_default_str();
  an->add_option("--level", aa.level, "Confidence level")->capture_default_str();
  an->add_flag("--no-normalize", aa.no_normalize, "Keep token case");
  an->add_option("--threads", aa.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  an->add_option("-o,--output", aa.output, "Write the JSON report here");
  an->add_flag("--json", aa.json, "Print JSON instead of a table");

  SimulateArgs sa;
  sa.seed = env_seed;
  auto *sim = app.add_subcommand("simulate", "Run a false-positive simulation");
  sim->add_option("--experiment", sa.experiment, "confounding or speaker")
      ->capture_default_str();
  sim->add_option("--p-case", sa.p_case, "Confounder rate in the case group")
      ->capture_default_str();
  sim->add_option("--p-control", sa.p_control, "Confounder rate in the control group")
      ->capture_default_str();
  sim->add_option("--n-per-group", sa.n_per_group, "Utterances per group")
      ->capture_default_str();
  sim->add_option("--words", sa.words, "Words per utterance")->capture_default_str();
  sim->add_option("--base-rate", sa.base_rate, "Baseline per-word error rate")
      ->capture_default_str();
  sim->add_option("--theta", sa.theta, "Confounder log-rate effect")
      ->capture_default_str();
  sim->add_option("--speakers", sa.speakers, "Speakers per group")
      ->capture_default_str();
  sim->add_option("--sigma", sa.sigma, "Speaker effect sd")->capture_default_str();
  sim->add_option("--reps", sa.reps, "Replications")->capture_default_str();
  sim->add_option("--seed", sa.seed, "Seed (default from WERFAIR_SEED)")
      ->capture_default_str();
  sim->add_option("--methods", sa.methods, "baseline, glm, glmm (comma separated)")
      ->delimiter(',');
  sim->add_option("--bootstrap", sa.bootstrap, "Bootstrap replicates")
      ->capture_default_str();
  sim->add_option("--nodes", sa.nodes, "Quadrature nodes")->capture_default_str();
  sim->add_option("--level", sa.level, "Confidence level")->capture_default_str();
  sim->add_option("--threads", sa.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  sim->add_option("-o,--output", sa.output, "Write the JSON report here");
  sim->add_option("--csv", sa.csv, "Write per-replication records here");
  sim->add_flag("--json", sa.json, "Print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*wer) {
      emit(wer_report(wa), wa.output, wa.json, render_wer, out);
    } else if (*an) {
      aa.threads = resolve_threads(aa.threads);
      emit(analyze_report(aa), aa.output, aa.json, render_analysis, out);
    } else if (*sim) {
      sa.threads = resolve_threads(sa.threads);
      const SimReport report = simulate(sa);
      if (!sa.csv.empty()) write_file(sa.csv, records_csv(report));
      emit(to_json(report), sa.output, sa.json, render_simulation, out);
    }
  } catch (const ConvergenceError &e) {
    err << "error: " << e.what() << "\n";
    return kConvergenceError;
  } catch (const InputError &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ModelError &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kOk;
}

}  // namespace werfair::cli

#endif  // WERFAIR_TOOLS_CLI_HPP_
