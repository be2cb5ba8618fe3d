// tests/test_cli.cpp

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

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace werfair;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "werfair");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string counts_jsonl(const Corpus &c) {
  std::string s;
  for (const auto &u : c.utterances) {
    Json j{{"id", u.id},
           {"speaker", u.speaker},
           {"group", c.factor.levels[u.level]},
           {"errors", u.errors},
           {"words", u.ref_words}};
    if (!u.covariates.empty()) j["cov"] = u.covariates;
    s += j.dump() + "\n";
  }
  return s;
}

}  // namespace

TEST_CASE("wer command", "[cli]") {
  testing::TempDir dir;
  const auto two = dir.file(
      "two.jsonl",
      R"({"id":"a","speaker":"s1","group":"f","ref":"turn on the light","hyp":"turn on a light"})"
      "\n"
      R"({"id":"b","speaker":"s2","group":"m","ref":"","hyp":"uh"})"
      "\n");
  const Run r = run({"wer", two.string()});
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("WER 0.2500"));
  CHECK_THAT(r.out, ContainsSubstring("excluded 1"));
  CHECK_THAT(r.out, ContainsSubstring("[ 1 / 4, 0 ins, 0 del, 1 sub ]"));

  const Run j = run({"wer", two.string(), "--json"});
  const Json report = Json::parse(j.out);
  CHECK(report["corpus"]["total"]["wer"].get<double>() == 0.25);
  CHECK(report["corpus"]["excluded"] == 1);

  const Run missing = run({"wer", (dir.path() / "nope.jsonl").string()});
  CHECK(missing.code == cli::kInputError);
  CHECK_THAT(missing.err, ContainsSubstring("file not found"));

  const auto mixed = dir.file("mixed.jsonl",
                              R"({"speaker":"s1","group":"f","ref":"a","hyp":"a"})"
                              "\n"
                              R"({"speaker":"s1","group":"f","errors":1,"words":3})"
                              "\n");
  CHECK(run({"wer", mixed.string()}).code == cli::kInputError);
}

TEST_CASE("analyze with the GLM on a toy corpus", "[cli]") {
  testing::TempDir dir;
  const Corpus c = testing::make_corpus(
      {{"s1", 0, 3, 20}, {"s1", 0, 4, 25}, {"s2", 1, 9, 30}, {"s2", 1, 2, 12}},
      {"female", "male"});
  const auto file = dir.file("toy.jsonl", counts_jsonl(c));
  const Run r = run({"analyze", file.string(), "--case", "male", "--control", "female",
                     "--method", "glm", "--json"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  const double empirical = (11.0 / 42.0) / (7.0 / 45.0);
  CHECK_THAT(j["ratios"][0]["ratio"].get<double>(), WithinRel(empirical, 1e-10));
  CHECK(j["tests"][0]["df"] == 1);
  CHECK(j["schema"] == kAnalysisSchema);
  CHECK(j["tool_version"] == kVersion);
  CHECK(j["models"]["glm"]["coefficients"][1]["name"] == "group[male]");

  const Run same = run({"analyze", file.string(), "--case", "male", "--control", "male",
                        "--method", "baseline,glm", "--json"});
  REQUIRE(same.code == 0);
  for (const auto &row : Json::parse(same.out)["ratios"])
    CHECK(row["ratio"].get<double>() == 1.0);

  CHECK(run({"analyze", file.string(), "--case", "other"}).code == cli::kInputError);
  CHECK(run({"analyze", file.string(), "--method", "svm"}).code == cli::kInputError);
  CHECK(run({"analyze", file.string(), "--bogus"}).code == cli::kInputError);
}

TEST_CASE("analyze with all methods on a clustered corpus", "[cli]") {
  testing::TempDir dir;
  Corpus c = testing::random_corpus(41, 48, 12, 0.35, 1);
  c.utterances.erase(std::remove_if(c.utterances.begin(), c.utterances.end(),
                                    [](const Utterance &u) { return u.speaker == "L1S0"; }),
                     c.utterances.end());
  REQUIRE(c.speaker_count() == 95);
  const auto file = dir.file("c.jsonl", counts_jsonl(c));
  const std::vector<std::string> args = {"analyze",  file.string(), "--case",  "b",
                                         "--control", "a", "--method", "baseline,glm,glmm",
                                         "--covariates", "all", "--seed", "5"};
  const Run r = run(args);
  REQUIRE(r.code == 0);
  for (const char *m : {"baseline", "glm", "glmm"}) {
    const std::regex row(std::string(m) + R"( +\d+\.\d\d +\(\d+\.\d\d, \d+\.\d\d\))");
    CHECK(std::regex_search(r.out, row));
  }
  CHECK_THAT(r.out, ContainsSubstring("LRT glmm"));

  auto json_args = args;
  json_args.push_back("--json");
  const Run a = run(json_args);
  const Run b = run(json_args);
  CHECK(a.out == b.out);
  const Json j = Json::parse(a.out);
  CHECK(j["ratios"].size() == 3);
  CHECK(j["tests"].size() == 2);
  CHECK(j["models"]["glmm"]["conditional_modes"].size() == 95);
  CHECK(j["seed"] == 5);
  for (const char *key : {"input", "format", "factor", "case", "control", "methods",
                          "covariates", "nodes", "bootstrap", "seed", "level", "normalize"})
    CHECK(j["config"].contains(key));

  auto threaded = json_args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  CHECK(run(threaded).out == a.out);

  const auto out = dir.path() / "report.json";
  auto to_file = args;
  to_file.insert(to_file.end(), {"--output", out.string()});
  REQUIRE(run(to_file).code == 0);
  std::ifstream f(out);
  std::stringstream text;
  text << f.rdbuf();
  CHECK(text.str() == a.out);
}

TEST_CASE("simulate command", "[cli]") {
  testing::TempDir dir;
  const Run r = run({"simulate", "--reps", "1", "--n-per-group", "300", "--bootstrap", "200",
                     "--json", "--seed", "3"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["replications"] == 1);
  CHECK(j["records"].size() == 2);
  CHECK(j["schema"] == kSimulationSchema);
  for (const char *key : {"n_per_group", "words_per_utt", "base_rate", "theta", "p_case",
                          "p_control", "methods", "bootstrap_replicates", "nodes", "level"})
    CHECK(j["config"].contains(key));
  for (const char *key : {"mean_ratio_baseline", "mean_ratio_model", "fp_rate_baseline",
                          "fp_rate_model"})
    CHECK(j.contains(key));

  const auto csv = dir.path() / "reps.csv";
  const std::vector<std::string> speaker = {
      "simulate", "--experiment", "speaker", "--speakers", "10", "--n-per-group", "200",
      "--reps", "4", "--bootstrap", "100", "--json", "--csv", csv.string()};
  const Run s = run(speaker);
  REQUIRE(s.code == 0);
  const Json sj = Json::parse(s.out);
  CHECK(sj["model_method"] == "glmm");
  CHECK(sj["config"]["sigma"] == 0.4);
  std::ifstream f(csv);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(f, line)) ++lines;
  CHECK(lines == 1 + 8);

  auto threaded = speaker;
  threaded.insert(threaded.end(), {"--threads", "2"});
  CHECK(run(threaded).out == s.out);

  const Run table = run({"simulate", "--reps", "2", "--n-per-group", "300", "--bootstrap",
                         "100"});
  CHECK_THAT(table.out, ContainsSubstring("false positive"));
  CHECK(run({"simulate", "--experiment", "other"}).code == cli::kInputError);
  CHECK(run({"simulate", "--experiment", "speaker", "--speakers", "7"}).code ==
        cli::kInputError);
}

TEST_CASE("seed defaults to the environment", "[cli]") {
  ::setenv(cli::kSeedEnv, "42", 1);
  const Run r = run({"simulate", "--reps", "1", "--n-per-group", "100", "--bootstrap",
                     "100", "--json"});
  CHECK(Json::parse(r.out)["seed"] == 42);
  ::setenv(cli::kSeedEnv, "forty-two", 1);
  CHECK(run({"simulate", "--reps", "1"}).code == cli::kInputError);
  ::unsetenv(cli::kSeedEnv);
  const Run d = run({"simulate", "--reps", "1", "--n-per-group", "100", "--bootstrap",
                     "100", "--json"});
  CHECK(Json::parse(d.out)["seed"] == 0);
}
