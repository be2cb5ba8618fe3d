// tests/support.hpp

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

// Shared fixtures and reference implementations for the test suites. The
// reference code is deliberately naive and independent of the library.

#ifndef WERFAIR_TESTS_SUPPORT_HPP_
#define WERFAIR_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "werfair/werfair.hpp"

namespace werfair::testing {

/// Minimum cost over every edit script turning ref[i..] into hyp[j..],
/// enumerated by plain recursion without memoisation.
inline int edit_script_oracle(const std::vector<std::string> &ref,
                              const std::vector<std::string> &hyp,
                              std::size_t i = 0, std::size_t j = 0) {
  if (i == ref.size()) return static_cast<int>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<int>(ref.size() - i);
  const int keep = (ref[i] == hyp[j] ? 0 : 1) + edit_script_oracle(ref, hyp, i + 1, j + 1);
  const int del = 1 + edit_script_oracle(ref, hyp, i + 1, j);
  const int ins = 1 + edit_script_oracle(ref, hyp, i, j + 1);
  return std::min({keep, del, ins});
}

/// All sequences of length <= max_len over `alphabet`.
inline std::vector<std::vector<std::string>> all_sequences(
    const std::vector<std::string> &alphabet, std::size_t max_len) {
  std::vector<std::vector<std::string>> out{{}};
  std::vector<std::vector<std::string>> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto &s : frontier)
      for (const auto &a : alphabet) {
        auto t = s;
        t.push_back(a);
        next.push_back(t);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

/// Log of the block marginal likelihood by the composite trapezoid rule on
/// r in [-half_width, half_width].
inline double trapezoid_block_loglik(const std::vector<std::int64_t> &c,
                                     const std::vector<std::int64_t> &n,
                                     const std::vector<double> &eta, double sigma,
                                     double half_width, std::size_t panels) {
  auto log_integrand = [&](double r) {
    double s = -0.5 * r * r / (sigma * sigma) - std::log(sigma) -
               0.5 * std::log(2.0 * M_PI);
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double lambda = static_cast<double>(n[j]) * std::exp(eta[j] + r);
      s += static_cast<double>(c[j]) * std::log(lambda) - lambda -
           std::lgamma(static_cast<double>(c[j]) + 1.0);
    }
    return s;
  };
  const double h = 2.0 * half_width / static_cast<double>(panels);
  std::vector<double> f(panels + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= panels; ++k) {
    f[k] = log_integrand(-half_width + h * static_cast<double>(k));
    peak = std::max(peak, f[k]);
  }
  long double acc = 0.0L;
  for (std::size_t k = 0; k <= panels; ++k) {
    const long double w = (k == 0 || k == panels) ? 0.5L : 1.0L;
    acc += w * std::exp(static_cast<long double>(f[k] - peak));
  }
  return peak + std::log(static_cast<double>(acc) * h);
}

/// Term-by-term Poisson log-likelihood with rates lambda_s = N_s e^{eta_s}.
inline double poisson_sum(const std::vector<std::int64_t> &c,
                          const std::vector<std::int64_t> &n,
                          const std::vector<double> &eta) {
  double s = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double lambda = static_cast<double>(n[j]) * std::exp(eta[j]);
    s += static_cast<double>(c[j]) * std::log(lambda) - lambda -
         std::lgamma(static_cast<double>(c[j]) + 1.0);
  }
  return s;
}

/// Two-level corpus from (speaker, level, errors, words) tuples.
struct Row {
  std::string speaker;
  std::size_t level;
  std::int64_t errors;
  std::int64_t words;
  std::vector<double> cov = {};
};

inline Corpus make_corpus(const std::vector<Row> &rows,
                          std::vector<std::string> levels = {"a", "b"},
                          std::vector<std::string> covariate_names = {}) {
  Corpus c;
  c.factor.levels = std::move(levels);
  c.covariate_names = std::move(covariate_names);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Utterance u;
    u.id = "u" + std::to_string(i);
    u.speaker = rows[i].speaker;
    u.level = rows[i].level;
    u.errors = rows[i].errors;
    u.ref_words = rows[i].words;
    u.covariates = rows[i].cov;
    c.utterances.push_back(u);
  }
  return c;
}

/// Random two-level corpus with `speakers` speakers per level and a speaker
/// effect of sd `sigma`.
inline Corpus random_corpus(std::uint64_t seed, std::size_t speakers,
                            std::size_t per_speaker, double sigma,
                            std::size_t covariates = 0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> len(3, 20);
  std::vector<Row> rows;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < covariates; ++k) names.push_back("cov_" + std::to_string(k));
  for (std::size_t level = 0; level < 2; ++level)
    for (std::size_t s = 0; s < speakers; ++s) {
      const double r = sigma * z(gen);
      const std::string spk = "L" + std::to_string(level) + "S" + std::to_string(s);
      for (std::size_t j = 0; j < per_speaker; ++j) {
        Row row{spk, level, 0, len(gen)};
        double eta = std::log(0.08) + 0.1 * static_cast<double>(level) + r;
        for (std::size_t k = 0; k < covariates; ++k) {
          row.cov.push_back(z(gen));
          eta += 0.2 * row.cov.back();
        }
        std::poisson_distribution<std::int64_t> pois(static_cast<double>(row.words) *
                                                     std::exp(eta));
        row.errors = pois(gen);
        rows.push_back(row);
      }
    }
  return make_corpus(rows, {"a", "b"}, names);
}

/// Scratch directory removed when the object goes out of scope.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("werfair-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path file(const std::string &name, const std::string &text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Exact (Clopper-Pearson) two-sided interval for the number of successes
/// out of n that is consistent with rate p at the given level: the central
/// binomial acceptance region.
inline std::pair<std::size_t, std::size_t> binomial_acceptance(std::size_t n, double p,
                                                               double level) {
  const double tail = (1.0 - level) / 2.0;
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                      std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log1p(-p));
  std::size_t lo = 0;
  double cum = 0.0;
  while (lo < n && cum + pmf[lo] <= tail) cum += pmf[lo++];
  std::size_t hi = n;
  cum = 0.0;
  while (hi > 0 && cum + pmf[hi] <= tail) cum += pmf[hi--];
  return {lo, hi};
}

}  // namespace werfair::testing

#endif  // WERFAIR_TESTS_SUPPORT_HPP_
