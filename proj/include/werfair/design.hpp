// include/werfair/design.hpp

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

#ifndef WERFAIR_DESIGN_HPP_
#define WERFAIR_DESIGN_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "werfair/dataset.hpp"
#include "werfair/errors.hpp"

namespace werfair {

/// Fixed-effect terms of a Poisson rate model. The offset log(ref_words) is
/// always present.
struct ModelSpec {
  bool include_factor = true;
  std::vector<std::string> covariates;
  bool include_intercept = true;

  friend bool operator==(const ModelSpec &, const ModelSpec &) = default;

  /// True when every term of this spec also appears in `full`.
  bool nested_in(const ModelSpec &full) const {
    if (include_intercept != full.include_intercept) return false;
    if (include_factor && !full.include_factor) return false;
    for (const auto &c : covariates)
      if (std::find(full.covariates.begin(), full.covariates.end(), c) ==
          full.covariates.end())
        return false;
    return true;
  }
};

/// Numeric form of (corpus, spec): response, offset and design matrix with
/// rows in a canonical order (grouped by speaker), so fitted quantities do not
/// depend on the order of utterances in the file.
struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd offset;
  std::vector<std::string> names;
  // Column of each factor level, -1 for the reference level (or when the
  // factor is not in the model).
  std::vector<int> level_column;
  // Canonical row r holds corpus utterance row_source[r].
  std::vector<std::size_t> row_source;
  // Speaker blocks: rows [block_begin[b], block_begin[b + 1]).
  std::vector<std::size_t> block_begin;
  std::vector<std::string> block_speaker;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
  std::size_t blocks() const { return block_speaker.size(); }
};

namespace detail {

inline std::vector<std::size_t> canonical_order(const Corpus &corpus) {
  std::vector<std::size_t> order(corpus.utterances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto &u = corpus.utterances;
  std::sort(order.begin(), order.end(), [&u](std::size_t a, std::size_t b) {
    return std::tie(u[a].speaker, u[a].level, u[a].errors, u[a].ref_words,
                    u[a].covariates, u[a].id) <
           std::tie(u[b].speaker, u[b].level, u[b].errors, u[b].ref_words,
                    u[b].covariates, u[b].id);
  });
  return order;
}

}  // namespace detail

inline Design build_design(const Corpus &corpus, const ModelSpec &spec) {
  if (corpus.utterances.empty()) throw EmptyCorpusError();
  Design d;
  std::vector<std::size_t> cov_index;
  for (const auto &name : spec.covariates) {
    auto it = std::find(corpus.covariate_names.begin(),
                        corpus.covariate_names.end(), name);
    if (it == corpus.covariate_names.end())
      throw ModelError("unknown covariate '" + name + "'");
    cov_index.push_back(
        static_cast<std::size_t>(it - corpus.covariate_names.begin()));
  }

  const std::size_t levels = corpus.factor.size();
  d.level_column.assign(levels, -1);
  if (spec.include_intercept) d.names.push_back("(Intercept)");
  if (spec.include_factor) {
    for (std::size_t l = 0; l < levels; ++l) {
      if (spec.include_intercept && l == corpus.factor.reference_level)
        continue;
      d.level_column[l] = static_cast<int>(d.names.size());
      d.names.push_back(corpus.factor.name + "[" + corpus.factor.levels[l] +
                        "]");
    }
  }
  const auto first_cov = static_cast<Eigen::Index>(d.names.size());
  for (const auto &name : spec.covariates) d.names.push_back(name);
  if (d.names.empty()) throw ModelError("model has no fixed-effect terms");

  d.row_source = detail::canonical_order(corpus);
  const auto n = static_cast<Eigen::Index>(d.row_source.size());
  const auto p = static_cast<Eigen::Index>(d.names.size());
  d.x = Eigen::MatrixXd::Zero(n, p);
  d.y.resize(n);
  d.offset.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Utterance &u = corpus.utterances[d.row_source[r]];
    if (u.ref_words < 1)
      throw InputError("utterance '" + u.id + "' has no reference words");
    if (u.level >= levels)
      throw UnknownGroupError("utterance '" + u.id + "' has invalid level");
    d.y[r] = static_cast<double>(u.errors);
    d.offset[r] = std::log(static_cast<double>(u.ref_words));
    if (spec.include_intercept) d.x(r, 0) = 1.0;
    if (d.level_column[u.level] >= 0) d.x(r, d.level_column[u.level]) = 1.0;
    for (std::size_t k = 0; k < cov_index.size(); ++k) {
      if (cov_index[k] >= u.covariates.size())
        throw CovariateDimensionError("utterance '" + u.id +
                                      "' lacks covariate '" +
                                      spec.covariates[k] + "'");
      d.x(r, first_cov + static_cast<Eigen::Index>(k)) =
          u.covariates[cov_index[k]];
    }
    if (r == 0 || u.speaker != d.block_speaker.back()) {
      d.block_begin.push_back(static_cast<std::size_t>(r));
      d.block_speaker.push_back(u.speaker);
    }
  }
  d.block_begin.push_back(static_cast<std::size_t>(n));
  return d;
}

/// Throws NonIdentifiableError unless the design has full column rank.
inline void check_full_rank(const Design &d) {
  if (d.rows() < d.cols())
    throw NonIdentifiableError("more coefficients (" +
                               std::to_string(d.cols()) + ") than rows (" +
                               std::to_string(d.rows()) + ")");
  Eigen::MatrixXd scaled = d.x;
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    const double norm = scaled.col(c).norm();
    if (norm == 0.0)
      throw NonIdentifiableError("column '" + d.names[c] + "' is all zero");
    scaled.col(c) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < scaled.cols())
    throw NonIdentifiableError("design matrix has rank " +
                               std::to_string(qr.rank()) + " < " +
                               std::to_string(scaled.cols()) + " columns");
}

}  // namespace werfair

#endif  // WERFAIR_DESIGN_HPP_
