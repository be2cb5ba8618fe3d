// include/werfair/quadrature.hpp

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

#ifndef WERFAIR_QUADRATURE_HPP_
#define WERFAIR_QUADRATURE_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "werfair/errors.hpp"

namespace werfair {

/// Gauss-Hermite rule for integrals of f(z) exp(-z^2) over the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;        // ascending
  std::vector<double> weights;
  std::vector<double> log_weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Golub-Welsch: nodes are eigenvalues of the symmetric Jacobi matrix of the
// Hermite recurrence, weights sqrt(pi) times squared first eigenvector
// components.
inline GaussHermiteRule make_gauss_hermite(int n) {
  GaussHermiteRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {std::sqrt(M_PI)};
  } else {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (eig.info() != Eigen::Success)
      throw Error("Gauss-Hermite eigen-decomposition failed");
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
      rule.nodes[k] = eig.eigenvalues()[k];
      const double v = eig.eigenvectors()(0, k);
      rule.weights[k] = std::sqrt(M_PI) * v * v;
    }
    // Symmetrize; the exact rule is symmetric about zero.
    for (int k = 0; k < n / 2; ++k) {
      const double z = 0.5 * (rule.nodes[n - 1 - k] - rule.nodes[k]);
      const double w = 0.5 * (rule.weights[n - 1 - k] + rule.weights[k]);
      rule.nodes[k] = -z;
      rule.nodes[n - 1 - k] = z;
      rule.weights[k] = rule.weights[n - 1 - k] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    // Polish with Newton on the orthonormal recurrence. Weights from the
    // derivative keep full relative accuracy in the tails, where eigenvector
    // components are only accurate in absolute terms.
    const double pim4 = std::pow(M_PI, -0.25);
    for (int k = 0; k < n; ++k) {
      double z = rule.nodes[k];
      double pp = 0.0;
      for (int it = 0; it < 10; ++it) {
        double p1 = pim4, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double dz = p1 / pp;
        z -= dz;
        if (std::fabs(dz) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
      }
      rule.nodes[k] = z;
      rule.weights[k] = 2.0 / (pp * pp);
    }
    for (int k = 0; k < n / 2; ++k) {
      rule.nodes[k] = -rule.nodes[n - 1 - k];
      rule.weights[k] = rule.weights[n - 1 - k];
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  }
  rule.log_weights.resize(rule.weights.size());
  std::transform(rule.weights.begin(), rule.weights.end(),
                 rule.log_weights.begin(), [](double w) { return std::log(w); });
  return rule;
}

}  // namespace detail

/// Cached rule with `n` nodes (1 <= n <= 200). Thread-safe; the returned
/// reference stays valid for the life of the program.
inline const GaussHermiteRule &gauss_hermite(int n) {
  if (n < 1 || n > 200)
    throw ModelError("quadrature node count must be in [1, 200]");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto &slot = cache[n];
  if (!slot)
    slot = std::make_unique<const GaussHermiteRule>(
        detail::make_gauss_hermite(n));
  return *slot;
}

}  // namespace werfair

#endif  // WERFAIR_QUADRATURE_HPP_
