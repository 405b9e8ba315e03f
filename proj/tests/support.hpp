#pragma once

// Hand-rolled generators and small independent references shared by the tests.

#include "coreset/core.hpp"
#include "coreset/random.hpp"
#include "coreset/types.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

namespace coreset::testing {

inline VectorXd uniform_vector(Rng& rng, Index n, double lo, double hi) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * uniform01(rng);
  return v;
}

inline Index uniform_index(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

/// Random point of C = {0 <= s <= 1, sum s <= K}, obtained by rescaling a box sample.
inline VectorXd feasible_point(Rng& rng, Index n, Index budget) {
  VectorXd s = uniform_vector(rng, n, 0.0, 1.0);
  if (s.sum() > double(budget)) s *= double(budget) / s.sum() * uniform01(rng);
  return s;
}

inline Dataset random_dataset(Rng& rng, Index n, Index d, int num_classes) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrixXd X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = normal(rng);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& y : labels) y = int(uniform_index(rng, 0, num_classes - 1));
  return Dataset(std::move(X), std::move(labels), num_classes);
}

/// Masks of length n enumerated by the bits of `code`.
inline Mask mask_from_code(Index n, unsigned long code) {
  ArrayXb bits(n);
  for (Index i = 0; i < n; ++i) bits[i] = (code >> i) & 1UL;
  return Mask(std::move(bits));
}

inline double mask_probability(const VectorXd& s, const Mask& m) {
  double p = 1.0;
  for (Index i = 0; i < s.size(); ++i) p *= m[i] ? s[i] : 1.0 - s[i];
  return p;
}

/// Brute-force nearest point of C on a grid of spacing h (n <= 3). Written independently of
/// the library's grid search so frozen projection values have a second derivation.
inline VectorXd brute_force_projection(const VectorXd& z, Index budget, double h) {
  const Index n = z.size();
  const long steps = std::lround(1.0 / h);
  VectorXd best = VectorXd::Zero(n), cur(n);
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<long> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      cur[i] = double(idx[std::size_t(i)]) * h;
      sum += cur[i];
    }
    if (sum <= double(budget) + 1e-12) {
      const double dist = (cur - z).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = cur;
      }
    }
    Index k = 0;
    while (k < n && ++idx[std::size_t(k)] > steps) idx[std::size_t(k++)] = 0;
    if (k == n) break;
  }
  return best;
}

#ifndef DOCTEST_CONFIG_DISABLE
inline void check_close(const VectorXd& a, const VectorXd& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i) {
    INFO("component ", i, ": ", a[i], " vs ", b[i]);
    CHECK(std::abs(a[i] - b[i]) <= tol);
  }
}
#endif

} // namespace coreset::testing
