#pragma once

// Euclidean projection onto the capped l1 ball
//   C = { s : 0 <= s_i <= 1, sum_i s_i <= K }.
//
// The projection is s = clip(z - v*, 0, 1) where v* = max(0, v1) and v1 is the
// root of the dual residual g'(v) = sum_i clip(z_i - v, 0, 1) - K. The residual
// is non-increasing in v, so v1 is found by bisection.

#include "coreset/errors.hpp"
#include "coreset/types.hpp"

#include <algorithm>
#include <cmath>

namespace coreset {

struct ProjectionParams {
  double tolerance = 1e-10;
  int max_iterations = 200;
  /// Bisection also stops once the bracket is narrower than this.
  double min_bracket = 1e-14;

  void validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("projection tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("projection needs at least one bisection iteration");
  }
};

template <typename Derived>
typename Derived::Scalar dual_residual(const Eigen::MatrixBase<Derived>& z, typename Derived::Scalar v,
                                       Index budget) {
  using Scalar = typename Derived::Scalar;
  return (z.array() - v).cwiseMax(Scalar(0)).cwiseMin(Scalar(1)).sum() - Scalar(budget);
}

/// Root of dual_residual(z, ., budget), or a value <= 0 when clip(z, 0, 1) already meets the budget.
template <typename Derived>
typename Derived::Scalar projection_threshold(const Eigen::MatrixBase<Derived>& z, Index budget,
                                              const ProjectionParams& params = {}) {
  using Scalar = typename Derived::Scalar;
  if (dual_residual(z, Scalar(0), budget) <= Scalar(0)) return Scalar(0);

  // residual(lo) = n - K > 0 here (otherwise the shortcut above fires), residual(hi) = -K < 0
  Scalar lo = z.minCoeff() - Scalar(1);
  Scalar hi = z.maxCoeff();
  for (int it = 0; it < params.max_iterations; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    const Scalar r = dual_residual(z, mid, budget);
    if (std::abs(r) <= Scalar(params.tolerance)) return mid;
    if (r > Scalar(0))
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= Scalar(params.min_bracket)) break;
  }
  // hi always has a non-positive residual, so it keeps the result inside C
  return hi;
}

/// Projects z onto C with budget K. Throws DataError on non-finite input.
template <typename Derived>
Vector<typename Derived::Scalar> project(const Eigen::MatrixBase<Derived>& z, Index budget,
                                         const ProjectionParams& params = {}) {
  using Scalar = typename Derived::Scalar;
  if (budget < 1) throw ConfigError("projection budget must be at least 1");
  if (!z.allFinite()) throw DataError("projection input contains non-finite values");
  if (z.size() == 0) return Vector<Scalar>();
  const Scalar v = std::max(Scalar(0), projection_threshold(z, budget, params));
  return (z.array() - v).cwiseMax(Scalar(0)).cwiseMin(Scalar(1)).matrix();
}

template <typename Derived>
bool in_feasible_set(const Eigen::MatrixBase<Derived>& s, Index budget, double slack = 1e-8) {
  using Scalar = typename Derived::Scalar;
  return s.allFinite() && (s.array() >= Scalar(0)).all() && (s.array() <= Scalar(1)).all() &&
         s.sum() <= Scalar(budget) + Scalar(slack);
}

} // namespace coreset
