#pragma once

// Product-Bernoulli mask distribution p(m | s) = prod_i s_i^m_i (1 - s_i)^(1 - m_i).

#include "coreset/core.hpp"
#include "coreset/errors.hpp"
#include "coreset/random.hpp"
#include "coreset/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace coreset {

struct ScoreClamp {
  double epsilon = 1e-6;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("score clamp epsilon must lie in (0, 0.5)");
  }
};

/// One uniform variate per index, in index order; bit i is set iff u_i < s_i.
template <typename Derived>
Mask sample_mask(const Eigen::MatrixBase<Derived>& s, Rng& rng) {
  ArrayXb bits(s.size());
  for (Index i = 0; i < s.size(); ++i) bits[i] = uniform01(rng) < double(s[i]);
  return Mask(std::move(bits));
}

inline Mask sample_mask(const ProbabilityVector& s, Rng& rng) { return sample_mask(s.values(), rng); }

template <typename Derived>
typename Derived::Scalar log_prob(const Eigen::MatrixBase<Derived>& s, const Mask& m) {
  using Scalar = typename Derived::Scalar;
  if (s.size() != m.size()) throw ConfigError("log_prob: mask and probability lengths differ");
  Scalar total(0);
  for (Index i = 0; i < s.size(); ++i) {
    const Scalar p = m[i] ? s[i] : Scalar(1) - s[i];
    if (p <= Scalar(0))
      throw ImpossibleOutcomeError("mask bit " + std::to_string(i) + " contradicts probability " +
                                   std::to_string(double(s[i])));
    total += std::log(p);
  }
  return total;
}

inline double log_prob(const ProbabilityVector& s, const Mask& m) { return log_prob(s.values(), m); }

/// d/ds ln p(m | s) with s clamped into [eps, 1 - eps].
template <typename Derived>
Vector<typename Derived::Scalar> score_gradient(const Eigen::MatrixBase<Derived>& s, const Mask& m,
                                                const ScoreClamp& clamp = {}) {
  using Scalar = typename Derived::Scalar;
  if (s.size() != m.size()) throw ConfigError("score_gradient: mask and probability lengths differ");
  const Scalar lo(clamp.epsilon), hi(Scalar(1) - Scalar(clamp.epsilon));
  Vector<Scalar> g(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const Scalar c = std::clamp(Scalar(s[i]), lo, hi);
    g[i] = m[i] ? Scalar(1) / c : Scalar(-1) / (Scalar(1) - c);
  }
  return g;
}

inline VectorXd score_gradient(const ProbabilityVector& s, const Mask& m, const ScoreClamp& clamp = {}) {
  return score_gradient(s.values(), m, clamp);
}

template <typename Derived>
typename Derived::Scalar expected_cardinality(const Eigen::MatrixBase<Derived>& s) {
  return s.sum();
}

inline double expected_cardinality(const ProbabilityVector& s) { return s.values().sum(); }

} // namespace coreset
