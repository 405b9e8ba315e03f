#pragma once

// Exact references for small instances: full mask enumeration of the expected
// outer loss and its gradient, exhaustive grid projection, finite differences.

#include "coreset/core.hpp"
#include "coreset/types.hpp"

#include <functional>

namespace coreset {

/// Outer loss as a function of the mask (inner solve included). Must be deterministic.
using MaskLoss = std::function<double(const Mask&)>;

struct PhiValue {
  double phi = 0.0;
  VectorXd gradient;
  /// Sum of p(m | s) over the enumerated masks.
  double total_probability = 0.0;
};

inline constexpr Index kMaxEnumerationSize = 16;

/// Phi(s) = sum_m p(m|s) L(m) and grad Phi = sum_m p(m|s) L(m) d/ds ln p(m|s).
/// Masks with zero probability are skipped. Throws ConfigError when n > 16.
PhiValue enumerate_phi(const VectorXd& s, const MaskLoss& loss);

/// Mask loss for the ridge learner scored on `outer`. The empty mask maps to the zero model,
/// which is the ridge solution with no data.
MaskLoss ridge_mask_loss(const Dataset& train, const Dataset& outer, Index budget, double lambda);

/// Exhaustive search over the grid of spacing `resolution` inside C for the point nearest to z.
/// Ties resolve to the lexicographically smallest grid point. Throws ConfigError when n > 3.
VectorXd grid_project(const VectorXd& z, Index budget, double resolution);

VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                                    double h = 1e-5);

} // namespace coreset
