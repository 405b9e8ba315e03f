#pragma once

// Outer loop: projected policy-gradient descent on the inclusion probabilities.

#include "coreset/bernoulli.hpp"
#include "coreset/config.hpp"
#include "coreset/core.hpp"
#include "coreset/learner.hpp"
#include "coreset/projection.hpp"
#include "coreset/random.hpp"
#include "coreset/trace.hpp"

#include <optional>

namespace coreset {

/// What the outer loop optimizes over: n maskable items and a loss for each sampled mask.
class SelectionProblem {
public:
  virtual ~SelectionProblem() = default;

  virtual Index size() const = 0;
  /// Trains the inner learner on `mask` and returns the outer mini-batch loss. `rng` is the
  /// iteration's generator, already advanced past mask sampling.
  virtual double outer_loss(const Mask& mask, Rng& rng) = 0;
  /// Fraction of corrupted items among `indices`, when ground truth is known.
  virtual std::optional<double> noise_ratio(const IndexSet&) const { return std::nullopt; }
};

/// Example selection: mask rows of `train`, score the inner model on mini-batches of `outer`.
class CoresetProblem final : public SelectionProblem {
public:
  CoresetProblem(const Dataset& train, const Dataset& outer, const SelectionConfig& cfg);

  Index size() const override { return train_.size(); }
  double outer_loss(const Mask& mask, Rng& rng) override;
  std::optional<double> noise_ratio(const IndexSet& indices) const override;

private:
  const Dataset& train_;
  const Dataset& outer_;
  const SelectionConfig& cfg_;
  std::optional<TrainedModel> last_model_;
};

struct OuterState {
  ProbabilityVector s;
  int iteration = 0;
  VectorXd first_moment;
  VectorXd second_moment;
  /// Running mean (or moving average) of previous outer losses: the control-variate baseline.
  double baseline = 0.0;
  int baseline_count = 0;
  SelectionTrace trace;
};

struct PgeOptions {
  bool control_variate = false;
  double baseline_decay = 0.0;
  bool adaptive = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  ScoreClamp clamp{};
  double polarization_eps = 0.05;
  /// Step used for the gradient-mapping diagnostic; 0 uses the iteration's step.
  double diagnostic_step = 0.0;
  ProjectionParams projection{};

  static PgeOptions from(const SelectionConfig& cfg);
};

ProbabilityVector init_probabilities(Index n, Index budget);

/// s <- P_C(s - step * (loss - b) * d/ds ln p(m | s)), appending one trace record.
/// With the control variate on, the first call only records the loss as the baseline.
/// Throws RuntimeFailure if the gradient is not finite; the state is then left unchanged.
OuterState pge_step(OuterState state, const Mask& m, double batch_loss, double step,
                    const PgeOptions& options = {});

/// Step size for 1-based iteration t of T.
double scheduled_step(double base, int t, int total, bool cosine);

struct SelectionResult {
  ProbabilityVector s;
  SelectionTrace trace;
  int skipped_iterations = 0;
};

SelectionResult run_selection(SelectionProblem& problem, const SelectionConfig& cfg);
SelectionResult run_selection(const Dataset& dataset, const Dataset& outer_examples, const SelectionConfig& cfg);

/// top_k: the K largest s_i, ties to the lowest index. sample: support of m ~ p(. | s).
/// Returned indices are ascending.
IndexSet extract_coreset(const ProbabilityVector& s, Index budget, ExtractMode mode, Rng& rng);
IndexSet top_k_indices(const VectorXd& values, Index k);

/// || (s - P_C(s - step * g)) / step ||_2
template <typename Derived, typename DerivedG>
double gradient_mapping_norm(const Eigen::MatrixBase<Derived>& s, const Eigen::MatrixBase<DerivedG>& g,
                             double step, Index budget, const ProjectionParams& params = {}) {
  if (!(step > 0.0)) throw ConfigError("gradient mapping needs a positive step");
  const auto projected = project((s - step * g).eval(), budget, params);
  return ((s - projected) / step).norm();
}

inline double gradient_mapping_norm(const ProbabilityVector& s, const VectorXd& g, double step) {
  return gradient_mapping_norm(s.values(), g, step, s.budget());
}

/// Fraction of components within eps of 0 or 1.
template <typename Derived>
double polarization(const Eigen::MatrixBase<Derived>& s, double eps) {
  if (s.size() == 0) return 0.0;
  using Scalar = typename Derived::Scalar;
  const auto near = (s.array() <= Scalar(eps)) || (s.array() >= Scalar(1.0 - eps));
  return double(near.count()) / double(s.size());
}

inline double polarization(const ProbabilityVector& s, double eps) { return polarization(s.values(), eps); }

} // namespace coreset
