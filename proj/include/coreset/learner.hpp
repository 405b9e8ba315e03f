#pragma once

// Inner-loop learners: multinomial logistic regression, a ReLU MLP and a
// closed-form ridge regressor on one-hot targets. Parameters live in one flat
// vector so optimizers, gradient checks and serialization treat every
// architecture alike.

#include "coreset/config.hpp"
#include "coreset/core.hpp"
#include "coreset/random.hpp"
#include "coreset/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace coreset {

struct Architecture {
  LearnerKind kind = LearnerKind::logistic;
  Index input_dim = 0;
  Index num_classes = 0;
  /// Hidden layer widths (MLP only).
  std::vector<Index> hidden;

  Index parameter_count() const;
  bool operator==(const Architecture&) const = default;
};

Architecture make_architecture(const InnerConfig& cfg, Index input_dim, Index num_classes);

class TrainedModel {
public:
  TrainedModel() = default;
  TrainedModel(Architecture arch, VectorXd params, double final_loss = 0.0);

  /// Parameters drawn with the configured init scale.
  static TrainedModel initialize(const Architecture& arch, double init_scale, Rng& rng);
  static TrainedModel zeros(const Architecture& arch);

  const Architecture& architecture() const { return arch_; }
  const VectorXd& parameters() const { return params_; }
  VectorXd& parameters() { return params_; }
  double final_loss() const { return final_loss_; }
  void set_final_loss(double loss) { final_loss_ = loss; }

  /// Pre-softmax outputs (or raw regression outputs for ridge), one row per example.
  MatrixXd outputs(const RowMatrixXd& X) const;
  /// Last hidden layer for the MLP, raw outputs otherwise.
  MatrixXd embed(const RowMatrixXd& X) const;
  /// Mean per-example loss: cross-entropy, or squared error against one-hot targets for ridge.
  std::vector<double> per_example_loss(const Dataset& data) const;
  std::vector<int> predict(const RowMatrixXd& X) const;

private:
  Architecture arch_;
  VectorXd params_;
  double final_loss_ = 0.0;
};

/// Value and gradient of  scale * mean_i loss(f(x_i; theta), y_i) + (decay / 2) ||theta||^2.
struct ObjectiveValue {
  double loss = 0.0;
  VectorXd gradient;
};

ObjectiveValue objective(const Architecture& arch, const VectorXd& params, const RowMatrixXd& X,
                         std::span<const int> labels, double scale = 1.0, double decay = 0.0);

double objective_value(const Architecture& arch, const VectorXd& params, const RowMatrixXd& X,
                       std::span<const int> labels, double scale = 1.0, double decay = 0.0);

/// Trains on the masked examples, minimizing (1/K) sum_i m_i loss_i with K = cfg budget.
/// Throws EmptyCoresetError when the mask selects nothing.
TrainedModel fit(const Dataset& data, const Mask& mask, Index budget, const InnerConfig& cfg, Rng& rng,
                 const TrainedModel* warm = nullptr);

/// fit() with budget = |mask|, i.e. plain mean loss over the selected examples.
TrainedModel fit(const Dataset& data, const Mask& mask, const InnerConfig& cfg, Rng& rng,
                 const TrainedModel* warm = nullptr);

/// Closed-form ridge solution of  (1/K) sum_i m_i ||W x~_i - y_i||^2 + lambda ||W||^2  over the
/// augmented features x~ = (x, 1). An empty mask yields the zero model.
TrainedModel fit_ridge(const Dataset& data, const Mask& mask, Index budget, double lambda);

double evaluate_loss(const TrainedModel& model, const Dataset& examples);
double accuracy(const TrainedModel& model, const Dataset& data);

} // namespace coreset
