#pragma once

#include "coreset/errors.hpp"
#include "coreset/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coreset {

struct LabeledExample {
  VectorXd features;
  int label = 0;
  std::optional<int> clean_label;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Labeled examples stored as a dense row-major feature matrix. Row index is
/// example identity: masks and coresets refer to rows by position.
class Dataset {
public:
  Dataset() = default;

  /// Unchecked construction; use dataset_validate() or from_examples() for untrusted input.
  Dataset(RowMatrixXd features, std::vector<int> labels, int num_classes,
          std::optional<std::vector<int>> clean_labels = std::nullopt);

  /// Builds a dataset from examples, throwing DataError with every violation if invalid.
  static Dataset from_examples(std::span<const LabeledExample> examples, int num_classes,
                               Index feature_dim);

  Index size() const { return features_.rows(); }
  bool empty() const { return features_.rows() == 0; }
  Index feature_dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  const RowMatrixXd& features() const { return features_; }
  RowMatrixXd& features() { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<int>& labels() { return labels_; }

  bool has_clean_labels() const { return clean_labels_.has_value(); }
  const std::vector<int>& clean_labels() const;
  /// Records the current labels as the clean ground truth.
  void mark_labels_clean() { clean_labels_ = labels_; }
  void set_clean_labels(std::vector<int> clean) { clean_labels_ = std::move(clean); }

  LabeledExample example(Index i) const;

  /// Rows `indices` in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  std::vector<Index> class_counts() const;

private:
  RowMatrixXd features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  std::optional<std::vector<int>> clean_labels_;
};

Dataset concatenate(const Dataset& a, const Dataset& b);

ValidationReport dataset_validate(const Dataset& dataset);
ValidationReport dataset_validate(std::span<const LabeledExample> examples, int num_classes,
                                  Index feature_dim);

/// Binary inclusion vector with its cardinality cached.
class Mask {
public:
  Mask() = default;
  explicit Mask(ArrayXb bits) : bits_(std::move(bits)), cardinality_(bits_.count()) {}

  static Mask zeros(Index n) { return Mask(ArrayXb::Constant(n, false)); }
  static Mask ones(Index n) { return Mask(ArrayXb::Constant(n, true)); }
  static Mask from_indices(Index n, std::span<const std::size_t> indices);

  Index size() const { return bits_.size(); }
  Index cardinality() const { return cardinality_; }
  bool empty() const { return cardinality_ == 0; }
  bool operator[](Index i) const { return bits_[i]; }
  const ArrayXb& bits() const { return bits_; }

  /// Positions of the set bits in ascending order.
  IndexSet support() const;

  bool operator==(const Mask& other) const {
    return bits_.size() == other.bits_.size() && (bits_ == other.bits_).all();
  }

private:
  ArrayXb bits_;
  Index cardinality_ = 0;
};

/// Per-example inclusion probabilities s with the expected-size budget K.
class ProbabilityVector {
public:
  ProbabilityVector() = default;
  /// Throws ConfigError unless every component lies in [0, 1] and budget >= 1.
  ProbabilityVector(VectorXd values, Index budget);

  Index size() const { return values_.size(); }
  Index budget() const { return budget_; }
  const VectorXd& values() const { return values_; }
  double operator[](Index i) const { return values_[i]; }

private:
  VectorXd values_;
  Index budget_ = 1;
};

} // namespace coreset
