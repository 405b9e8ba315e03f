#pragma once

// Label corruption, class imbalance, synthetic generators and data-quality metrics.

#include "coreset/core.hpp"
#include "coreset/random.hpp"
#include "coreset/types.hpp"

#include <string_view>

namespace coreset {

enum class NoiseKind { symmetric, pairwise };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double rate = 0.0;

  void validate() const;
  /// Parses "symmetric:0.4" or "pairwise:0.3".
  static NoiseSpec parse(std::string_view text);
};

struct ImbalanceSpec {
  double sigma = 1.0;

  void validate() const;
};

/// Flip each label with probability p to one of the other C - 1 classes, uniformly.
/// Labels without recorded clean labels are marked clean first.
Dataset apply_symmetric_noise(Dataset data, double rate, Rng& rng);
/// Flip each label c with probability p to (c + 1) mod C.
Dataset apply_pairwise_noise(Dataset data, double rate, Rng& rng);
Dataset apply_noise(Dataset data, const NoiseSpec& spec, Rng& rng);

/// Class c keeps floor(n_c * sigma^c) uniformly chosen examples, in their original order.
Dataset make_imbalanced(const Dataset& data, double sigma, Rng& rng);
/// Indices kept by make_imbalanced (ascending).
IndexSet imbalanced_indices(const Dataset& data, double sigma, Rng& rng);

/// n_max / n_min over classes; throws DataError if a class is empty.
double imbalance_factor(const Dataset& data);
/// Same ratio over the classes of `data` restricted to `indices`.
double imbalance_factor(const Dataset& data, const IndexSet& indices);

/// Fraction of `indices` whose label differs from the clean label.
double noise_ratio(const Dataset& data, const IndexSet& indices);

/// Gaussian clusters with unit covariance, one per class, returned in shuffled order.
/// Means are pairwise `separation` apart: scaled simplex vertices when d >= C, otherwise
/// evenly spaced along the first axis.
Dataset gen_blobs(Index n_per_class, int num_classes, Index dim, double separation, Rng& rng);

struct FeatureBed {
  Dataset data;
  /// Coordinates the label depends on (ascending).
  IndexSet informative;
};

/// Binary labels from sign(w . x_informative) with w_j = +-1 and |w . x| >= margin;
/// the remaining coordinates are N(0, 1) noise. Informative coordinates sit at seeded
/// random positions among all d_informative + d_noise columns.
FeatureBed gen_feature_bed(Index n, Index d_informative, Index d_noise, Rng& rng, double margin = 0.5);

/// Adds N(0, std^2) noise to every feature.
void add_feature_noise(Dataset& data, double stddev, Rng& rng);

/// Balanced held-out split: removes up to `per_class` examples of each class from `data`.
struct HoldoutSplit {
  Dataset rest;
  Dataset holdout;
};
/// Throws ConfigError when some class has no more than `per_class` examples.
HoldoutSplit balanced_holdout(const Dataset& data, Index per_class, Rng& rng);

/// Uniform random split into train (fraction) and test.
HoldoutSplit random_split(const Dataset& data, double test_fraction, Rng& rng);

} // namespace coreset
