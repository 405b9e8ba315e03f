#pragma once

// Reference selection policies. Every policy returns min(K, n) distinct indices in ascending order.

#include "coreset/core.hpp"
#include "coreset/learner.hpp"
#include "coreset/random.hpp"
#include "coreset/types.hpp"

#include <optional>
#include <string_view>

namespace coreset {

enum class BaselineMethod { uniform, kcenter, hardest, herding, reservoir };

std::string_view to_string(BaselineMethod method);
BaselineMethod parse_baseline_method(std::string_view name);

IndexSet uniform_sample(Index n, Index k, Rng& rng);

/// Greedy farthest-first traversal; the first center is `first_center` or uniform-random.
IndexSet k_center(const MatrixXd& embeddings, Index k, Rng& rng, std::optional<Index> first_center = std::nullopt);
/// Largest distance from any point to its nearest center.
double coverage_radius(const MatrixXd& embeddings, const IndexSet& centers);

/// K examples with the largest loss under `reference`; ties to the lowest index.
IndexSet hardest_samples(const Dataset& data, const TrainedModel& reference, Index k);

/// Per-class herding towards the class-mean embedding. The per-class budget is K / C with the
/// remainder going to the lowest class indices.
IndexSet herding(const MatrixXd& embeddings, const std::vector<int>& labels, int num_classes, Index k);

/// Classic single-pass reservoir over a stream of `stream_length` items.
IndexSet reservoir(Index stream_length, Index k, Rng& rng);

/// Streaming reservoir that can be fed incrementally.
class Reservoir {
public:
  explicit Reservoir(Index capacity);

  /// Offers item `id`; returns true if it was stored.
  bool offer(std::size_t id, Rng& rng);
  const std::vector<std::size_t>& items() const { return slots_; }
  std::size_t seen() const { return seen_; }

private:
  Index capacity_;
  std::vector<std::size_t> slots_;
  std::size_t seen_ = 0;
};

/// Reference model for the embedding-based baselines, trained on a uniform subsample.
TrainedModel pretrain_reference(const Dataset& data, const InnerConfig& cfg, Index subsample, Rng& rng);

/// Runs `method` on `data` with budget `k`, pretraining a reference model where needed.
IndexSet run_baseline(BaselineMethod method, const Dataset& data, Index k, const InnerConfig& cfg, Rng& rng,
                      Index pretrain_size = 1000);

} // namespace coreset
