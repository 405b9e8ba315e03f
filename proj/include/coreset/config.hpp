#pragma once

#include "coreset/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace coreset {

enum class LearnerKind { logistic, mlp, ridge };

std::string_view to_string(LearnerKind kind);
/// Parses "logistic" | "mlp" | "ridge"; throws ConfigError otherwise.
LearnerKind parse_learner_kind(std::string_view name);

struct InnerConfig {
  LearnerKind kind = LearnerKind::logistic;
  int epochs = 100;
  double step_size = 0.1;
  double momentum = 0.9;
  /// 0 trains full-batch.
  int minibatch = 0;
  int hidden_width = 100;
  int hidden_layers = 2;
  /// Weights start as N(0, 1) * init_scale / sqrt(fan_in); biases start at zero.
  double init_scale = 1.0;
  double weight_decay = 0.0;
  double ridge_lambda = 1e-2;
  bool warm_start = false;
  double plateau_tolerance = 1e-6;
  int plateau_patience = 5;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

enum class ExtractMode { sample, top_k };

std::string_view to_string(ExtractMode mode);
/// Parses "sample" | "topk" | "top_k".
ExtractMode parse_extract_mode(std::string_view name);

struct SelectionConfig {
  Index budget = 1;
  int outer_iters = 500;
  double outer_step = 2.5;
  /// Outer mini-batch size; capped at the size of the outer example set.
  Index outer_batch = 128;
  InnerConfig inner;
  std::uint64_t seed = 0;
  ExtractMode extract = ExtractMode::top_k;
  bool adaptive_step = false;
  bool cosine_schedule = false;
  bool control_variate = false;
  /// 0: the baseline is the mean of all previous losses. In (0, 1): exponential moving
  /// average with this decay, which tracks a loss that drifts as s improves.
  double baseline_decay = 0.0;
  /// Clamp applied to s inside the score gradient only.
  double score_clip = 1e-6;
  /// Draws per iteration before an all-empty iteration is skipped.
  int empty_resamples = 16;
  /// Consecutive skipped iterations before the run aborts.
  int max_consecutive_skips = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double polarization_eps = 0.05;

  /// Throws ConfigError unless budget and batch fit within n and the step is positive.
  void validate(Index n) const;
};

} // namespace coreset
