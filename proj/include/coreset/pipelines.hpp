#pragma once

// Experiment pipelines: data summarization, continual learning with replay,
// streaming replay memory and feature selection.

#include "coreset/baselines.hpp"
#include "coreset/config.hpp"
#include "coreset/core.hpp"
#include "coreset/io.hpp"
#include "coreset/optimizer.hpp"
#include "coreset/scenarios.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coreset {

enum class Pipeline { summarize, continual, stream, features };

enum class DataFormat { idx, csv, synth };

struct DataSource {
  DataFormat format = DataFormat::synth;
  /// idx: image file; csv: data file.
  std::string path;
  /// idx only.
  std::string labels_path;
  std::string test_path;
  std::string test_labels_path;
  /// synth only: generator name ("blobs" or "features") and its key=value parameters.
  std::string generator = "blobs";
  std::map<std::string, std::string> params;

  /// Parses "idx", "csv" or "synth:<gen>:<k=v,...>".
  static DataSource parse_format(const std::string& format);
};

enum class TaskKind { label_split, permuted };

struct ExperimentSpec {
  Pipeline pipeline = Pipeline::summarize;
  DataSource source;
  SelectionConfig selection;
  std::optional<NoiseSpec> noise;
  std::optional<double> imbalance_sigma;
  std::vector<BaselineMethod> baselines;
  /// Balanced held-out validation set used as the outer objective when noise or imbalance is active.
  Index validation_size = 100;
  double test_fraction = 0.2;
  Index pretrain_size = 1000;
  /// Overrides the held-out rule: true always uses a validation set, false never does.
  std::optional<bool> use_validation;

  // continual
  int num_tasks = 3;
  TaskKind task_kind = TaskKind::label_split;
  Index memory = 100;

  // stream
  Index stream_batch = 125;

  // features
  Index feature_budget = 10;
  double pixel_noise_std = 0.0;
};

struct LoadedData {
  Dataset train;
  Dataset test;
  std::optional<IndexSet> informative;
  /// Side length when the features form a square image.
  Index image_side = 0;
};

LoadedData load_data(const ExperimentSpec& spec);

struct SubsetMetrics {
  std::string method;
  double test_accuracy = 0.0;
  std::optional<double> noise_ratio;
  std::optional<double> imbalance_factor;
  IndexSet indices;
  std::optional<std::string> error;

  nlohmann::json to_json() const;
};

struct SummarizationReport {
  SubsetMetrics selection;
  std::vector<SubsetMetrics> baselines;
  double full_data_accuracy = 0.0;
  bool used_validation = false;
  SelectionResult result;
  TrainedModel model;

  ReportFiles files() const;
};

SummarizationReport run_summarization(const ExperimentSpec& spec);
SummarizationReport run_summarization(const ExperimentSpec& spec, const LoadedData& data);

/// One baseline at the configured budget, on the same transformed training set as run_summarization.
SubsetMetrics run_baseline_experiment(const ExperimentSpec& spec, const LoadedData& data, BaselineMethod method);
/// Retrains on `indices` of the transformed training set and scores the result on the test set.
SubsetMetrics evaluate_subset(const ExperimentSpec& spec, const LoadedData& data, const IndexSet& indices);

/// Fixed-capacity replay store; entries are indices into the pipeline's example pool.
class ReplayMemory {
public:
  explicit ReplayMemory(Index capacity) : capacity_(capacity) {}

  Index capacity() const { return capacity_; }
  Index size() const;
  /// Equal share per task, remainder to the earliest tasks.
  static std::vector<Index> task_shares(Index capacity, int num_tasks);

  void store_task(std::vector<std::size_t> indices);
  void replace(std::vector<std::size_t> indices);
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }
  std::vector<std::size_t> all() const;

private:
  Index capacity_;
  std::vector<std::vector<std::size_t>> groups_;
};

enum class MemoryPolicy { selection, uniform };

struct ContinualReport {
  /// accuracy[i][j]: accuracy on task j after training through task i.
  std::vector<std::vector<double>> accuracy;
  double final_average = 0.0;
  std::vector<IndexSet> memory;

  nlohmann::json to_json() const;
};

ContinualReport run_continual(const ExperimentSpec& spec, MemoryPolicy policy = MemoryPolicy::selection);
ContinualReport run_continual(const ExperimentSpec& spec, const LoadedData& data,
                              MemoryPolicy policy = MemoryPolicy::selection);

struct StreamReport {
  double final_accuracy = 0.0;
  double reservoir_accuracy = 0.0;
  double memory_noise_ratio = 0.0;
  double reservoir_noise_ratio = 0.0;
  double stream_noise_ratio = 0.0;
  IndexSet memory;
  /// Memory contents after each batch.
  std::vector<IndexSet> memory_trajectory;

  nlohmann::json to_json() const;
};

StreamReport run_stream(const ExperimentSpec& spec);
StreamReport run_stream(const ExperimentSpec& spec, const LoadedData& data);

struct FeatureReport {
  IndexSet features;
  double test_accuracy = 0.0;
  double unmasked_accuracy = 0.0;
  std::optional<double> recall;
  SelectionResult result;
  Index image_side = 0;

  nlohmann::json to_json() const;
  ReportFiles files() const;
};

FeatureReport run_features(const ExperimentSpec& spec);
FeatureReport run_features(const ExperimentSpec& spec, const LoadedData& data);

/// Zeroes feature columns outside `keep`.
RowMatrixXd mask_features(const RowMatrixXd& X, const Mask& keep);

} // namespace coreset
