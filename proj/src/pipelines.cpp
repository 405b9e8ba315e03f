#include "coreset/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace coreset {

namespace {

// Stream identifiers for derive_seed; each consumer of randomness gets its own.
enum SeedStream : std::uint64_t {
  kTrainData = 101,
  kTestData,
  kSplit,
  kHoldout,
  kImbalance,
  kNoise,
  kExtract,
  kRetrain,
  kFullModel,
  kPermutation,
  kContinualModel,
  kStreamModel,
  kReservoir,
  kPixelNoise,
  kBaselineBase = 1000,
  kTaskSelectionBase = 2000,
  kStreamSelectionBase = 3000,
};

double param_num(const DataSource& src, const std::string& key, double fallback) {
  const auto it = src.params.find(key);
  if (it == src.params.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid value '" + it->second + "' for synthetic parameter '" + key + "'");
}

Index param_int(const DataSource& src, const std::string& key, Index fallback) {
  const double v = param_num(src, key, double(fallback));
  if (v != std::floor(v)) throw ConfigError("synthetic parameter '" + key + "' must be an integer");
  return Index(v);
}

Index square_side(Index d) {
  const auto side = Index(std::llround(std::sqrt(double(d))));
  return side * side == d ? side : 0;
}

IndexSet all_indices(Index n) {
  IndexSet out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

/// Fresh learner trained on `indices` of `data` with a fixed seed, scored on `test`.
std::pair<TrainedModel, double> train_and_score(const Dataset& data, const IndexSet& indices, const Dataset& test,
                                                const InnerConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  InnerConfig fresh = cfg;
  fresh.warm_start = false;
  TrainedModel model = fit(data, Mask::from_indices(data.size(), indices), fresh, rng);
  return {model, accuracy(model, test)};
}

SubsetMetrics subset_metrics(std::string method, const Dataset& train, const IndexSet& indices, const Dataset& test,
                             const InnerConfig& cfg, std::uint64_t seed) {
  SubsetMetrics m;
  m.method = std::move(method);
  m.indices = indices;
  m.test_accuracy = train_and_score(train, indices, test, cfg, seed).second;
  if (train.has_clean_labels()) m.noise_ratio = noise_ratio(train, indices);
  try {
    m.imbalance_factor = imbalance_factor(train, indices);
  } catch (const DataError&) {
  }
  return m;
}

struct PreparedTrain {
  Dataset train;
  Dataset outer;
  bool used_validation = false;
};

/// Held-out validation (taken before corruption), then imbalance, then label noise.
PreparedTrain prepare_training_set(const ExperimentSpec& spec, Dataset train) {
  const std::uint64_t seed = spec.selection.seed;
  if (!train.has_clean_labels()) train.mark_labels_clean();
  PreparedTrain out;
  out.used_validation = spec.use_validation.value_or(spec.noise.has_value() || spec.imbalance_sigma.has_value());
  if (out.used_validation) {
    Rng rng(derive_seed(seed, kHoldout));
    const Index per_class = std::max<Index>(1, spec.validation_size / std::max(1, train.num_classes()));
    auto split = balanced_holdout(train, per_class, rng);
    train = std::move(split.rest);
    out.outer = std::move(split.holdout);
  }
  if (spec.imbalance_sigma) {
    Rng rng(derive_seed(seed, kImbalance));
    train = make_imbalanced(train, *spec.imbalance_sigma, rng);
  }
  if (spec.noise) {
    Rng rng(derive_seed(seed, kNoise));
    train = apply_noise(std::move(train), *spec.noise, rng);
  }
  if (!out.used_validation) out.outer = train;
  out.train = std::move(train);
  return out;
}

std::vector<Dataset> split_tasks(const Dataset& data, const ExperimentSpec& spec, std::vector<IndexSet>* members) {
  const int T = spec.num_tasks;
  if (T < 1) throw ConfigError("need at least one task");
  std::vector<Dataset> tasks;
  if (spec.task_kind == TaskKind::label_split) {
    const int C = data.num_classes();
    if (C < T) throw ConfigError("label-split needs at least as many classes as tasks");
    for (int t = 0; t < T; ++t) {
      const int lo = t * C / T, hi = (t + 1) * C / T;
      IndexSet idx;
      for (std::size_t i = 0; i < data.labels().size(); ++i) {
        const int y = data.has_clean_labels() ? data.clean_labels()[i] : data.labels()[i];
        if (y >= lo && y < hi) idx.push_back(i);
      }
      if (idx.empty()) throw DataError("task " + std::to_string(t) + " has no examples");
      tasks.push_back(data.subset(idx));
      if (members) members->push_back(std::move(idx));
    }
  } else {
    Rng rng(derive_seed(spec.selection.seed, kPermutation));
    for (int t = 0; t < T; ++t) {
      IndexSet perm = all_indices(data.feature_dim());
      if (t > 0) std::shuffle(perm.begin(), perm.end(), rng);
      Dataset task = data;
      for (Index j = 0; j < data.feature_dim(); ++j)
        task.features().col(j) = data.features().col(Index(perm[std::size_t(j)]));
      tasks.push_back(std::move(task));
      if (members) members->push_back(all_indices(data.size()));
    }
  }
  return tasks;
}

/// Warm-started continual training on `data`.
TrainedModel continue_training(const TrainedModel& model, const Dataset& data, const InnerConfig& cfg, Rng& rng) {
  InnerConfig warm = cfg;
  warm.warm_start = true;
  return fit(data, Mask::ones(data.size()), warm, rng, &model);
}

IndexSet select_subset(const Dataset& pool, const Dataset& outer, Index budget, const SelectionConfig& base,
                       std::uint64_t seed, MemoryPolicy policy) {
  if (budget >= pool.size()) return all_indices(pool.size());
  if (policy == MemoryPolicy::uniform) {
    Rng rng(seed);
    return uniform_sample(pool.size(), budget, rng);
  }
  SelectionConfig cfg = base;
  cfg.budget = budget;
  cfg.seed = seed;
  const auto result = run_selection(pool, outer, cfg);
  Rng rng(derive_seed(seed, kExtract));
  return extract_coreset(result.s, budget, cfg.extract, rng);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace

// ---------------------------------------------------------------------------

DataSource DataSource::parse_format(const std::string& format) {
  DataSource src;
  if (format == "idx") {
    src.format = DataFormat::idx;
  } else if (format == "csv") {
    src.format = DataFormat::csv;
  } else if (format.rfind("synth", 0) == 0) {
    src.format = DataFormat::synth;
    // synth:<gen>:<k=v,k=v>
    std::string rest = format.size() > 5 ? format.substr(5) : "";
    if (!rest.empty() && rest.front() != ':') throw ConfigError("invalid format '" + format + "'");
    if (!rest.empty()) rest.erase(0, 1);
    const auto colon = rest.find(':');
    src.generator = rest.substr(0, colon);
    if (src.generator.empty()) src.generator = "blobs";
    if (src.generator != "blobs" && src.generator != "features")
      throw ConfigError("unknown synthetic generator '" + src.generator + "'");
    if (colon != std::string::npos) {
      std::string kvs = rest.substr(colon + 1);
      std::size_t pos = 0;
      while (pos <= kvs.size() && !kvs.empty()) {
        const auto comma = kvs.find(',', pos);
        const auto item = kvs.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("synthetic parameter '" + item + "' is not key=value");
        src.params[item.substr(0, eq)] = item.substr(eq + 1);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
  } else {
    throw ConfigError("unknown data format '" + format + "' (expected idx, csv or synth:<gen>:<params>)");
  }
  return src;
}

LoadedData load_data(const ExperimentSpec& spec) {
  const auto& src = spec.source;
  const std::uint64_t seed = spec.selection.seed;
  LoadedData out;
  switch (src.format) {
  case DataFormat::synth: {
    if (src.generator == "blobs") {
      const Index n = param_int(src, "n", 250);
      const int c = int(param_int(src, "c", 2));
      const Index d = param_int(src, "d", 2);
      const double sep = param_num(src, "sep", 3.0);
      const Index test = param_int(src, "test", 250);
      Rng train_rng(derive_seed(seed, kTrainData)), test_rng(derive_seed(seed, kTestData));
      out.train = gen_blobs(n, c, d, sep, train_rng);
      out.test = gen_blobs(test, c, d, sep, test_rng);
    } else {
      const Index n = param_int(src, "n", 1000);
      const Index inf = param_int(src, "inf", 10);
      const Index noise = param_int(src, "noise", 90);
      const Index test = param_int(src, "test", 1000);
      const double margin = param_num(src, "margin", 0.5);
      Rng rng(derive_seed(seed, kTrainData));
      auto bed = gen_feature_bed(n + test, inf, noise, rng, margin);
      IndexSet train_idx = all_indices(n), test_idx(static_cast<std::size_t>(test));
      std::iota(test_idx.begin(), test_idx.end(), std::size_t(n));
      out.train = bed.data.subset(train_idx);
      out.test = bed.data.subset(test_idx);
      out.informative = bed.informative;
    }
    break;
  }
  case DataFormat::csv:
  case DataFormat::idx: {
    if (src.path.empty()) throw ConfigError("--data is required for file formats");
    auto load = [&](const std::string& path, const std::string& labels) {
      if (src.format == DataFormat::csv) return load_csv(path);
      if (labels.empty()) throw ConfigError("idx format needs a label file (--labels)");
      return load_idx(path, labels);
    };
    Dataset all = load(src.path, src.labels_path);
    if (!src.test_path.empty()) {
      out.train = std::move(all);
      out.test = load(src.test_path, src.test_labels_path);
    } else {
      Rng rng(derive_seed(seed, kSplit));
      auto split = random_split(all, spec.test_fraction, rng);
      out.train = std::move(split.rest);
      out.test = std::move(split.holdout);
    }
    const int C = std::max(out.train.num_classes(), out.test.num_classes());
    out.train = Dataset(out.train.features(), out.train.labels(), C);
    out.test = Dataset(out.test.features(), out.test.labels(), C);
    if (src.format == DataFormat::idx) out.image_side = square_side(out.train.feature_dim());
    break;
  }
  }
  for (const Dataset* d : {&out.train, &out.test}) {
    const auto report = dataset_validate(*d);
    if (!report.ok()) throw DataError("invalid dataset: " + report.summary());
  }
  if (out.train.feature_dim() != out.test.feature_dim()) throw DataError("train and test feature dimensions differ");
  if (out.image_side == 0 && src.format == DataFormat::synth && src.generator == "features")
    out.image_side = square_side(out.train.feature_dim());
  return out;
}

// ---------------------------------------------------------------------------
// summarization

nlohmann::json SubsetMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  if (error) {
    j["error"] = *error;
  } else {
    j["test_accuracy"] = test_accuracy;
    j["noise_ratio"] = optional_json(noise_ratio);
    j["imbalance_factor"] = optional_json(imbalance_factor);
    j["size"] = indices.size();
  }
  return j;
}

ReportFiles SummarizationReport::files() const {
  ReportFiles f;
  f.metrics.push_back(selection.to_json());
  for (const auto& b : baselines) f.metrics.push_back(b.to_json());
  nlohmann::ordered_json summary;
  summary["method"] = "full_data";
  summary["test_accuracy"] = full_data_accuracy;
  summary["used_validation"] = used_validation;
  summary["skipped_iterations"] = result.skipped_iterations;
  summary["gradient_variance"] = result.trace.gradient_variance();
  f.metrics.push_back(summary);
  f.coreset = selection.indices;
  f.probabilities = result.s.values();
  f.trace = result.trace;
  f.model = model;
  return f;
}

namespace {

SubsetMetrics baseline_metrics(const ExperimentSpec& spec, const Dataset& train, const Dataset& test,
                               BaselineMethod method) {
  const std::uint64_t seed = spec.selection.seed;
  Rng rng(derive_seed(seed, kBaselineBase + std::uint64_t(method)));
  const auto idx = run_baseline(method, train, spec.selection.budget, spec.selection.inner, rng, spec.pretrain_size);
  return subset_metrics(std::string(to_string(method)), train, idx, test, spec.selection.inner, derive_seed(seed, kRetrain));
}

} // namespace

SummarizationReport run_summarization(const ExperimentSpec& spec) { return run_summarization(spec, load_data(spec)); }

SummarizationReport run_summarization(const ExperimentSpec& spec, const LoadedData& data) {
  const std::uint64_t seed = spec.selection.seed;
  auto prepared = prepare_training_set(spec, data.train);
  const Dataset& train = prepared.train;

  SummarizationReport report;
  report.used_validation = prepared.used_validation;
  report.result = run_selection(train, prepared.outer, spec.selection);

  Rng extract_rng(derive_seed(seed, kExtract));
  const auto coreset = extract_coreset(report.result.s, spec.selection.budget, spec.selection.extract, extract_rng);
  if (coreset.empty()) throw RuntimeFailure("extracted coreset is empty");
  report.selection = subset_metrics("pbcs", train, coreset, data.test, spec.selection.inner, derive_seed(seed, kRetrain));
  report.model = train_and_score(train, coreset, data.test, spec.selection.inner, derive_seed(seed, kRetrain)).first;
  report.full_data_accuracy =
      train_and_score(train, all_indices(train.size()), data.test, spec.selection.inner, derive_seed(seed, kRetrain)).second;

  for (const auto method : spec.baselines) {
    try {
      report.baselines.push_back(baseline_metrics(spec, train, data.test, method));
    } catch (const Error& e) {
      SubsetMetrics failed;
      failed.method = std::string(to_string(method));
      failed.error = e.what();
      report.baselines.push_back(std::move(failed));
    }
  }
  return report;
}

SubsetMetrics run_baseline_experiment(const ExperimentSpec& spec, const LoadedData& data, BaselineMethod method) {
  return baseline_metrics(spec, prepare_training_set(spec, data.train).train, data.test, method);
}

SubsetMetrics evaluate_subset(const ExperimentSpec& spec, const LoadedData& data, const IndexSet& indices) {
  const auto train = prepare_training_set(spec, data.train).train;
  for (auto i : indices)
    if (Index(i) >= train.size())
      throw DataError("subset index " + std::to_string(i) + " outside a training set of " + std::to_string(train.size()));
  if (indices.empty()) throw DataError("empty subset");
  return subset_metrics("subset", train, indices, data.test, spec.selection.inner, derive_seed(spec.selection.seed, kRetrain));
}

// ---------------------------------------------------------------------------
// replay memory

Index ReplayMemory::size() const {
  Index total = 0;
  for (const auto& g : groups_) total += Index(g.size());
  return total;
}

std::vector<Index> ReplayMemory::task_shares(Index capacity, int num_tasks) {
  if (num_tasks < 1) throw ConfigError("need at least one task");
  std::vector<Index> shares(std::size_t(num_tasks), capacity / num_tasks);
  for (Index t = 0; t < capacity % num_tasks; ++t) ++shares[std::size_t(t)];
  if (std::any_of(shares.begin(), shares.end(), [](Index s) { return s == 0; }))
    throw ConfigError("memory capacity " + std::to_string(capacity) + " leaves a task with a zero share");
  return shares;
}

void ReplayMemory::store_task(std::vector<std::size_t> indices) {
  if (size() + Index(indices.size()) > capacity_) throw ConfigError("replay memory capacity exceeded");
  groups_.push_back(std::move(indices));
}

void ReplayMemory::replace(std::vector<std::size_t> indices) {
  if (Index(indices.size()) > capacity_) throw ConfigError("replay memory capacity exceeded");
  groups_.assign(1, std::move(indices));
}

std::vector<std::size_t> ReplayMemory::all() const {
  std::vector<std::size_t> out;
  for (const auto& g : groups_) out.insert(out.end(), g.begin(), g.end());
  return out;
}

// ---------------------------------------------------------------------------
// continual learning

nlohmann::json ContinualReport::to_json() const {
  nlohmann::ordered_json j;
  j["final_average_accuracy"] = final_average;
  j["accuracy"] = accuracy;
  j["memory_sizes"] = nlohmann::json::array();
  for (const auto& m : memory) j["memory_sizes"].push_back(m.size());
  return j;
}

ContinualReport run_continual(const ExperimentSpec& spec, MemoryPolicy policy) {
  return run_continual(spec, load_data(spec), policy);
}

ContinualReport run_continual(const ExperimentSpec& spec, const LoadedData& data, MemoryPolicy policy) {
  const std::uint64_t seed = spec.selection.seed;
  const auto shares = ReplayMemory::task_shares(spec.memory, spec.num_tasks);

  Dataset base = data.train;
  if (!base.has_clean_labels()) base.mark_labels_clean();
  const auto train_tasks = split_tasks(base, spec, nullptr);
  const auto test_tasks = split_tasks(data.test, spec, nullptr);

  ReplayMemory memory(spec.memory);
  Dataset pool;  // concatenation of task training sets, indexed by memory entries
  const Architecture arch = make_architecture(spec.selection.inner, base.feature_dim(), base.num_classes());
  Rng model_rng(derive_seed(seed, kContinualModel));
  TrainedModel model = TrainedModel::initialize(arch, spec.selection.inner.init_scale, model_rng);

  ContinualReport report;
  for (int t = 0; t < spec.num_tasks; ++t) {
    ExperimentSpec task_spec = spec;
    task_spec.selection.seed = t == 0 ? seed : derive_seed(seed, kTaskSelectionBase + std::uint64_t(t));
    auto prepared = prepare_training_set(task_spec, train_tasks[std::size_t(t)]);
    const Dataset& task = prepared.train;

    const auto replay = memory.all();
    const Dataset current = concatenate(task, pool.subset(replay));
    model = continue_training(model, current, spec.selection.inner, model_rng);

    std::vector<double> row;
    for (const auto& test : test_tasks) row.push_back(accuracy(model, test));
    report.accuracy.push_back(std::move(row));

    const Index share = shares[std::size_t(t)];
    auto chosen = select_subset(task, prepared.outer, share, task_spec.selection, task_spec.selection.seed, policy);
    report.memory.push_back(chosen);
    const auto offset = std::size_t(pool.size());
    for (auto& i : chosen) i += offset;
    memory.store_task(std::move(chosen));
    pool = concatenate(pool, task);
  }
  const auto& last = report.accuracy.back();
  report.final_average = std::accumulate(last.begin(), last.end(), 0.0) / double(last.size());
  return report;
}

// ---------------------------------------------------------------------------
// streaming

nlohmann::json StreamReport::to_json() const {
  nlohmann::ordered_json j;
  j["final_accuracy"] = final_accuracy;
  j["reservoir_accuracy"] = reservoir_accuracy;
  j["memory_noise_ratio"] = memory_noise_ratio;
  j["reservoir_noise_ratio"] = reservoir_noise_ratio;
  j["stream_noise_ratio"] = stream_noise_ratio;
  j["memory_size"] = memory.size();
  j["batches"] = memory_trajectory.size();
  return j;
}

StreamReport run_stream(const ExperimentSpec& spec) { return run_stream(spec, load_data(spec)); }

StreamReport run_stream(const ExperimentSpec& spec, const LoadedData& data) {
  if (spec.stream_batch < 1) throw ConfigError("stream batch size must be at least 1");
  if (spec.memory < 1) throw ConfigError("memory capacity must be at least 1");
  const std::uint64_t seed = spec.selection.seed;

  auto prepared = prepare_training_set(spec, data.train);
  // Concatenate tasks in order so the stream is non-stationary.
  std::vector<IndexSet> members;
  ExperimentSpec split_spec = spec;
  split_spec.task_kind = TaskKind::label_split;
  split_spec.num_tasks = std::min(spec.num_tasks, prepared.train.num_classes());
  split_tasks(prepared.train, split_spec, &members);
  IndexSet order;
  for (const auto& m : members) order.insert(order.end(), m.begin(), m.end());
  const Dataset stream = prepared.train.subset(order);
  const bool validation = prepared.used_validation;

  const Architecture arch = make_architecture(spec.selection.inner, stream.feature_dim(), stream.num_classes());
  Rng model_rng(derive_seed(seed, kStreamModel)), reservoir_model_rng(derive_seed(seed, kStreamModel + 1));
  Rng reservoir_rng(derive_seed(seed, kReservoir));
  TrainedModel model = TrainedModel::initialize(arch, spec.selection.inner.init_scale, model_rng);
  TrainedModel reservoir_model = model;

  StreamReport report;
  IndexSet memory;
  Reservoir res(spec.memory);
  const Index n = stream.size();
  std::uint64_t batch_no = 0;
  for (Index start = 0; start < n; start += spec.stream_batch, ++batch_no) {
    const Index len = std::min(spec.stream_batch, n - start);
    IndexSet batch(static_cast<std::size_t>(len));
    std::iota(batch.begin(), batch.end(), std::size_t(start));

    std::set<std::size_t> merged(memory.begin(), memory.end());
    merged.insert(batch.begin(), batch.end());
    IndexSet candidates(merged.begin(), merged.end());
    if (Index(candidates.size()) <= spec.memory) {
      memory = candidates;
    } else {
      const Dataset pool = stream.subset(candidates);
      const Dataset& outer = validation ? prepared.outer : pool;
      const auto picked = select_subset(pool, outer, spec.memory, spec.selection,
                                        derive_seed(seed, kStreamSelectionBase + batch_no), MemoryPolicy::selection);
      memory.clear();
      for (auto p : picked) memory.push_back(candidates[p]);
    }
    report.memory_trajectory.push_back(memory);

    std::set<std::size_t> train_set(memory.begin(), memory.end());
    train_set.insert(batch.begin(), batch.end());
    model = continue_training(model, stream.subset(IndexSet(train_set.begin(), train_set.end())), spec.selection.inner,
                              model_rng);

    for (auto i : batch) res.offer(i, reservoir_rng);
    std::set<std::size_t> res_set(res.items().begin(), res.items().end());
    res_set.insert(batch.begin(), batch.end());
    reservoir_model = continue_training(reservoir_model, stream.subset(IndexSet(res_set.begin(), res_set.end())),
                                        spec.selection.inner, reservoir_model_rng);
  }

  IndexSet res_items = res.items();
  std::sort(res_items.begin(), res_items.end());
  report.memory = memory;
  report.final_accuracy = accuracy(model, data.test);
  report.reservoir_accuracy = accuracy(reservoir_model, data.test);
  report.memory_noise_ratio = noise_ratio(stream, memory);
  report.reservoir_noise_ratio = noise_ratio(stream, res_items);
  report.stream_noise_ratio = noise_ratio(stream, all_indices(n));
  // Report memory in terms of the prepared training set's order.
  for (auto& m : report.memory) m = order[m];
  for (auto& snapshot : report.memory_trajectory)
    for (auto& m : snapshot) m = order[m];
  return report;
}

// ---------------------------------------------------------------------------
// feature selection

RowMatrixXd mask_features(const RowMatrixXd& X, const Mask& keep) {
  if (keep.size() != X.cols()) throw ConfigError("feature mask length does not match feature dimension");
  RowMatrixXd out = X;
  for (Index j = 0; j < X.cols(); ++j)
    if (!keep[j]) out.col(j).setZero();
  return out;
}

namespace {

/// Bernoulli masks over feature coordinates; the inner learner trains on the masked inputs.
class FeatureProblem final : public SelectionProblem {
public:
  FeatureProblem(const Dataset& train, const Dataset& outer, const InnerConfig& inner)
      : train_(train), outer_(outer), inner_(inner) {
    inner_.warm_start = false;
  }

  Index size() const override { return train_.feature_dim(); }

  double outer_loss(const Mask& mask, Rng& rng) override {
    Dataset masked(mask_features(train_.features(), mask), train_.labels(), train_.num_classes());
    const TrainedModel model = fit(masked, Mask::ones(masked.size()), inner_, rng);
    Dataset outer(mask_features(outer_.features(), mask), outer_.labels(), outer_.num_classes());
    return evaluate_loss(model, outer);
  }

private:
  const Dataset& train_;
  const Dataset& outer_;
  InnerConfig inner_;
};

double masked_accuracy(const Dataset& train, const Dataset& test, const Mask& keep, const InnerConfig& cfg,
                       std::uint64_t seed) {
  Dataset masked_train(mask_features(train.features(), keep), train.labels(), train.num_classes());
  Dataset masked_test(mask_features(test.features(), keep), test.labels(), test.num_classes());
  return train_and_score(masked_train, all_indices(masked_train.size()), masked_test, cfg, seed).second;
}

} // namespace

nlohmann::json FeatureReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = "pbcs_features";
  j["test_accuracy"] = test_accuracy;
  j["unmasked_accuracy"] = unmasked_accuracy;
  j["recall"] = optional_json(recall);
  j["num_features"] = features.size();
  j["features"] = features;
  return j;
}

ReportFiles FeatureReport::files() const {
  ReportFiles f;
  f.metrics.push_back(to_json());
  f.coreset = features;
  f.probabilities = result.s.values();
  f.trace = result.trace;
  if (image_side > 0) {
    f.image_mask = Mask::from_indices(result.s.size(), features);
    f.image_side = image_side;
  }
  return f;
}

FeatureReport run_features(const ExperimentSpec& spec) { return run_features(spec, load_data(spec)); }

FeatureReport run_features(const ExperimentSpec& spec, const LoadedData& data) {
  const std::uint64_t seed = spec.selection.seed;
  const Index d = data.train.feature_dim();
  if (spec.feature_budget < 1 || spec.feature_budget > d)
    throw ConfigError("feature budget " + std::to_string(spec.feature_budget) + " must lie in [1, " + std::to_string(d) + "]");

  Dataset train = data.train, test = data.test;
  if (spec.pixel_noise_std > 0.0) {
    Rng rng(derive_seed(seed, kPixelNoise));
    add_feature_noise(train, spec.pixel_noise_std, rng);
    add_feature_noise(test, spec.pixel_noise_std, rng);
  }
  Rng holdout_rng(derive_seed(seed, kHoldout));
  const Index per_class = std::max<Index>(1, spec.validation_size / std::max(1, train.num_classes()));
  auto split = balanced_holdout(train, per_class, holdout_rng);

  SelectionConfig cfg = spec.selection;
  cfg.budget = spec.feature_budget;
  FeatureProblem problem(split.rest, split.holdout, cfg.inner);

  FeatureReport report;
  report.result = run_selection(problem, cfg);
  Rng extract_rng(derive_seed(seed, kExtract));
  report.features = extract_coreset(report.result.s, cfg.budget, cfg.extract, extract_rng);
  report.image_side = data.image_side;

  const Mask keep = Mask::from_indices(d, report.features);
  report.test_accuracy = masked_accuracy(train, test, keep, cfg.inner, derive_seed(seed, kRetrain));
  report.unmasked_accuracy = masked_accuracy(train, test, Mask::ones(d), cfg.inner, derive_seed(seed, kRetrain));
  if (data.informative && !data.informative->empty()) {
    Index hits = 0;
    for (auto f : report.features) hits += std::binary_search(data.informative->begin(), data.informative->end(), f);
    report.recall = double(hits) / double(data.informative->size());
  }
  return report;
}

} // namespace coreset
