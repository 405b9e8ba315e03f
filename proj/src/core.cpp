#include "coreset/config.hpp"
#include "coreset/core.hpp"
#include "coreset/trace.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace coreset {

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

Dataset::Dataset(RowMatrixXd features, std::vector<int> labels, int num_classes,
                 std::optional<std::vector<int>> clean_labels)
    : features_(std::move(features)), labels_(std::move(labels)), num_classes_(num_classes),
      clean_labels_(std::move(clean_labels)) {}

Dataset Dataset::from_examples(std::span<const LabeledExample> examples, int num_classes, Index feature_dim) {
  const auto report = dataset_validate(examples, num_classes, feature_dim);
  if (!report.ok()) throw DataError("invalid dataset: " + report.summary());

  const auto n = Index(examples.size());
  RowMatrixXd X(n, feature_dim);
  std::vector<int> labels(examples.size());
  const bool any_clean = std::any_of(examples.begin(), examples.end(),
                                     [](const LabeledExample& e) { return e.clean_label.has_value(); });
  std::optional<std::vector<int>> clean;
  if (any_clean) clean.emplace(examples.size());
  for (Index i = 0; i < n; ++i) {
    X.row(i) = examples[i].features.transpose();
    labels[i] = examples[i].label;
    if (clean) (*clean)[i] = examples[i].clean_label.value_or(examples[i].label);
  }
  return Dataset(std::move(X), std::move(labels), num_classes, std::move(clean));
}

const std::vector<int>& Dataset::clean_labels() const {
  if (!clean_labels_) throw DataError("dataset has no clean labels");
  return *clean_labels_;
}

LabeledExample Dataset::example(Index i) const {
  LabeledExample e;
  e.features = features_.row(i).transpose();
  e.label = labels_[i];
  if (clean_labels_) e.clean_label = (*clean_labels_)[i];
  return e;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  RowMatrixXd X(Index(indices.size()), feature_dim());
  std::vector<int> labels(indices.size());
  std::optional<std::vector<int>> clean;
  if (clean_labels_) clean.emplace(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto i = indices[k];
    if (Index(i) >= size()) throw ConfigError("subset index out of range");
    X.row(Index(k)) = features_.row(Index(i));
    labels[k] = labels_[i];
    if (clean) (*clean)[k] = (*clean_labels_)[i];
  }
  return Dataset(std::move(X), std::move(labels), num_classes_, std::move(clean));
}

std::vector<Index> Dataset::class_counts() const {
  std::vector<Index> counts(std::size_t(std::max(num_classes_, 0)), 0);
  for (int y : labels_)
    if (y >= 0 && y < num_classes_) ++counts[std::size_t(y)];
  return counts;
}

Dataset concatenate(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.feature_dim() != b.feature_dim()) throw DataError("concatenate: feature dimensions differ");
  RowMatrixXd X(a.size() + b.size(), a.feature_dim());
  X << a.features(), b.features();
  std::vector<int> labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  std::optional<std::vector<int>> clean;
  if (a.has_clean_labels() || b.has_clean_labels()) {
    clean = a.has_clean_labels() ? a.clean_labels() : a.labels();
    const auto& tail = b.has_clean_labels() ? b.clean_labels() : b.labels();
    clean->insert(clean->end(), tail.begin(), tail.end());
  }
  return Dataset(std::move(X), std::move(labels), std::max(a.num_classes(), b.num_classes()), std::move(clean));
}

namespace {

void check_label(std::vector<std::string>& out, Index i, int label, int num_classes, const char* what) {
  if (label < 0 || label >= num_classes)
    out.push_back(std::string(what) + " out of range at example " + std::to_string(i) + " (" +
                  std::to_string(label) + " not in [0, " + std::to_string(num_classes) + "))");
}

} // namespace

ValidationReport dataset_validate(const Dataset& dataset) {
  ValidationReport report;
  if (dataset.empty()) report.violations.emplace_back("empty dataset");
  if (dataset.num_classes() < 1) report.violations.emplace_back("num_classes must be positive");
  if (dataset.feature_dim() < 1 && !dataset.empty()) report.violations.emplace_back("feature_dim must be positive");
  if (Index(dataset.labels().size()) != dataset.size())
    report.violations.emplace_back("label count does not match example count");
  for (std::size_t i = 0; i < dataset.labels().size(); ++i)
    check_label(report.violations, Index(i), dataset.labels()[i], dataset.num_classes(), "label");
  if (dataset.has_clean_labels()) {
    const auto& clean = dataset.clean_labels();
    if (clean.size() != dataset.labels().size())
      report.violations.emplace_back("clean label count does not match example count");
    for (std::size_t i = 0; i < clean.size(); ++i)
      check_label(report.violations, Index(i), clean[i], dataset.num_classes(), "clean label");
  }
  if (!dataset.features().allFinite()) report.violations.emplace_back("non-finite feature value");
  return report;
}

ValidationReport dataset_validate(std::span<const LabeledExample> examples, int num_classes, Index feature_dim) {
  ValidationReport report;
  if (examples.empty()) report.violations.emplace_back("empty dataset");
  if (num_classes < 1) report.violations.emplace_back("num_classes must be positive");
  if (feature_dim < 1) report.violations.emplace_back("feature_dim must be positive");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (e.features.size() != feature_dim)
      report.violations.push_back("ragged features at example " + std::to_string(i) + " (" +
                                  std::to_string(e.features.size()) + " != " + std::to_string(feature_dim) + ")");
    else if (!e.features.allFinite())
      report.violations.push_back("non-finite feature at example " + std::to_string(i));
    check_label(report.violations, Index(i), e.label, num_classes, "label");
    if (e.clean_label) check_label(report.violations, Index(i), *e.clean_label, num_classes, "clean label");
  }
  return report;
}

Mask Mask::from_indices(Index n, std::span<const std::size_t> indices) {
  ArrayXb bits = ArrayXb::Constant(n, false);
  for (auto i : indices) {
    if (Index(i) >= n) throw ConfigError("mask index out of range");
    bits[Index(i)] = true;
  }
  return Mask(std::move(bits));
}

IndexSet Mask::support() const {
  IndexSet out;
  out.reserve(std::size_t(cardinality_));
  for (Index i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(std::size_t(i));
  return out;
}

ProbabilityVector::ProbabilityVector(VectorXd values, Index budget) : values_(std::move(values)), budget_(budget) {
  if (budget_ < 1) throw ConfigError("probability budget must be at least 1");
  if (!values_.allFinite() || (values_.array() < 0.0).any() || (values_.array() > 1.0).any())
    throw ConfigError("probabilities must lie in [0, 1]");
}

// ---------------------------------------------------------------------------
// configuration

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
  case LearnerKind::logistic: return "logistic";
  case LearnerKind::mlp: return "mlp";
  case LearnerKind::ridge: return "ridge";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "logistic") return LearnerKind::logistic;
  if (name == "mlp") return LearnerKind::mlp;
  if (name == "ridge") return LearnerKind::ridge;
  throw ConfigError("unknown learner '" + std::string(name) + "'");
}

void InnerConfig::validate() const {
  if (epochs < 1) throw ConfigError("inner epochs must be at least 1");
  if (!(step_size > 0.0)) throw ConfigError("inner step size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (minibatch < 0) throw ConfigError("inner minibatch must be non-negative");
  if (kind == LearnerKind::mlp && (hidden_width < 1 || hidden_layers < 1))
    throw ConfigError("mlp needs at least one hidden layer of positive width");
  if (kind == LearnerKind::ridge && !(ridge_lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
}

std::string_view to_string(ExtractMode mode) { return mode == ExtractMode::sample ? "sample" : "topk"; }

ExtractMode parse_extract_mode(std::string_view name) {
  if (name == "sample") return ExtractMode::sample;
  if (name == "topk" || name == "top_k") return ExtractMode::top_k;
  throw ConfigError("unknown extraction mode '" + std::string(name) + "'");
}

void SelectionConfig::validate(Index n) const {
  if (budget < 1) throw ConfigError("budget K must be at least 1");
  if (budget > n) throw ConfigError("budget K=" + std::to_string(budget) + " exceeds dataset size " + std::to_string(n));
  if (outer_iters < 1) throw ConfigError("outer iterations must be at least 1");
  if (!(outer_step > 0.0)) throw ConfigError("outer step must be positive");
  if (outer_batch < 1) throw ConfigError("outer batch must be at least 1");
  if (!(score_clip > 0.0 && score_clip < 0.5)) throw ConfigError("score clamp must lie in (0, 0.5)");
  if (empty_resamples < 1 || max_consecutive_skips < 1) throw ConfigError("resample limits must be positive");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw ConfigError("baseline decay must lie in [0, 1)");
  if (!(polarization_eps > 0.0 && polarization_eps < 0.5)) throw ConfigError("polarization epsilon must lie in (0, 0.5)");
  inner.validate();
}

// ---------------------------------------------------------------------------
// trace

double SelectionTrace::grad_map_moving_average(std::size_t position, std::size_t window) const {
  if (records_.empty() || window == 0) return 0.0;
  position = std::min(position, records_.size() - 1);
  const std::size_t first = position + 1 >= window ? position + 1 - window : 0;
  double sum = 0.0;
  for (std::size_t i = first; i <= position; ++i) sum += records_[i].grad_map_norm;
  return sum / double(position + 1 - first);
}

std::string to_json_line(const TraceRecord& r, bool include_wall_time) {
  nlohmann::ordered_json j;
  j["iter"] = r.iter;
  j["outer_loss"] = r.outer_loss;
  j["grad_norm"] = r.grad_norm;
  j["grad_map_norm"] = r.grad_map_norm;
  j["polarization"] = r.polarization;
  j["expected_card"] = r.expected_card;
  j["noise_ratio"] = r.noise_ratio ? nlohmann::ordered_json(*r.noise_ratio) : nlohmann::ordered_json(nullptr);
  j["wall_ms"] = include_wall_time ? r.wall_ms : 0.0;
  return j.dump();
}

void write_jsonl(std::ostream& out, const SelectionTrace& trace, bool include_wall_time) {
  for (const auto& r : trace.records()) out << to_json_line(r, include_wall_time) << '\n';
}

} // namespace coreset
