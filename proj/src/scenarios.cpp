#include "coreset/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace coreset {

void NoiseSpec::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("noise rate must lie in [0, 1]");
}

NoiseSpec NoiseSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("noise must look like 'symmetric:0.4' or 'pairwise:0.3'");
  NoiseSpec spec;
  const auto kind = text.substr(0, colon);
  if (kind == "symmetric")
    spec.kind = NoiseKind::symmetric;
  else if (kind == "pairwise")
    spec.kind = NoiseKind::pairwise;
  else
    throw ConfigError("unknown noise kind '" + std::string(kind) + "'");
  const std::string rate(text.substr(colon + 1));
  try {
    std::size_t used = 0;
    spec.rate = std::stod(rate, &used);
    if (used != rate.size()) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("invalid noise rate '" + rate + "'");
  }
  spec.validate();
  return spec;
}

void ImbalanceSpec::validate() const {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw ConfigError("imbalance sigma must lie in (0, 1]");
}

namespace {

void prepare_for_noise(Dataset& data, double rate) {
  if (data.num_classes() < 2) throw ConfigError("label noise needs at least two classes");
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("noise rate must lie in [0, 1]");
  if (!data.has_clean_labels()) data.mark_labels_clean();
}

std::vector<std::vector<std::size_t>> members_by_class(const Dataset& data) {
  std::vector<std::vector<std::size_t>> members(std::size_t(data.num_classes()));
  for (std::size_t i = 0; i < data.labels().size(); ++i) members[std::size_t(data.labels()[i])].push_back(i);
  return members;
}

double ratio_of_counts(const std::vector<Index>& counts) {
  if (counts.empty()) throw DataError("imbalance factor of a dataset without classes");
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo == 0) throw DataError("imbalance factor undefined: a class has no examples");
  return double(*hi) / double(*lo);
}

} // namespace

Dataset apply_symmetric_noise(Dataset data, double rate, Rng& rng) {
  prepare_for_noise(data, rate);
  const int C = data.num_classes();
  std::uniform_int_distribution<int> other(0, C - 2);
  for (auto& y : data.labels()) {
    if (uniform01(rng) < rate) {
      const int r = other(rng);
      y = r >= y ? r + 1 : r;
    }
  }
  return data;
}

Dataset apply_pairwise_noise(Dataset data, double rate, Rng& rng) {
  prepare_for_noise(data, rate);
  const int C = data.num_classes();
  for (auto& y : data.labels())
    if (uniform01(rng) < rate) y = (y + 1) % C;
  return data;
}

Dataset apply_noise(Dataset data, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  return spec.kind == NoiseKind::symmetric ? apply_symmetric_noise(std::move(data), spec.rate, rng)
                                           : apply_pairwise_noise(std::move(data), spec.rate, rng);
}

IndexSet imbalanced_indices(const Dataset& data, double sigma, Rng& rng) {
  ImbalanceSpec{sigma}.validate();
  auto members = members_by_class(data);
  IndexSet keep;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& m = members[c];
    if (m.empty()) continue;
    const auto target = std::size_t(std::floor(double(m.size()) * std::pow(sigma, double(c)) + 1e-9));
    if (target == 0)
      throw ConfigError("imbalance sigma=" + std::to_string(sigma) + " empties class " + std::to_string(c));
    std::shuffle(m.begin(), m.end(), rng);
    keep.insert(keep.end(), m.begin(), m.begin() + std::ptrdiff_t(target));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

Dataset make_imbalanced(const Dataset& data, double sigma, Rng& rng) {
  if (sigma == 1.0) return data;
  return data.subset(imbalanced_indices(data, sigma, rng));
}

double imbalance_factor(const Dataset& data) { return ratio_of_counts(data.class_counts()); }

double imbalance_factor(const Dataset& data, const IndexSet& indices) {
  std::vector<Index> counts(std::size_t(data.num_classes()), 0);
  for (auto i : indices) {
    if (Index(i) >= data.size()) throw ConfigError("index out of range");
    ++counts[std::size_t(data.labels()[i])];
  }
  return ratio_of_counts(counts);
}

double noise_ratio(const Dataset& data, const IndexSet& indices) {
  const auto& clean = data.clean_labels();
  if (indices.empty()) return 0.0;
  Index corrupted = 0;
  for (auto i : indices) {
    if (Index(i) >= data.size()) throw ConfigError("index out of range");
    corrupted += data.labels()[i] != clean[i];
  }
  return double(corrupted) / double(indices.size());
}

Dataset gen_blobs(Index n_per_class, int num_classes, Index dim, double separation, Rng& rng) {
  if (n_per_class < 1 || num_classes < 1 || dim < 1 || separation < 0.0)
    throw ConfigError("blob generator needs positive sizes and a non-negative separation");
  MatrixXd means = MatrixXd::Zero(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    if (dim >= num_classes)
      means(c, c) = separation / std::sqrt(2.0);
    else
      means(c, 0) = separation * double(c);
  }

  const Index n = n_per_class * num_classes;
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrixXd X(n, dim);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int c = int(i / n_per_class);
    labels[std::size_t(i)] = c;
    for (Index j = 0; j < dim; ++j) X(i, j) = means(c, j) + normal(rng);
  }
  IndexSet order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  Dataset data = Dataset(std::move(X), std::move(labels), num_classes).subset(order);
  data.mark_labels_clean();
  return data;
}

FeatureBed gen_feature_bed(Index n, Index d_informative, Index d_noise, Rng& rng, double margin) {
  if (n < 1 || d_informative < 1 || d_noise < 0) throw ConfigError("feature bed needs positive sizes");
  const Index d = d_informative + d_noise;
  IndexSet columns(static_cast<std::size_t>(d));
  std::iota(columns.begin(), columns.end(), std::size_t{0});
  std::shuffle(columns.begin(), columns.end(), rng);
  IndexSet informative(columns.begin(), columns.begin() + std::ptrdiff_t(d_informative));
  std::sort(informative.begin(), informative.end());

  VectorXd w(d_informative);
  for (Index j = 0; j < d_informative; ++j) w[j] = uniform01(rng) < 0.5 ? -1.0 : 1.0;

  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrixXd X(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  VectorXd xi(d_informative);
  for (Index i = 0; i < n; ++i) {
    double score = 0.0;
    do {
      for (Index j = 0; j < d_informative; ++j) xi[j] = normal(rng);
      score = w.dot(xi);
    } while (std::abs(score) < margin);
    for (Index j = 0; j < d; ++j) X(i, j) = normal(rng);
    for (Index j = 0; j < d_informative; ++j) X(i, Index(informative[std::size_t(j)])) = xi[j];
    labels[std::size_t(i)] = score > 0.0 ? 1 : 0;
  }
  FeatureBed bed{Dataset(std::move(X), std::move(labels), 2), std::move(informative)};
  bed.data.mark_labels_clean();
  return bed;
}

void add_feature_noise(Dataset& data, double stddev, Rng& rng) {
  if (stddev < 0.0) throw ConfigError("noise standard deviation must be non-negative");
  if (stddev == 0.0) return;
  std::normal_distribution<double> normal(0.0, stddev);
  auto& X = data.features();
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) X(i, j) += normal(rng);
}

HoldoutSplit balanced_holdout(const Dataset& data, Index per_class, Rng& rng) {
  auto members = members_by_class(data);
  std::vector<bool> held(std::size_t(data.size()), false);
  IndexSet holdout;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& m = members[c];
    if (!m.empty() && Index(m.size()) <= per_class)
      throw ConfigError("holding out " + std::to_string(per_class) + " examples of class " + std::to_string(c) +
                        " leaves none to train on (class has " + std::to_string(m.size()) + ")");
    std::shuffle(m.begin(), m.end(), rng);
    const auto take = std::min<std::size_t>(m.size(), std::size_t(std::max<Index>(per_class, 0)));
    for (std::size_t k = 0; k < take; ++k) held[m[k]] = true;
  }
  IndexSet rest;
  for (std::size_t i = 0; i < held.size(); ++i) (held[i] ? holdout : rest).push_back(i);
  return {data.subset(rest), data.subset(holdout)};
}

HoldoutSplit random_split(const Dataset& data, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  IndexSet order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = std::size_t(std::llround(double(data.size()) * test_fraction));
  IndexSet test(order.begin(), order.begin() + std::ptrdiff_t(n_test));
  IndexSet train(order.begin() + std::ptrdiff_t(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.subset(train), data.subset(test)};
}

} // namespace coreset
