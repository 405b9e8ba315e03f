#include "coreset/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace coreset {

std::string_view to_string(BaselineMethod method) {
  switch (method) {
  case BaselineMethod::uniform: return "uniform";
  case BaselineMethod::kcenter: return "kcenter";
  case BaselineMethod::hardest: return "hardest";
  case BaselineMethod::herding: return "herding";
  case BaselineMethod::reservoir: return "reservoir";
  }
  return "?";
}

BaselineMethod parse_baseline_method(std::string_view name) {
  if (name == "uniform") return BaselineMethod::uniform;
  if (name == "kcenter") return BaselineMethod::kcenter;
  if (name == "hardest") return BaselineMethod::hardest;
  if (name == "herding") return BaselineMethod::herding;
  if (name == "reservoir") return BaselineMethod::reservoir;
  throw ConfigError("unknown baseline method '" + std::string(name) + "'");
}

IndexSet uniform_sample(Index n, Index k, Rng& rng) {
  if (k < 0 || k > n) throw ConfigError("uniform sample size exceeds the population");
  IndexSet pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[std::size_t(i)], pool[std::size_t(pick(rng))]);
  }
  pool.resize(std::size_t(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

IndexSet k_center(const MatrixXd& embeddings, Index k, Rng& rng, std::optional<Index> first_center) {
  const Index n = embeddings.rows();
  k = std::clamp<Index>(k, 0, n);
  if (k == 0) return {};
  Index first = first_center.value_or(std::uniform_int_distribution<Index>(0, n - 1)(rng));
  if (first < 0 || first >= n) throw ConfigError("first center out of range");

  std::vector<bool> chosen(std::size_t(n), false);
  VectorXd nearest = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  IndexSet centers;
  Index next = first;
  while (Index(centers.size()) < k) {
    centers.push_back(std::size_t(next));
    chosen[std::size_t(next)] = true;
    nearest = nearest.cwiseMin((embeddings.rowwise() - embeddings.row(next)).rowwise().norm());
    Index best = -1;
    for (Index i = 0; i < n; ++i)
      if (!chosen[std::size_t(i)] && (best < 0 || nearest[i] > nearest[best])) best = i;
    next = best;
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

double coverage_radius(const MatrixXd& embeddings, const IndexSet& centers) {
  if (centers.empty()) return std::numeric_limits<double>::infinity();
  VectorXd nearest = VectorXd::Constant(embeddings.rows(), std::numeric_limits<double>::infinity());
  for (auto c : centers) nearest = nearest.cwiseMin((embeddings.rowwise() - embeddings.row(Index(c))).rowwise().norm());
  return nearest.size() ? nearest.maxCoeff() : 0.0;
}

IndexSet hardest_samples(const Dataset& data, const TrainedModel& reference, Index k) {
  const auto losses = reference.per_example_loss(data);
  IndexSet order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  order.resize(std::size_t(std::clamp<Index>(k, 0, Index(order.size()))));
  std::sort(order.begin(), order.end());
  return order;
}

IndexSet herding(const MatrixXd& embeddings, const std::vector<int>& labels, int num_classes, Index k) {
  const Index n = embeddings.rows();
  if (Index(labels.size()) != n) throw ConfigError("herding: label count does not match embeddings");
  if (k > n) throw ConfigError("herding budget exceeds the number of examples");
  if (num_classes < 1) throw ConfigError("herding needs at least one class");

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) members[std::size_t(labels[i])].push_back(i);

  IndexSet selected;
  for (int c = 0; c < num_classes; ++c) {
    const Index budget = k / num_classes + (c < k % num_classes ? 1 : 0);
    const auto& m = members[std::size_t(c)];
    if (Index(m.size()) < budget)
      throw ConfigError("herding: class " + std::to_string(c) + " has " + std::to_string(m.size()) +
                        " examples but a budget of " + std::to_string(budget));
    if (budget == 0) continue;

    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(embeddings.cols());
    for (auto i : m) mean += embeddings.row(Index(i));
    mean /= double(m.size());

    Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(embeddings.cols());
    std::vector<bool> taken(m.size(), false);
    for (Index step = 1; step <= budget; ++step) {
      std::size_t best = m.size();
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (taken[j]) continue;
        const double dist = (mean - (running + embeddings.row(Index(m[j]))) / double(step)).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best = j;
        }
      }
      taken[best] = true;
      running += embeddings.row(Index(m[best]));
      selected.push_back(m[best]);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

Reservoir::Reservoir(Index capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("reservoir capacity must be at least 1");
  slots_.reserve(std::size_t(capacity));
}

bool Reservoir::offer(std::size_t id, Rng& rng) {
  const std::size_t t = seen_++;
  if (Index(slots_.size()) < capacity_) {
    slots_.push_back(id);
    return true;
  }
  const auto j = std::uniform_int_distribution<std::size_t>(0, t)(rng);
  if (Index(j) < capacity_) {
    slots_[j] = id;
    return true;
  }
  return false;
}

IndexSet reservoir(Index stream_length, Index k, Rng& rng) {
  Reservoir r(k);
  for (Index t = 0; t < stream_length; ++t) r.offer(std::size_t(t), rng);
  IndexSet out = r.items();
  std::sort(out.begin(), out.end());
  return out;
}

TrainedModel pretrain_reference(const Dataset& data, const InnerConfig& cfg, Index subsample, Rng& rng) {
  const Index m = std::min(subsample, data.size());
  const auto idx = uniform_sample(data.size(), m, rng);
  return fit(data, Mask::from_indices(data.size(), idx), cfg, rng);
}

IndexSet run_baseline(BaselineMethod method, const Dataset& data, Index k, const InnerConfig& cfg, Rng& rng,
                      Index pretrain_size) {
  k = std::min(k, data.size());
  switch (method) {
  case BaselineMethod::uniform: return uniform_sample(data.size(), k, rng);
  case BaselineMethod::reservoir: return reservoir(data.size(), k, rng);
  case BaselineMethod::kcenter: {
    const auto ref = pretrain_reference(data, cfg, pretrain_size, rng);
    return k_center(ref.embed(data.features()), k, rng);
  }
  case BaselineMethod::hardest: {
    const auto ref = pretrain_reference(data, cfg, pretrain_size, rng);
    return hardest_samples(data, ref, k);
  }
  case BaselineMethod::herding: {
    const auto ref = pretrain_reference(data, cfg, pretrain_size, rng);
    return herding(ref.embed(data.features()), data.labels(), data.num_classes(), k);
  }
  }
  throw ConfigError("unknown baseline method");
}

} // namespace coreset
