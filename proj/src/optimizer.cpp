#include "coreset/optimizer.hpp"

#include "coreset/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace coreset {

CoresetProblem::CoresetProblem(const Dataset& train, const Dataset& outer, const SelectionConfig& cfg)
    : train_(train), outer_(outer), cfg_(cfg) {
  if (outer_.empty()) throw ConfigError("outer example set is empty");
  if (outer_.feature_dim() != train_.feature_dim()) throw DataError("outer examples have a different feature dimension");
}

double CoresetProblem::outer_loss(const Mask& mask, Rng& rng) {
  const TrainedModel* warm = (cfg_.inner.warm_start && last_model_) ? &*last_model_ : nullptr;
  TrainedModel model = fit(train_, mask, cfg_.budget, cfg_.inner, rng, warm);
  double loss = 0.0;
  if (cfg_.outer_batch >= outer_.size()) {
    loss = evaluate_loss(model, outer_);
  } else {
    IndexSet batch(static_cast<std::size_t>(outer_.size()));
    std::iota(batch.begin(), batch.end(), std::size_t{0});
    std::shuffle(batch.begin(), batch.end(), rng);
    batch.resize(std::size_t(cfg_.outer_batch));
    std::sort(batch.begin(), batch.end());
    loss = evaluate_loss(model, outer_.subset(batch));
  }
  if (cfg_.inner.warm_start) last_model_ = std::move(model);
  return loss;
}

std::optional<double> CoresetProblem::noise_ratio(const IndexSet& indices) const {
  if (!train_.has_clean_labels() || indices.empty()) return std::nullopt;
  return coreset::noise_ratio(train_, indices);
}

PgeOptions PgeOptions::from(const SelectionConfig& cfg) {
  PgeOptions o;
  o.control_variate = cfg.control_variate;
  o.baseline_decay = cfg.baseline_decay;
  o.adaptive = cfg.adaptive_step;
  o.beta1 = cfg.adam_beta1;
  o.beta2 = cfg.adam_beta2;
  o.adam_epsilon = cfg.adam_epsilon;
  o.clamp.epsilon = cfg.score_clip;
  o.polarization_eps = cfg.polarization_eps;
  o.diagnostic_step = cfg.outer_step;
  return o;
}

ProbabilityVector init_probabilities(Index n, Index budget) {
  if (budget < 1 || budget > n)
    throw ConfigError("budget K=" + std::to_string(budget) + " must lie in [1, n=" + std::to_string(n) + "]");
  return ProbabilityVector(VectorXd::Constant(n, double(budget) / double(n)), budget);
}

OuterState pge_step(OuterState state, const Mask& m, double batch_loss, double step, const PgeOptions& options) {
  if (!std::isfinite(batch_loss)) throw RuntimeFailure("outer loss is not finite");
  if (!(step > 0.0)) throw ConfigError("outer step must be positive");
  const VectorXd& s = state.s.values();
  const Index budget = state.s.budget();

  // With the control variate on, the first loss only seeds the baseline: b = 0 would apply the
  // raw loss to the 1/s score and zero out every selected item in one step.
  const bool warmup = options.control_variate && state.baseline_count == 0;
  const double baseline = options.control_variate ? state.baseline : 0.0;
  const VectorXd g = warmup ? VectorXd::Zero(s.size()).eval()
                            : ((batch_loss - baseline) * score_gradient(s, m, options.clamp)).eval();
  if (!g.allFinite()) throw RuntimeFailure("policy gradient is not finite at iteration " + std::to_string(state.iteration + 1));

  VectorXd direction = g;
  if (options.adaptive) {
    if (state.first_moment.size() != g.size()) {
      state.first_moment = VectorXd::Zero(g.size());
      state.second_moment = VectorXd::Zero(g.size());
    }
    state.first_moment = options.beta1 * state.first_moment + (1.0 - options.beta1) * g;
    state.second_moment = options.beta2 * state.second_moment + (1.0 - options.beta2) * g.cwiseAbs2();
    const double t = double(state.iteration + 1);
    const double c1 = 1.0 - std::pow(options.beta1, t);
    const double c2 = 1.0 - std::pow(options.beta2, t);
    direction = (state.first_moment / c1).array() / ((state.second_moment / c2).array().sqrt() + options.adam_epsilon);
  }

  TraceRecord rec;
  rec.iter = state.iteration + 1;
  rec.outer_loss = batch_loss;
  rec.grad_norm = g.norm();
  rec.grad_map_norm = gradient_mapping_norm(s, g, options.diagnostic_step > 0.0 ? options.diagnostic_step : step,
                                            budget, options.projection);

  state.s = ProbabilityVector(project((s - step * direction).eval(), budget, options.projection), budget);
  rec.polarization = polarization(state.s.values(), options.polarization_eps);
  rec.expected_card = expected_cardinality(state.s.values());

  state.baseline_count += 1;
  const double weight = (options.baseline_decay > 0.0 && state.baseline_count > 1)
                            ? 1.0 - options.baseline_decay
                            : 1.0 / double(state.baseline_count);
  state.baseline += weight * (batch_loss - state.baseline);
  state.iteration += 1;
  state.trace.observe_gradient(g);
  state.trace.append(rec);
  return state;
}

double scheduled_step(double base, int t, int total, bool cosine) {
  if (!cosine || total <= 1) return base;
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * double(t - 1) / double(total)));
}

SelectionResult run_selection(SelectionProblem& problem, const SelectionConfig& cfg) {
  const Index n = problem.size();
  cfg.validate(n);

  OuterState state;
  state.s = init_probabilities(n, cfg.budget);
  SelectionResult result;
  if (cfg.budget == n) {
    // C = [0, 1]^n and every example is in the coreset; nothing to optimize.
    result.s = ProbabilityVector(VectorXd::Ones(n), cfg.budget);
    return result;
  }

  const PgeOptions options = PgeOptions::from(cfg);
  int consecutive_skips = 0;
  for (int t = 1; t <= cfg.outer_iters; ++t) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(cfg.seed, std::uint64_t(t)));

    Mask mask;
    for (int attempt = 0; attempt < cfg.empty_resamples; ++attempt) {
      mask = sample_mask(state.s.values(), rng);
      if (!mask.empty()) break;
    }
    if (mask.empty()) {
      ++result.skipped_iterations;
      if (++consecutive_skips >= cfg.max_consecutive_skips)
        throw RuntimeFailure("aborting selection: " + std::to_string(consecutive_skips) +
                             " consecutive iterations drew only empty masks");
      continue;
    }
    consecutive_skips = 0;

    const double loss = problem.outer_loss(mask, rng);
    const double step = scheduled_step(cfg.outer_step, t, cfg.outer_iters, cfg.cosine_schedule);
    state = pge_step(std::move(state), mask, loss, step, options);

    auto& rec = state.trace.back();
    rec.iter = t;
    rec.noise_ratio = problem.noise_ratio(top_k_indices(state.s.values(), cfg.budget));
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  result.s = std::move(state.s);
  result.trace = std::move(state.trace);
  return result;
}

SelectionResult run_selection(const Dataset& dataset, const Dataset& outer_examples, const SelectionConfig& cfg) {
  CoresetProblem problem(dataset, outer_examples, cfg);
  return run_selection(problem, cfg);
}

IndexSet top_k_indices(const VectorXd& values, Index k) {
  IndexSet order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[Index(a)] > values[Index(b)]; });
  order.resize(std::size_t(std::clamp<Index>(k, 0, values.size())));
  std::sort(order.begin(), order.end());
  return order;
}

IndexSet extract_coreset(const ProbabilityVector& s, Index budget, ExtractMode mode, Rng& rng) {
  if (mode == ExtractMode::top_k) return top_k_indices(s.values(), budget);
  return sample_mask(s.values(), rng).support();
}

} // namespace coreset
