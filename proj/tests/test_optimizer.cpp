#include "coreset/optimizer.hpp"
#include "coreset/oracle.hpp"
#include "coreset/scenarios.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace coreset;

namespace {

VectorXd vec(std::initializer_list<double> x) { return Eigen::Map<const VectorXd>(x.begin(), Index(x.size())); }

OuterState state_at(const VectorXd& s, Index K) { return OuterState{ProbabilityVector(s, K), 0, {}, {}, 0.0, 0, {}}; }

std::vector<std::string> trace_lines(const SelectionTrace& trace) {
  std::vector<std::string> out;
  for (const auto& r : trace.records()) out.push_back(to_json_line(r, false));
  return out;
}

} // namespace

TEST_CASE("initial probabilities") {
  CHECK(init_probabilities(10, 3).values().isApproxToConstant(0.3));
  CHECK(init_probabilities(5, 5).values() == VectorXd::Ones(5));
  CHECK_THROWS_AS(init_probabilities(3, 4), ConfigError);
}

TEST_CASE("pge_step reference updates") {
  const Mask m = Mask::from_indices(2, IndexSet{0});
  SUBCASE("zero loss leaves s unchanged") {
    const auto next = pge_step(state_at(vec({0.5, 0.5}), 1), m, 0.0, 0.1);
    CHECK(next.s.values() == vec({0.5, 0.5}));
  }
  SUBCASE("small step stays feasible") {
    // score (2, -2), so s - 0.1 * (2, -2) = (0.3, 0.7), already in C
    const auto next = pge_step(state_at(vec({0.5, 0.5}), 1), m, 1.0, 0.1);
    testing::check_close(next.s.values(), vec({0.3, 0.7}), 1e-9);
    CHECK(next.iteration == 1);
    CHECK(next.trace.size() == 1);
  }
  SUBCASE("large step is projected to a corner") {
    // pre-projection point (-0.5, 1.5); the grid oracle gives (0, 1)
    const auto next = pge_step(state_at(vec({0.5, 0.5}), 1), m, 1.0, 0.5);
    testing::check_close(next.s.values(), vec({0.0, 1.0}), 1e-9);
    testing::check_close(grid_project(vec({-0.5, 1.5}), 1, 1e-3), vec({0.0, 1.0}), 1e-12);
  }
  SUBCASE("non-finite loss is rejected") {
    CHECK_THROWS_AS(pge_step(state_at(vec({0.5, 0.5}), 1), m, std::nan(""), 0.1), RuntimeFailure);
  }
}

TEST_CASE("control variate warm-up and baseline") {
  PgeOptions options;
  options.control_variate = true;
  const Mask m = Mask::from_indices(2, IndexSet{0});
  auto st = pge_step(state_at(vec({0.5, 0.5}), 1), m, 1.0, 0.1, options);
  CHECK(st.s.values() == vec({0.5, 0.5}));
  CHECK(st.baseline == 1.0);
  // loss equal to the baseline: zero gradient
  st = pge_step(st, m, 1.0, 0.1, options);
  CHECK(st.s.values() == vec({0.5, 0.5}));
  // loss 2 with baseline 1: same move as loss 1 without the control variate
  st = pge_step(st, m, 2.0, 0.1, options);
  testing::check_close(st.s.values(), vec({0.3, 0.7}), 1e-9);
  CHECK(st.baseline == doctest::Approx(4.0 / 3.0));

  options.baseline_decay = 0.5;
  auto ema = pge_step(state_at(vec({0.5, 0.5}), 1), m, 1.0, 0.1, options);
  ema = pge_step(ema, m, 3.0, 0.1, options);
  CHECK(ema.baseline == doctest::Approx(2.0));
  ema = pge_step(ema, m, 4.0, 0.1, options);
  CHECK(ema.baseline == doctest::Approx(3.0));
}

TEST_CASE("pge_step keeps s feasible") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = testing::uniform_index(rng, 1, 30), K = testing::uniform_index(rng, 1, n);
    OuterState st = state_at(testing::feasible_point(rng, n, K), K);
    PgeOptions options;
    options.adaptive = trial % 2 == 0;
    options.control_variate = trial % 3 == 0;
    for (int t = 0; t < 5; ++t) {
      const Mask m = sample_mask(st.s.values(), rng);
      st = pge_step(std::move(st), m, 10.0 * uniform01(rng), 0.5, options);
      CHECK(in_feasible_set(st.s.values(), K));
      CHECK(st.first_moment.allFinite());
    }
  }
}

TEST_CASE("step schedule") {
  CHECK(scheduled_step(2.0, 7, 100, false) == 2.0);
  CHECK(scheduled_step(2.0, 1, 100, true) == doctest::Approx(2.0));
  CHECK(scheduled_step(2.0, 51, 100, true) == doctest::Approx(1.0));
}

TEST_CASE("gradient mapping norm") {
  const ProbabilityVector s(vec({0.5, 0.5}), 1);
  CHECK(gradient_mapping_norm(s, VectorXd::Zero(2), 0.1) == 0.0);
  CHECK(gradient_mapping_norm(s, vec({2.0, -2.0}), 0.1) == doctest::Approx(2.8284271));
  const ProbabilityVector interior(vec({0.3, 0.3, 0.3}), 2);
  const VectorXd g = vec({0.5, -0.2, 0.1});
  CHECK(gradient_mapping_norm(interior, g, 0.1) == doctest::Approx(g.norm()));
  CHECK_THROWS_AS(gradient_mapping_norm(s, g.head(2), 0.0), ConfigError);
}

TEST_CASE("polarization") {
  CHECK(polarization(vec({0.0, 1.0, 0.5}), 0.05) == doctest::Approx(2.0 / 3.0));
  CHECK(polarization(VectorXd::Constant(10, 0.1), 0.05) == 0.0);
  CHECK(polarization(vec({0.0, 1.0, 1.0, 0.0}), 0.05) == 1.0);
}

TEST_CASE("coreset extraction") {
  Rng rng(2);
  CHECK(extract_coreset(ProbabilityVector(vec({0.9, 0.1, 0.8}), 2), 2, ExtractMode::top_k, rng) == IndexSet{0, 2});
  CHECK(extract_coreset(ProbabilityVector(vec({0.5, 0.5, 0.2}), 1), 1, ExtractMode::top_k, rng) == IndexSet{0});
  const ProbabilityVector polarized(vec({1.0, 0.0, 1.0, 0.0, 1.0}), 3);
  for (int i = 0; i < 20; ++i) CHECK(extract_coreset(polarized, 3, ExtractMode::sample, rng) == IndexSet{0, 2, 4});
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = testing::uniform_index(rng, 1, 40), K = testing::uniform_index(rng, 1, n);
    const auto idx = extract_coreset(ProbabilityVector(testing::feasible_point(rng, n, K), K), K, ExtractMode::top_k, rng);
    CHECK(Index(idx.size()) == K);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
  }
}

TEST_CASE("policy-gradient estimate is unbiased") {
  // Recovers g from pge_step with K = n and a step small enough that the box is never hit,
  // then compares the Monte-Carlo mean with the enumerated gradient of Phi.
  Rng gen(3);
  const Index n = 8;
  const Dataset train = testing::random_dataset(gen, n, 2, 2);
  const Dataset outer = testing::random_dataset(gen, 20, 2, 2);
  const MaskLoss loss = ridge_mask_loss(train, outer, 3, 0.1);
  const VectorXd s = testing::uniform_vector(gen, n, 0.3, 0.7);
  const auto exact = enumerate_phi(s, loss);
  const double step = 1e-7;

  for (bool cv : {false, true}) {
    PgeOptions options;
    options.control_variate = cv;
    OuterState base = state_at(s, n);
    base.baseline = exact.phi;
    base.baseline_count = cv ? 1 : 0;
    const int draws = 20000;
    VectorXd sum = VectorXd::Zero(n), sq = VectorXd::Zero(n);
    Rng rng(4);
    for (int i = 0; i < draws; ++i) {
      const Mask m = sample_mask(s, rng);
      const auto next = pge_step(base, m, loss(m), step, options);
      const VectorXd g = (s - next.s.values()) / step;
      sum += g;
      sq += g.cwiseAbs2();
    }
    const VectorXd mean = sum / draws;
    const VectorXd se = ((sq / draws - mean.cwiseAbs2()) / draws).cwiseSqrt();
    for (Index j = 0; j < n; ++j) {
      INFO("control variate ", cv, " component ", j, ": ", mean[j], " vs ", exact.gradient[j], " se ", se[j]);
      CHECK(std::abs(mean[j] - exact.gradient[j]) <= 4.0 * se[j]);
    }
  }
}

TEST_CASE("run_selection is deterministic for a seed") {
  Rng gen(5);
  Dataset data = gen_blobs(20, 2, 2, 3.0, gen);
  SelectionConfig cfg;
  cfg.budget = 5;
  cfg.outer_iters = 15;
  cfg.outer_step = 0.1;
  cfg.outer_batch = 16;
  cfg.inner.epochs = 10;
  cfg.seed = 9;
  const auto a = run_selection(data, data, cfg);
  const auto b = run_selection(data, data, cfg);
  CHECK(a.s.values() == b.s.values());
  CHECK(trace_lines(a.trace) == trace_lines(b.trace));
  CHECK(a.trace.size() == 15);
  cfg.seed = 10;
  CHECK(run_selection(data, data, cfg).s.values() != a.s.values());
}

TEST_CASE("full budget selects everything") {
  Rng gen(6);
  Dataset data = gen_blobs(5, 2, 2, 3.0, gen);
  SelectionConfig cfg;
  cfg.budget = 10;
  cfg.outer_iters = 5;
  cfg.outer_batch = 10;
  const auto r = run_selection(data, data, cfg);
  CHECK(r.s.values() == VectorXd::Ones(10));
}

TEST_CASE("run_selection validates its configuration") {
  Rng gen(7);
  Dataset data = gen_blobs(5, 2, 2, 3.0, gen);
  SelectionConfig cfg;
  cfg.budget = 11;
  CHECK_THROWS_AS(run_selection(data, data, cfg), ConfigError);
}

TEST_CASE("persistent empty masks abort the run") {
  struct Never : SelectionProblem {
    Index size() const override { return 50; }
    double outer_loss(const Mask&, Rng&) override { return 0.0; }
  };
  Never problem;
  SelectionConfig cfg;
  cfg.budget = 1;
  cfg.outer_iters = 100;
  cfg.outer_batch = 1;
  cfg.empty_resamples = 1;
  cfg.max_consecutive_skips = 2;
  // s = 1/50 per item: P(empty) = 0.98^50 ~ 0.36 per draw, so three consecutive skips will
  // happen within 100 iterations for this seed
  CHECK_THROWS_AS(run_selection(problem, cfg), RuntimeFailure);
}
