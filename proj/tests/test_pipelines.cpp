#include "coreset/pipelines.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace coreset;

namespace {

LoadedData blobs(Index per_class, int C, double sep, std::uint64_t seed, Index dim = 2) {
  Rng rng(seed);
  LoadedData data;
  data.train = gen_blobs(per_class, C, dim, sep, rng);
  data.test = gen_blobs(100, C, dim, sep, rng);
  return data;
}

ExperimentSpec small_spec(Index budget) {
  ExperimentSpec spec;
  spec.selection.budget = budget;
  spec.selection.outer_iters = 20;
  spec.selection.outer_step = 0.1;
  spec.selection.outer_batch = 32;
  spec.selection.inner.epochs = 20;
  spec.pretrain_size = 20;
  return spec;
}

} // namespace

TEST_CASE("data source formats") {
  const auto src = DataSource::parse_format("synth:blobs:n=10,c=3,sep=2.5");
  CHECK(src.format == DataFormat::synth);
  CHECK(src.generator == "blobs");
  CHECK(src.params.at("sep") == "2.5");
  CHECK(DataSource::parse_format("idx").format == DataFormat::idx);
  CHECK(DataSource::parse_format("csv").format == DataFormat::csv);
  CHECK_THROWS_AS(DataSource::parse_format("parquet"), ConfigError);
  CHECK_THROWS_AS(DataSource::parse_format("synth:spiral"), ConfigError);
  CHECK_THROWS_AS(DataSource::parse_format("synth:blobs:n"), ConfigError);

  ExperimentSpec spec;
  spec.source = DataSource::parse_format("synth:blobs:n=10,c=3,d=4,test=30");
  const auto data = load_data(spec);
  CHECK(data.train.size() == 30);
  // test= counts examples per class
  CHECK(data.test.size() == 90);
  CHECK(data.train.feature_dim() == 4);
  spec.source = DataSource::parse_format("synth:blobs:n=1.5");
  CHECK_THROWS_AS(load_data(spec), ConfigError);
  spec.source = DataSource::parse_format("csv");
  CHECK_THROWS_AS(load_data(spec), ConfigError);
}

TEST_CASE("full budget summarization matches full-data training") {
  const auto data = blobs(30, 2, 4.0, 1);
  auto spec = small_spec(60);
  const auto report = run_summarization(spec, data);
  CHECK(report.selection.indices.size() == 60);
  CHECK(std::abs(report.selection.test_accuracy - report.full_data_accuracy) <= 0.01);
}

TEST_CASE("summarization is deterministic and reports baselines") {
  const auto data = blobs(30, 2, 2.0, 2);
  auto spec = small_spec(10);
  spec.noise = NoiseSpec{NoiseKind::symmetric, 0.3};
  spec.validation_size = 10;
  spec.baselines = {BaselineMethod::uniform, BaselineMethod::kcenter};
  const auto a = run_summarization(spec, data), b = run_summarization(spec, data);
  CHECK(a.used_validation);
  CHECK(a.selection.indices == b.selection.indices);
  CHECK(a.selection.to_json().dump() == b.selection.to_json().dump());
  CHECK(a.result.s.values() == b.result.s.values());
  REQUIRE(a.baselines.size() == 2);
  CHECK(a.baselines[1].method == "kcenter");
  CHECK(a.selection.indices.size() == 10);
  CHECK(a.selection.noise_ratio.has_value());
}

TEST_CASE("replay memory shares") {
  CHECK(ReplayMemory::task_shares(10, 3) == std::vector<Index>{4, 3, 3});
  CHECK_THROWS_AS(ReplayMemory::task_shares(2, 3), ConfigError);
  ReplayMemory m(3);
  m.store_task({1, 2});
  CHECK_THROWS_AS(m.store_task({5, 6}), ConfigError);
  m.store_task({7});
  CHECK(m.all() == std::vector<std::size_t>{1, 2, 7});
}

TEST_CASE("single-task continual learning") {
  const auto data = blobs(30, 2, 4.0, 3);
  auto spec = small_spec(10);
  spec.num_tasks = 1;
  spec.memory = 10;
  const auto report = run_continual(spec, data);
  REQUIRE(report.accuracy.size() == 1);
  CHECK(report.final_average == report.accuracy[0][0]);
  CHECK(report.final_average >= 0.9);
  CHECK(report.memory[0].size() == 10);
}

TEST_CASE("memory larger than the data prevents forgetting") {
  const auto data = blobs(20, 4, 6.0, 4, 4);
  auto spec = small_spec(10);
  spec.num_tasks = 2;
  spec.memory = 200;
  spec.selection.inner.epochs = 100;
  const auto report = run_continual(spec, data, MemoryPolicy::uniform);
  REQUIRE(report.accuracy.size() == 2);
  CHECK(report.memory[0].size() == 40);
  CHECK(report.accuracy[1][0] >= report.accuracy[0][0] - 0.02);
}

TEST_CASE("stream shorter than the memory is kept whole") {
  const auto data = blobs(10, 2, 4.0, 5);
  auto spec = small_spec(10);
  spec.memory = 50;
  spec.stream_batch = 7;
  const auto report = run_stream(spec, data);
  CHECK(report.memory.size() == 20);
  CHECK(report.memory_trajectory.size() == 3);
  IndexSet sorted = report.memory;
  std::sort(sorted.begin(), sorted.end());
  IndexSet all(20);
  std::iota(all.begin(), all.end(), std::size_t{0});
  CHECK(sorted == all);
}

TEST_CASE("stream memory respects capacity and is reproducible") {
  const auto data = blobs(30, 2, 3.0, 6);
  auto spec = small_spec(10);
  spec.memory = 15;
  spec.stream_batch = 20;
  spec.selection.outer_iters = 5;
  const auto a = run_stream(spec, data), b = run_stream(spec, data);
  CHECK(a.memory.size() == 15);
  CHECK(a.memory_trajectory == b.memory_trajectory);
  CHECK_THROWS_AS(run_stream([&] {
                    auto bad = spec;
                    bad.stream_batch = 0;
                    return bad;
                  }(), data),
                  ConfigError);
}

TEST_CASE("feature selection with every feature kept") {
  Rng rng(7);
  auto bed = gen_feature_bed(300, 3, 2, rng);
  auto split = random_split(bed.data, 0.3, rng);
  LoadedData data{split.rest, split.holdout, bed.informative, 0};
  auto spec = small_spec(1);
  spec.feature_budget = 5;
  const auto report = run_features(spec, data);
  CHECK(report.features.size() == 5);
  CHECK(std::abs(report.test_accuracy - report.unmasked_accuracy) <= 0.01);
  CHECK(report.recall == 1.0);
  spec.feature_budget = 6;
  CHECK_THROWS_AS(run_features(spec, data), ConfigError);
}

TEST_CASE("features without signal give chance accuracy") {
  Rng rng(8);
  LoadedData data;
  data.train = gen_blobs(200, 2, 5, 0.0, rng);
  data.test = gen_blobs(500, 2, 5, 0.0, rng);
  auto spec = small_spec(1);
  spec.feature_budget = 2;
  const auto report = run_features(spec, data);
  const double se = std::sqrt(0.25 / 1000.0);
  CHECK(std::abs(report.test_accuracy - 0.5) <= 3.0 * se);
  CHECK_FALSE(report.recall.has_value());
}

TEST_CASE("feature masking zeroes dropped columns") {
  const RowMatrixXd X = RowMatrixXd::Ones(2, 3);
  const RowMatrixXd Y = mask_features(X, Mask::from_indices(3, IndexSet{1}));
  CHECK(Y.col(0).isZero());
  CHECK(Y.col(1).isOnes());
  CHECK(Y.col(2).isZero());
}
