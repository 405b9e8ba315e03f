#include "coreset/learner.hpp"
#include "coreset/scenarios.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace coreset;

namespace {

Dataset balanced(int C, Index per_class) {
  std::vector<int> labels;
  for (Index i = 0; i < per_class; ++i)
    for (int c = 0; c < C; ++c) labels.push_back(c);
  RowMatrixXd X = RowMatrixXd::Random(Index(labels.size()), 2);
  return Dataset(std::move(X), std::move(labels), C);
}

double flipped_fraction(const Dataset& d) {
  Index flips = 0;
  for (Index i = 0; i < d.size(); ++i) flips += d.labels()[std::size_t(i)] != d.clean_labels()[std::size_t(i)];
  return double(flips) / double(d.size());
}

} // namespace

TEST_CASE("noise spec parsing") {
  const auto spec = NoiseSpec::parse("pairwise:0.3");
  CHECK(spec.kind == NoiseKind::pairwise);
  CHECK(spec.rate == 0.3);
  CHECK(NoiseSpec::parse("symmetric:0.4").kind == NoiseKind::symmetric);
  CHECK_THROWS_AS(NoiseSpec::parse("gaussian:0.1"), ConfigError);
  CHECK_THROWS_AS(NoiseSpec::parse("symmetric:1.5"), ConfigError);
  CHECK_THROWS_AS(NoiseSpec::parse("symmetric"), ConfigError);
}

TEST_CASE("zero-rate noise and unit sigma are identities") {
  Rng rng(1);
  const Dataset d = balanced(3, 20);
  for (auto kind : {NoiseKind::symmetric, NoiseKind::pairwise}) {
    const auto out = apply_noise(d, NoiseSpec{kind, 0.0}, rng);
    CHECK(out.labels() == d.labels());
    CHECK(out.clean_labels() == d.labels());
  }
  const auto same = make_imbalanced(d, 1.0, rng);
  CHECK(same.labels() == d.labels());
  CHECK(same.features() == d.features());
}

TEST_CASE("full-rate noise flips every label") {
  Rng rng(2);
  const Dataset two = balanced(2, 10);
  const auto sym = apply_symmetric_noise(two, 1.0, rng);
  for (Index i = 0; i < two.size(); ++i) CHECK(sym.labels()[std::size_t(i)] == 1 - two.labels()[std::size_t(i)]);
  const Dataset four = balanced(4, 10);
  const auto pair = apply_pairwise_noise(four, 1.0, rng);
  for (Index i = 0; i < four.size(); ++i)
    CHECK(pair.labels()[std::size_t(i)] == (four.labels()[std::size_t(i)] + 1) % 4);
}

TEST_CASE("noise rates within three standard errors") {
  Rng rng(3);
  const Dataset ten = balanced(10, 500);
  const double se4 = std::sqrt(0.4 * 0.6 / 5000.0), se3 = std::sqrt(0.3 * 0.7 / 5000.0);
  const auto sym = apply_symmetric_noise(ten, 0.4, rng);
  CHECK(std::abs(flipped_fraction(sym) - 0.4) <= 3.0 * se4);
  const auto pair = apply_pairwise_noise(ten, 0.3, rng);
  CHECK(std::abs(flipped_fraction(pair) - 0.3) <= 3.0 * se3);
}

TEST_CASE("corruption preserves features, order and clean labels") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int C = int(testing::uniform_index(rng, 2, 6));
    Dataset d = testing::random_dataset(rng, 50, 3, C);
    const auto rate = uniform01(rng);
    const auto out = apply_noise(d, NoiseSpec{trial % 2 ? NoiseKind::pairwise : NoiseKind::symmetric, rate}, rng);
    CHECK(out.features() == d.features());
    CHECK(out.clean_labels() == d.labels());
    CHECK(noise_ratio(out, [&] {
            IndexSet all(static_cast<std::size_t>(out.size()));
            std::iota(all.begin(), all.end(), std::size_t{0});
            return all;
          }()) == doctest::Approx(flipped_fraction(out)));
    for (int y : out.labels()) CHECK((y >= 0 && y < C));
  }
}

TEST_CASE("imbalance reference counts") {
  Rng rng(5);
  const auto two = make_imbalanced(balanced(2, 100), 0.5, rng);
  CHECK(two.class_counts() == std::vector<Index>{100, 50});
  CHECK(imbalance_factor(two) == 2.0);

  const auto ten = make_imbalanced(balanced(10, 100), 0.8, rng);
  CHECK(ten.class_counts()[9] == 13);
  CHECK(imbalance_factor(ten) == doctest::Approx(100.0 / 13.0));
  CHECK(imbalance_factor(ten) == doctest::Approx(7.69).epsilon(1e-3));

  CHECK(imbalance_factor(balanced(3, 7)) == 1.0);
  CHECK_THROWS_AS(make_imbalanced(balanced(3, 2), 0.1, rng), ConfigError);
}

TEST_CASE("imbalanced subsample keeps relative order") {
  Rng rng(6);
  const Dataset d = balanced(3, 30);
  const auto idx = imbalanced_indices(d, 0.6, rng);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
}

TEST_CASE("imbalance factor over an index set") {
  Dataset d(RowMatrixXd::Zero(5, 1), {0, 0, 0, 1, 1}, 2);
  CHECK(imbalance_factor(d, IndexSet{0, 1, 2, 3}) == 3.0);
  CHECK_THROWS_AS(imbalance_factor(d, IndexSet{0, 1}), DataError);
}

TEST_CASE("noise ratio reference values") {
  Dataset d(RowMatrixXd::Zero(5, 1), {1, 1, 0, 0, 0}, 2, std::vector<int>{0, 0, 0, 0, 0});
  CHECK(noise_ratio(d, IndexSet{0, 1, 2, 3, 4}) == doctest::Approx(0.4));
  CHECK(noise_ratio(d, IndexSet{2, 3}) == 0.0);
  CHECK(noise_ratio(d, IndexSet{0, 1}) == 1.0);
  CHECK_THROWS_AS(noise_ratio(Dataset(RowMatrixXd::Zero(1, 1), {0}, 1), IndexSet{0}), DataError);
}

TEST_CASE("blobs: separable and indistinguishable") {
  InnerConfig cfg;
  Rng rng(7);
  const auto train = gen_blobs(100, 2, 2, 10.0, rng), test = gen_blobs(100, 2, 2, 10.0, rng);
  const auto model = fit(train, Mask::ones(train.size()), cfg, rng);
  CHECK(accuracy(model, test) >= 0.99);

  for (int C : {2, 4}) {
    const auto a = gen_blobs(200, C, 3, 0.0, rng), b = gen_blobs(500, C, 3, 0.0, rng);
    const double acc = accuracy(fit(a, Mask::ones(a.size()), cfg, rng), b);
    const double p = 1.0 / C, se = std::sqrt(p * (1 - p) / double(b.size()));
    CHECK(std::abs(acc - p) <= 3.0 * se);
  }
}

TEST_CASE("blobs are reproducible and shuffled") {
  Rng a(8), b(8);
  const auto x = gen_blobs(10, 3, 4, 2.0, a), y = gen_blobs(10, 3, 4, 2.0, b);
  CHECK(x.features() == y.features());
  CHECK(x.labels() == y.labels());
  CHECK(x.class_counts() == std::vector<Index>{10, 10, 10});
  CHECK_FALSE(std::is_sorted(x.labels().begin(), x.labels().end()));
}

TEST_CASE("feature bed: noise coordinates are uncorrelated with the label") {
  Rng rng(9);
  const auto bed = gen_feature_bed(2000, 5, 20, rng);
  CHECK(bed.informative.size() == 5);
  VectorXd y(2000);
  for (Index i = 0; i < 2000; ++i) y[i] = bed.data.labels()[std::size_t(i)];
  const VectorXd yc = y.array() - y.mean();
  for (Index j = 0; j < 25; ++j) {
    if (std::binary_search(bed.informative.begin(), bed.informative.end(), std::size_t(j))) continue;
    const VectorXd x = bed.data.features().col(j);
    const VectorXd xc = x.array() - x.mean();
    CHECK(std::abs(xc.dot(yc) / (xc.norm() * yc.norm())) < 0.1);
  }
}

TEST_CASE("feature bed without noise is separable") {
  Rng rng(10);
  const auto bed = gen_feature_bed(500, 10, 0, rng);
  InnerConfig cfg;
  cfg.epochs = 300;
  const auto model = fit(bed.data, Mask::ones(500), cfg, rng);
  CHECK(accuracy(model, bed.data) >= 0.99);
  Rng a(11), b(11);
  CHECK(gen_feature_bed(50, 3, 4, a).data.features() == gen_feature_bed(50, 3, 4, b).data.features());
}

TEST_CASE("balanced holdout and random split") {
  Rng rng(12);
  const auto d = gen_blobs(30, 3, 2, 1.0, rng);
  const auto split = balanced_holdout(d, 5, rng);
  CHECK(split.holdout.class_counts() == std::vector<Index>{5, 5, 5});
  CHECK(split.rest.size() == 75);
  CHECK_THROWS_AS(balanced_holdout(d, 30, rng), ConfigError);
  const auto rs = random_split(d, 0.2, rng);
  CHECK(rs.holdout.size() + rs.rest.size() == d.size());
  CHECK(rs.holdout.size() == 18);
}

TEST_CASE("additive feature noise") {
  Rng rng(13);
  Dataset d(RowMatrixXd::Zero(2000, 2), std::vector<int>(2000, 0), 1);
  add_feature_noise(d, 2.5, rng);
  const double var = d.features().squaredNorm() / double(d.features().size());
  CHECK(std::sqrt(var) == doctest::Approx(2.5).epsilon(0.05));
}
