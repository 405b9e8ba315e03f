#include "coreset/bernoulli.hpp"
#include "coreset/oracle.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace coreset;

namespace {

VectorXd vec(std::initializer_list<double> x) { return Eigen::Map<const VectorXd>(x.begin(), Index(x.size())); }

} // namespace

TEST_CASE("point mass puts all weight on one mask") {
  const VectorXd s = vec({1.0, 0.0, 1.0});
  const auto phi = enumerate_phi(s, [](const Mask& m) { return double(m.support().front() + 10 * m.cardinality()); });
  CHECK(phi.phi == doctest::Approx(20.0));
  CHECK(phi.total_probability == doctest::Approx(1.0));
}

TEST_CASE("constant loss has value c and zero gradient") {
  Rng rng(1);
  for (Index n = 1; n <= 10; ++n) {
    const VectorXd s = testing::uniform_vector(rng, n, 0.05, 0.95);
    const auto phi = enumerate_phi(s, [](const Mask&) { return 3.5; });
    CHECK(phi.phi == doctest::Approx(3.5));
    CHECK(phi.gradient.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(phi.total_probability - 1.0) <= 1e-12);
  }
}

TEST_CASE("cardinality loss has the closed form sum s") {
  // Phi = E|m| = sum s_i, so grad Phi = 1 in every component.
  Rng rng(2);
  const VectorXd s = testing::uniform_vector(rng, 8, 0.05, 0.95);
  const auto phi = enumerate_phi(s, [](const Mask& m) { return double(m.cardinality()); });
  CHECK(phi.phi == doctest::Approx(s.sum()));
  testing::check_close(phi.gradient, VectorXd::Ones(8), 1e-9);
}

TEST_CASE("enumeration gradient agrees with finite differences of Phi") {
  Rng rng(3);
  const Dataset train = testing::random_dataset(rng, 6, 2, 2);
  const Dataset outer = testing::random_dataset(rng, 10, 2, 2);
  const MaskLoss loss = ridge_mask_loss(train, outer, 3, 0.1);
  const VectorXd s = testing::uniform_vector(rng, 6, 0.2, 0.8);
  const auto phi = enumerate_phi(s, loss);
  const VectorXd numeric = finite_difference_gradient([&](const VectorXd& x) { return enumerate_phi(x, loss).phi; }, s);
  testing::check_close(phi.gradient, numeric, 1e-6);
}

TEST_CASE("enumeration size limit") {
  CHECK_THROWS_AS(enumerate_phi(VectorXd::Constant(17, 0.5), [](const Mask&) { return 0.0; }), ConfigError);
}

TEST_CASE("grid projection reference values") {
  testing::check_close(grid_project(vec({0.8, 0.8}), 1, 1e-3), vec({0.5, 0.5}), 1e-12);
  testing::check_close(grid_project(vec({1.5, 0.2, -0.3}), 2, 1e-3), vec({1.0, 0.2, 0.0}), 1e-12);
  testing::check_close(grid_project(vec({0.2, 0.3}), 1, 1e-3), vec({0.2, 0.3}), 1e-12);
  CHECK_THROWS_AS(grid_project(VectorXd::Zero(4), 1, 0.1), ConfigError);
}

TEST_CASE("grid projection matches the independent brute force") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = testing::uniform_index(rng, 1, 3);
    const Index K = testing::uniform_index(rng, 1, 2);
    const VectorXd z = testing::uniform_vector(rng, n, -3.0, 3.0);
    const VectorXd a = grid_project(z, K, 0.05), b = testing::brute_force_projection(z, K, 0.05);
    CHECK((a - z).norm() == doctest::Approx((b - z).norm()).epsilon(1e-9));
  }
}

TEST_CASE("finite differences of a quadratic") {
  // f(x) = x0^2 + x0 x1 at (1, 2): gradient (2 x0 + x1, x0) = (4, 1)
  const auto f = [](const VectorXd& x) { return x[0] * x[0] + x[0] * x[1]; };
  testing::check_close(finite_difference_gradient(f, vec({1.0, 2.0})), vec({4.0, 1.0}), 1e-8);
  // f(x) = x0^2 + x1^2 at (1, 2): gradient (2, 4)
  const auto g = [](const VectorXd& x) { return x.squaredNorm(); };
  testing::check_close(finite_difference_gradient(g, vec({1.0, 2.0})), vec({2.0, 4.0}), 1e-8);
}

TEST_CASE("ridge mask loss is deterministic and defined on the empty mask") {
  Rng rng(5);
  const Dataset train = testing::random_dataset(rng, 5, 2, 3);
  const Dataset outer = testing::random_dataset(rng, 7, 2, 3);
  const MaskLoss loss = ridge_mask_loss(train, outer, 2, 0.1);
  const Mask m = testing::mask_from_code(5, 0b10110);
  CHECK(loss(m) == loss(m));
  // the zero model predicts 0 for every one-hot target: squared error 1 per example
  CHECK(loss(Mask::zeros(5)) == doctest::Approx(1.0));
}
