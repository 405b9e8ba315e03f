#include "coreset/oracle.hpp"

#include "coreset/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

namespace coreset {

PhiValue enumerate_phi(const VectorXd& s, const MaskLoss& loss) {
  const Index n = s.size();
  if (n > kMaxEnumerationSize)
    throw ConfigError("enumeration refused: n=" + std::to_string(n) + " exceeds " + std::to_string(kMaxEnumerationSize));
  if ((s.array() < 0.0).any() || (s.array() > 1.0).any()) throw ConfigError("probabilities must lie in [0, 1]");

  PhiValue out;
  out.gradient = VectorXd::Zero(n);
  ArrayXb bits(n);
  VectorXd score(n);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t code = 0; code < total; ++code) {
    double p = 1.0;
    for (Index i = 0; i < n; ++i) {
      bits[i] = (code >> i) & 1U;
      p *= bits[i] ? s[i] : 1.0 - s[i];
      score[i] = bits[i] ? 1.0 / s[i] : -1.0 / (1.0 - s[i]);
    }
    if (p == 0.0) continue;
    const double value = loss(Mask(bits));
    out.total_probability += p;
    out.phi += p * value;
    out.gradient += (p * value) * score;
  }
  return out;
}

MaskLoss ridge_mask_loss(const Dataset& train, const Dataset& outer, Index budget, double lambda) {
  auto train_ptr = std::make_shared<const Dataset>(train);
  auto outer_ptr = std::make_shared<const Dataset>(outer);
  return [train_ptr, outer_ptr, budget, lambda](const Mask& m) {
    return evaluate_loss(fit_ridge(*train_ptr, m, budget, lambda), *outer_ptr);
  };
}

namespace {

/// Grid step k in [0, cap] nearest to target/res; exact halves go to the smaller step.
long nearest_step(double target, double res, long cap) {
  const double t = target / res;
  long k = long(std::floor(t));
  if (t - double(k) > 0.5) ++k;
  return std::clamp(k, 0L, cap);
}

} // namespace

VectorXd grid_project(const VectorXd& z, Index budget, double resolution) {
  const Index n = z.size();
  if (n > 3) throw ConfigError("grid projection is limited to n <= 3");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw ConfigError("grid resolution must lie in (0, 1]");
  if (n == 0) return VectorXd();
  const long steps = std::lround(1.0 / resolution);
  const long limit = long(budget) * steps;

  // The last coordinate is minimized in closed form over its feasible grid range; the
  // others are enumerated in lexicographic order so the first strict minimum wins ties.
  std::array<long, 3> best{0, 0, 0}, cur{0, 0, 0};
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](long used, int last) {
    const long cap = std::min(steps, limit - used);
    if (cap < 0) return;
    cur[std::size_t(last)] = nearest_step(z[last], resolution, cap);
    double dist = 0.0;
    for (int i = 0; i < int(n); ++i) {
      const double d = double(cur[std::size_t(i)]) * resolution - z[i];
      dist += d * d;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = cur;
    }
  };

  if (n == 1) {
    consider(0, 0);
  } else if (n == 2) {
    for (cur[0] = 0; cur[0] <= steps; ++cur[0]) consider(cur[0], 1);
  } else {
    for (cur[0] = 0; cur[0] <= steps; ++cur[0])
      for (cur[1] = 0; cur[1] <= steps; ++cur[1]) consider(cur[0] + cur[1], 2);
  }
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) out[i] = double(best[std::size_t(i)]) * resolution;
  return out;
}

VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double h) {
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

} // namespace coreset
