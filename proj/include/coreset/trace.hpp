#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace coreset {

struct TraceRecord {
  int iter = 0;
  double outer_loss = 0.0;
  double grad_norm = 0.0;
  double grad_map_norm = 0.0;
  double polarization = 0.0;
  double expected_card = 0.0;
  std::optional<double> noise_ratio;
  double wall_ms = 0.0;
};

/// Per-iteration diagnostics of one selection run, plus a running estimate of
/// the policy-gradient variance E||g - mean(g)||^2.
class SelectionTrace {
public:
  void append(const TraceRecord& record) { records_.push_back(record); }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::vector<TraceRecord>& records() { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TraceRecord& back() const { return records_.back(); }
  TraceRecord& back() { return records_.back(); }

  double gradient_variance() const { return variance_samples_ > 1 ? variance_m2_ / double(variance_samples_ - 1) : 0.0; }
  std::size_t variance_samples() const { return variance_samples_; }

  /// Welford update with one policy-gradient sample.
  template <typename Derived>
  void observe_gradient(const Derived& g) {
    ++variance_samples_;
    if (gradient_mean_.size() != g.size()) gradient_mean_ = g.derived() * 0.0;
    auto delta = (g - gradient_mean_).eval();
    gradient_mean_ += delta / double(variance_samples_);
    variance_m2_ += delta.dot(g - gradient_mean_);
  }

  /// Moving average of grad_map_norm over the `window` records ending at `position` (0-based).
  double grad_map_moving_average(std::size_t position, std::size_t window) const;

private:
  std::vector<TraceRecord> records_;
  Eigen::VectorXd gradient_mean_;
  double variance_m2_ = 0.0;
  std::size_t variance_samples_ = 0;
};

/// One JSON object per line with keys iter, outer_loss, grad_norm,
/// grad_map_norm, polarization, expected_card, noise_ratio, wall_ms.
std::string to_json_line(const TraceRecord& record, bool include_wall_time = true);
void write_jsonl(std::ostream& out, const SelectionTrace& trace, bool include_wall_time = true);

} // namespace coreset
