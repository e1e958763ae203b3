#pragma once

#include <cstddef>
#include <span>

namespace swpipe::classify {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Positive class is 1 (at risk). Precision, recall and F1 are 0 when their
// denominators vanish.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// Throws LengthMismatch (unequal lengths), EmptyInput, InvalidParams (labels
// outside {0, 1}).
Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred);

Metrics metrics_from_counts(const ConfusionCounts& counts);

}  // namespace swpipe::classify
