#include "swpipe/classify/metrics.h"

#include <fmt/format.h>

#include "swpipe/error.h"

namespace swpipe::classify {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics_from_counts(const ConfusionCounts& c) {
  Metrics m;
  m.counts = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  // 2PR / (P + R) reduces to 2TP / (2TP + FP + FN); one division keeps the
  // result the correctly rounded rational.
  m.f1 = c.tp == 0 ? 0.0 : ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("y_true has {} labels, y_pred has {}", y_true.size(), y_pred.size()));
  }
  if (y_true.empty()) throw Error(ErrorCode::kEmptyInput, "no labels to score");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw Error(ErrorCode::kInvalidParams, fmt::format("label at {} is not 0/1", i));
    }
    if (t == 1) {
      ++(p == 1 ? c.tp : c.fn);
    } else {
      ++(p == 1 ? c.fp : c.tn);
    }
  }
  return metrics_from_counts(c);
}

}  // namespace swpipe::classify
