#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "swpipe/classify/feature_matrix.h"
#include "swpipe/classify/metrics.h"
#include "swpipe/classify/model.h"

namespace swpipe::classify {

// Fits a model on (x, y). `seed` is derived per fold by the harness.
using Trainer =
    std::function<TrainedModel(const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed)>;

// Carves a stratified validation split of config.val_fraction from the data it
// is given for early stopping, then trains on the remainder.
Trainer mlp_trainer(MlpConfig config);
Trainer rf_trainer(RfConfig config);

// Convenience wrappers used by the CLI and pipeline.
TrainedModel fit_mlp(const FeatureMatrix& x, std::span<const int> y, MlpConfig config,
                     std::uint64_t seed);
TrainedModel fit_rf(const FeatureMatrix& x, std::span<const int> y, RfConfig config,
                    std::uint64_t seed);

struct FoldResult {
  std::size_t index = 0;
  std::vector<std::string> participant_ids;  // held-out participants
  Metrics metrics;
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double mean_f1 = 0.0;
  double std_accuracy = 0.0;
  double std_f1 = 0.0;
  std::uint64_t seed = 0;
};

// Stratified k-fold: each fold's model trains on the other k-1 folds and is
// scored on the held-out fold. Trainer errors propagate.
CvReport cross_validate(std::span<const std::string> participants, const FeatureMatrix& x,
                        std::span<const int> y, const Trainer& trainer, std::size_t k,
                        std::uint64_t seed);

// Structured document form (JSON text).
std::string cv_report_json(const CvReport& report);

// Per-fold table followed by the mean +/- std line.
std::string format_cv_report(const CvReport& report);

// One row of the model x task summary table.
struct CvTableRow {
  int index = 0;
  std::string model;
  std::string task;
  std::string classifier;
  double accuracy = 0.0;
  double f1 = 0.0;
};
std::string format_cv_table(std::span<const CvTableRow> rows);

}  // namespace swpipe::classify
