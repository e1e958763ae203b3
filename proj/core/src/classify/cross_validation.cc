#include "swpipe/classify/cross_validation.h"

#include <fmt/format.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "swpipe/classify/folds.h"
#include "swpipe/error.h"
#include "swpipe/hashing.h"

namespace swpipe::classify {

TrainedModel fit_mlp(const FeatureMatrix& x, std::span<const int> y, MlpConfig config,
                     std::uint64_t seed) {
  config.validate();
  const auto [train_idx, val_idx] =
      stratified_holdout(y, config.val_fraction, derive_seed(seed, "mlp/val-split"));
  std::vector<int> y_train, y_val;
  for (auto i : train_idx) y_train.push_back(y[i]);
  for (auto i : val_idx) y_val.push_back(y[i]);
  config.seed = derive_seed(seed, "mlp/init");

  MlpTrainingInfo info;
  auto model = train_mlp(x.select_rows(train_idx), y_train, config, x.select_rows(val_idx), y_val,
                         &info);
  TrainingMetadata md{train_idx.size(), info.epochs_run, info.best_epoch, info.best_metric};
  return TrainedModel(std::move(model), config, md);
}

TrainedModel fit_rf(const FeatureMatrix& x, std::span<const int> y, RfConfig config,
                    std::uint64_t seed) {
  config.seed = seed;
  auto model = train_rf(x, y, config);
  return TrainedModel(std::move(model), config, TrainingMetadata{x.rows(), 0, 0, 0.0});
}

Trainer mlp_trainer(MlpConfig config) {
  return [config](const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) {
    return fit_mlp(x, y, config, seed);
  };
}

Trainer rf_trainer(RfConfig config) {
  return [config](const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) {
    return fit_rf(x, y, config, seed);
  };
}

CvReport cross_validate(std::span<const std::string> participants, const FeatureMatrix& x,
                        std::span<const int> y, const Trainer& trainer, std::size_t k,
                        std::uint64_t seed) {
  if (x.rows() != y.size() || participants.size() != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "participants, features and labels differ in length");
  }
  const auto folds = make_folds(participants, y, k, seed);

  CvReport report;
  report.seed = seed;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(y.size(), false);
    for (auto i : folds[f].indices) held[i] = true;
    std::vector<std::size_t> train_idx;
    std::vector<int> y_train, y_test;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!held[i]) {
        train_idx.push_back(i);
        y_train.push_back(y[i]);
      }
    }
    for (auto i : folds[f].indices) y_test.push_back(y[i]);

    const auto model =
        trainer(x.select_rows(train_idx), y_train, derive_seed(seed, fmt::format("cv/fold/{}", f)));
    const auto pred = predict(model, x.select_rows(folds[f].indices));
    report.folds.push_back({f, folds[f].participant_ids, compute_metrics(y_test, pred.labels)});
  }

  const double n = static_cast<double>(report.folds.size());
  for (const auto& r : report.folds) {
    report.mean_accuracy += r.metrics.accuracy / n;
    report.mean_f1 += r.metrics.f1 / n;
  }
  for (const auto& r : report.folds) {
    report.std_accuracy += std::pow(r.metrics.accuracy - report.mean_accuracy, 2) / n;
    report.std_f1 += std::pow(r.metrics.f1 - report.mean_f1, 2) / n;
  }
  report.std_accuracy = std::sqrt(report.std_accuracy);
  report.std_f1 = std::sqrt(report.std_f1);
  return report;
}

std::string cv_report_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    const auto& c = f.metrics.counts;
    folds.push_back({{"fold", f.index},
                     {"participants", f.participant_ids},
                     {"accuracy", f.metrics.accuracy},
                     {"precision", f.metrics.precision},
                     {"recall", f.metrics.recall},
                     {"f1", f.metrics.f1},
                     {"confusion", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}}});
  }
  const nlohmann::json doc = {{"k", report.folds.size()},
                              {"seed", report.seed},
                              {"folds", folds},
                              {"mean", {{"accuracy", report.mean_accuracy}, {"f1", report.mean_f1}}},
                              {"std", {{"accuracy", report.std_accuracy}, {"f1", report.std_f1}}}};
  return doc.dump(2) + "\n";
}

std::string format_cv_report(const CvReport& report) {
  std::string out = fmt::format("{:>4}  {:>4}  {:>8}  {:>9}  {:>6}  {:>6}\n", "fold", "n", "accuracy",
                                "precision", "recall", "f1");
  for (const auto& f : report.folds) {
    out += fmt::format("{:>4}  {:>4}  {:>8.3f}  {:>9.3f}  {:>6.3f}  {:>6.3f}\n", f.index,
                       f.metrics.counts.total(), f.metrics.accuracy, f.metrics.precision,
                       f.metrics.recall, f.metrics.f1);
  }
  out += fmt::format("mean accuracy {:.3f} +/- {:.3f}, mean F1 {:.3f} +/- {:.3f}\n",
                     report.mean_accuracy, report.std_accuracy, report.mean_f1, report.std_f1);
  return out;
}

std::string format_cv_table(std::span<const CvTableRow> rows) {
  std::string out = fmt::format("{:>3}  {:<12}  {:<4}  {:<10}  {:>8}  {:>6}\n", "#", "Model", "Task",
                                "Classifier", "Accuracy", "F1");
  for (const auto& r : rows) {
    out += fmt::format("{:>3}  {:<12}  {:<4}  {:<10}  {:>8.3f}  {:>6.3f}\n", r.index, r.model, r.task,
                       r.classifier, r.accuracy, r.f1);
  }
  return out;
}

}  // namespace swpipe::classify
