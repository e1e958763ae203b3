#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swpipe/classify/feature_matrix.h"
#include "swpipe/classify/mlp.h"
#include "swpipe/classify/random_forest.h"

namespace swpipe::classify {

enum class ModelKind { kMlp, kRf };

std::string_view to_string(ModelKind kind);

struct TrainingMetadata {
  std::size_t n_train = 0;
  std::size_t epochs_run = 0;  // MLP only
  std::size_t best_epoch = 0;  // MLP only
  double best_metric = 0.0;    // MLP only: validation F1 at best_epoch

  bool operator==(const TrainingMetadata&) const = default;
};

// Immutable fitted classifier. predict() is safe to call concurrently.
class TrainedModel {
 public:
  TrainedModel(MlpModel model, MlpConfig config, TrainingMetadata metadata);
  TrainedModel(RfModel model, RfConfig config, TrainingMetadata metadata);

  ModelKind kind() const;
  std::size_t input_dim() const;
  const TrainingMetadata& metadata() const { return metadata_; }

  const std::variant<MlpModel, RfModel>& model() const { return model_; }
  const std::variant<MlpConfig, RfConfig>& config() const { return config_; }

  bool operator==(const TrainedModel&) const = default;

 private:
  std::variant<MlpModel, RfModel> model_;
  std::variant<MlpConfig, RfConfig> config_;
  TrainingMetadata metadata_;
};

struct Predictions {
  std::vector<int> labels;
  std::vector<double> scores;  // positive-class probability in [0, 1]
};

// Argmax over {score(0), score(1)}; exact ties go to the positive class.
int decide_label(double negative_score, double positive_score);

// Throws DimensionMismatch when x.cols() != model.input_dim() (unless x is
// empty, which yields empty predictions).
Predictions predict(const TrainedModel& model, const FeatureMatrix& x);

// Model container:
//   8-byte magic "SWMODEL1"
//   u32 LE length + UTF-8 JSON metadata {format_version, kind, input_dim,
//                                        config, training}
//   u64 LE length + parameter blob (little-endian)
//   u32 LE CRC-32 of the blob
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace swpipe::classify
