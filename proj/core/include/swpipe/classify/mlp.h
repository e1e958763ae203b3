#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "swpipe/classify/feature_matrix.h"

namespace swpipe::classify {

struct MlpConfig {
  std::vector<std::size_t> hidden = {64, 32};
  double dropout = 0.2;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 300;
  std::size_t patience = 50;
  // Share of each training portion held out (stratified) for early stopping
  // when the trainer carves its own validation split.
  double val_fraction = 0.1;
  // Cross-entropy weights for classes {0, 1}.
  std::array<double, 2> class_weights = {1.0, 1.0};
  std::uint64_t seed = 0;

  // Throws InvalidParams.
  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

// Dense layer, weights row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

// ReLU hidden layers, 2-way softmax output.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  // Softmax class probabilities {p(0), p(1)} per row; dropout is inactive.
  std::vector<std::array<double, 2>> class_scores(const FeatureMatrix& x) const;

  bool operator==(const MlpModel&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

std::size_t mlp_parameter_count(std::size_t input_dim, std::span<const std::size_t> hidden,
                                std::size_t outputs = 2);

struct MlpTrainingInfo {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based
  double best_metric = 0.0;    // validation F1 at best_epoch
  std::vector<double> train_loss;
  std::vector<double> val_f1;
  std::vector<double> val_loss;  // summed cross-entropy
};

// Mini-batch Adam on weighted cross-entropy with inverted dropout after each
// hidden layer. After every epoch the validation F1 is computed, ties broken
// by lower validation cross-entropy; training stops once that pair has not
// strictly improved for `patience` epochs (or at max_epochs) and the
// best-epoch parameters are returned. Single-threaded
// and bit-reproducible for a given config.
// Throws DegenerateLabels, NonFiniteLoss, DimensionMismatch, InvalidParams.
MlpModel train_mlp(const FeatureMatrix& x, std::span<const int> y, const MlpConfig& config,
                   const FeatureMatrix& x_val, std::span<const int> y_val,
                   MlpTrainingInfo* info = nullptr);

}  // namespace swpipe::classify
