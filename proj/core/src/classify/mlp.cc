#include "swpipe/classify/mlp.h"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numeric>

#include "swpipe/classify/metrics.h"
#include "swpipe/error.h"
#include "swpipe/random.h"

namespace swpipe::classify {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct Params {
  std::vector<Matrix> w;  // out x in
  std::vector<RowVector> b;
};

Params to_params(const std::vector<DenseLayer>& layers) {
  Params p;
  for (const auto& l : layers) {
    p.w.push_back(Eigen::Map<const Matrix>(l.weights.data(), static_cast<Eigen::Index>(l.out),
                                           static_cast<Eigen::Index>(l.in)));
    p.b.push_back(Eigen::Map<const RowVector>(l.bias.data(), static_cast<Eigen::Index>(l.out)));
  }
  return p;
}

std::vector<DenseLayer> to_layers(const Params& p) {
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < p.w.size(); ++i) {
    DenseLayer l;
    l.out = static_cast<std::size_t>(p.w[i].rows());
    l.in = static_cast<std::size_t>(p.w[i].cols());
    l.weights.assign(p.w[i].data(), p.w[i].data() + p.w[i].size());
    l.bias.assign(p.b[i].data(), p.b[i].data() + p.b[i].size());
    layers.push_back(std::move(l));
  }
  return layers;
}

Matrix to_matrix(const FeatureMatrix& x) {
  return Eigen::Map<const Matrix>(x.data().data(), static_cast<Eigen::Index>(x.rows()),
                                  static_cast<Eigen::Index>(x.cols()));
}

// Row-wise softmax over 2 logits, numerically stable.
Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const RowVector e = (logits.row(r).array() - m).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

Matrix forward_eval(const Params& p, const Matrix& x) {
  Matrix h = x;
  for (std::size_t l = 0; l < p.w.size(); ++l) {
    Matrix z = h * p.w[l].transpose();
    z.rowwise() += p.b[l];
    h = l + 1 < p.w.size() ? Matrix(z.cwiseMax(0.0)) : z;
  }
  return softmax(h);
}

int decide(double p0, double p1) { return p1 >= p0 ? 1 : 0; }

}  // namespace

void MlpConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidParams, what); };
  if (hidden.empty()) bad("mlp needs at least one hidden layer");
  for (auto h : hidden) {
    if (h == 0) bad("hidden layer sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (max_epochs == 0) bad("max_epochs must be positive");
  if (patience > max_epochs) bad("patience must not exceed max_epochs");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) bad("val_fraction must be in (0, 1)");
  if (!(class_weights[0] > 0.0 && class_weights[1] > 0.0)) bad("class weights must be positive");
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<std::array<double, 2>> MlpModel::class_scores(const FeatureMatrix& x) const {
  if (x.rows() == 0) return {};
  if (x.cols() != input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("model expects {} features, got {}", input_dim(), x.cols()));
  }
  const Matrix probs = forward_eval(to_params(layers_), to_matrix(x));
  std::vector<std::array<double, 2>> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out[r] = {probs(static_cast<Eigen::Index>(r), 0), probs(static_cast<Eigen::Index>(r), 1)};
  }
  return out;
}

std::size_t mlp_parameter_count(std::size_t input_dim, std::span<const std::size_t> hidden,
                                std::size_t outputs) {
  std::size_t n = 0;
  std::size_t in = input_dim;
  for (auto h : hidden) {
    n += in * h + h;
    in = h;
  }
  return n + in * outputs + outputs;
}

MlpModel train_mlp(const FeatureMatrix& x, std::span<const int> y, const MlpConfig& cfg,
                   const FeatureMatrix& x_val, std::span<const int> y_val, MlpTrainingInfo* info) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (y.size() != n) throw Error(ErrorCode::kLengthMismatch, "x and y differ in length");
  if (y_val.size() != x_val.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "x_val and y_val differ in length");
  }
  if (x_val.rows() == 0) throw Error(ErrorCode::kEmptyInput, "validation set is empty");
  if (x_val.cols() != x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "validation features differ in width");
  }
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::kInvalidParams, "labels must be 0/1");
    positives += static_cast<std::size_t>(v);
  }
  if (n < 2 || positives == 0 || positives == n) {
    throw Error(ErrorCode::kDegenerateLabels, "training labels need both classes");
  }

  Rng rng(cfg.seed);
  const std::size_t d = x.cols();

  // Init: He-uniform for ReLU layers, Glorot-uniform for the output layer.
  Params p;
  std::vector<std::size_t> sizes = {d};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(2);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const bool last = l + 2 == sizes.size();
    const double limit = last ? std::sqrt(6.0 / static_cast<double>(in + out))
                              : std::sqrt(6.0 / static_cast<double>(in));
    Matrix w(out, in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
    p.w.push_back(std::move(w));
    p.b.push_back(RowVector::Zero(out));
  }

  // Adam moments.
  Params m1 = p, m2 = p;
  for (std::size_t l = 0; l < p.w.size(); ++l) {
    m1.w[l].setZero();
    m2.w[l].setZero();
    m1.b[l].setZero();
    m2.b[l].setZero();
  }
  std::size_t step = 0;

  const Matrix x_all = to_matrix(x);
  const Matrix xv = to_matrix(x_val);
  const std::size_t layers = p.w.size();
  const double keep = 1.0 - cfg.dropout;

  MlpTrainingInfo local;
  MlpTrainingInfo& stats = info ? *info : local;
  stats = {};
  Params best = p;
  double best_f1 = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    double epoch_weight = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, n - start);
      const auto B = static_cast<Eigen::Index>(bs);
      Matrix xb(B, static_cast<Eigen::Index>(d));
      Vector sample_w(B);
      std::vector<int> yb(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t src = order[start + i];
        xb.row(static_cast<Eigen::Index>(i)) = x_all.row(static_cast<Eigen::Index>(src));
        yb[i] = y[src];
        sample_w(static_cast<Eigen::Index>(i)) = cfg.class_weights[static_cast<std::size_t>(y[src])];
      }
      const double weight_sum = sample_w.sum();

      // Forward with dropout masks.
      std::vector<Matrix> acts = {xb};   // inputs to each layer
      std::vector<Matrix> masks;         // combined ReLU * dropout mask per hidden layer
      for (std::size_t l = 0; l + 1 < layers; ++l) {
        Matrix z = acts.back() * p.w[l].transpose();
        z.rowwise() += p.b[l];
        Matrix mask(z.rows(), z.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          const bool alive = cfg.dropout == 0.0 || rng.bernoulli(keep);
          mask.data()[i] = (z.data()[i] > 0.0 && alive) ? 1.0 / keep : 0.0;
        }
        acts.push_back(z.cwiseProduct(mask));
        masks.push_back(std::move(mask));
      }
      Matrix logits = acts.back() * p.w.back().transpose();
      logits.rowwise() += p.b.back();
      const Matrix probs = softmax(logits);

      double loss = 0.0;
      Matrix grad = probs;  // dL/dlogits
      for (std::size_t i = 0; i < bs; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        loss -= sample_w(r) * std::log(std::max(probs(r, yb[i]), 1e-300));
        grad(r, yb[i]) -= 1.0;
        grad.row(r) *= sample_w(r) / weight_sum;
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kNonFiniteLoss, fmt::format("loss became non-finite in epoch {}", epoch));
      }
      epoch_loss += loss;
      epoch_weight += weight_sum;

      // Backward + Adam.
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t l = layers; l-- > 0;) {
        const Matrix gw = grad.transpose() * acts[l];
        const RowVector gb = grad.colwise().sum();
        if (l > 0) grad = (grad * p.w[l]).cwiseProduct(masks[l - 1]);

        m1.w[l] = cfg.beta1 * m1.w[l] + (1.0 - cfg.beta1) * gw;
        m2.w[l] = cfg.beta2 * m2.w[l] + (1.0 - cfg.beta2) * gw.cwiseProduct(gw);
        m1.b[l] = cfg.beta1 * m1.b[l] + (1.0 - cfg.beta1) * gb;
        m2.b[l] = cfg.beta2 * m2.b[l] + (1.0 - cfg.beta2) * gb.cwiseProduct(gb);
        p.w[l].array() -= cfg.learning_rate * (m1.w[l].array() / bc1) /
                          ((m2.w[l].array() / bc2).sqrt() + cfg.epsilon);
        p.b[l].array() -= cfg.learning_rate * (m1.b[l].array() / bc1) /
                          ((m2.b[l].array() / bc2).sqrt() + cfg.epsilon);
      }
    }
    stats.train_loss.push_back(epoch_loss / epoch_weight);

    const Matrix val_probs = forward_eval(p, xv);
    std::vector<int> val_pred(x_val.rows());
    for (std::size_t i = 0; i < val_pred.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      val_pred[i] = decide(val_probs(r, 0), val_probs(r, 1));
    }
    const double f1 = compute_metrics(y_val, val_pred).f1;
    double val_loss = 0.0;
    for (std::size_t i = 0; i < val_pred.size(); ++i) {
      val_loss -= std::log(std::max(val_probs(static_cast<Eigen::Index>(i), y_val[i]), 1e-300));
    }
    stats.val_f1.push_back(f1);
    stats.val_loss.push_back(val_loss);
    stats.epochs_run = epoch;
    // F1 saturates on small validation sets; equal F1 falls back to loss.
    if (f1 > best_f1 || (f1 == best_f1 && val_loss < best_loss)) {
      best_f1 = f1;
      best_loss = val_loss;
      best = p;
      stats.best_epoch = epoch;
      stats.best_metric = f1;
    } else if (epoch - stats.best_epoch >= cfg.patience) {
      break;
    }
  }
  return MlpModel(to_layers(best));
}

}  // namespace swpipe::classify
