#include "swpipe/classify/model.h"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <nlohmann/json.hpp>

#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/io.h"

namespace swpipe::classify {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little);
constexpr std::string_view kMagic = "SWMODEL1";
constexpr int kFormatVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kCacheCorrupt, "model file truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json config_to_json(const MlpConfig& c) {
  return {{"hidden", c.hidden},
          {"dropout", c.dropout},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"val_fraction", c.val_fraction},
          {"class_weights", c.class_weights},
          {"seed", c.seed}};
}

json config_to_json(const RfConfig& c) {
  json j = {{"n_trees", c.n_trees},
            {"min_samples_leaf", c.min_samples_leaf},
            {"bootstrap", c.bootstrap},
            {"seed", c.seed}};
  j["max_depth"] = c.max_depth ? json(*c.max_depth) : json(nullptr);
  j["mtry"] = c.mtry ? json(*c.mtry) : json(nullptr);
  return j;
}

MlpConfig mlp_config_from_json(const json& j) {
  MlpConfig c;
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.dropout = j.at("dropout").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.class_weights = j.at("class_weights").get<std::array<double, 2>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

RfConfig rf_config_from_json(const json& j) {
  RfConfig c;
  c.n_trees = j.at("n_trees").get<std::size_t>();
  c.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  c.bootstrap = j.at("bootstrap").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("max_depth").is_null()) c.max_depth = j.at("max_depth").get<std::size_t>();
  if (!j.at("mtry").is_null()) c.mtry = j.at("mtry").get<std::size_t>();
  return c;
}

std::string mlp_blob(const MlpModel& m) {
  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.layers().size()));
  for (const auto& l : m.layers()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.in));
    for (double w : l.weights) put<double>(out, w);
    for (double b : l.bias) put<double>(out, b);
  }
  return out;
}

MlpModel mlp_from_blob(Reader& r) {
  const auto n_layers = r.get<std::uint32_t>();
  std::vector<DenseLayer> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    DenseLayer l;
    l.out = r.get<std::uint32_t>();
    l.in = r.get<std::uint32_t>();
    l.weights.resize(l.out * l.in);
    l.bias.resize(l.out);
    for (double& w : l.weights) w = r.get<double>();
    for (double& b : l.bias) b = r.get<double>();
    layers.push_back(std::move(l));
  }
  return MlpModel(std::move(layers));
}

std::string rf_blob(const RfModel& m) {
  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.trees().size()));
  for (const auto& t : m.trees()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      put<std::int32_t>(out, n.feature);
      put<double>(out, n.threshold);
      put<std::int32_t>(out, n.left);
      put<std::int32_t>(out, n.right);
      put<double>(out, n.positive_fraction);
    }
  }
  return out;
}

RfModel rf_from_blob(Reader& r, std::size_t input_dim) {
  const auto n_trees = r.get<std::uint32_t>();
  std::vector<DecisionTree> trees(n_trees);
  for (auto& t : trees) {
    const auto n_nodes = r.get<std::uint32_t>();
    t.nodes.resize(n_nodes);
    for (auto& n : t.nodes) {
      n.feature = r.get<std::int32_t>();
      n.threshold = r.get<double>();
      n.left = r.get<std::int32_t>();
      n.right = r.get<std::int32_t>();
      n.positive_fraction = r.get<double>();
      const auto limit = static_cast<std::int32_t>(n_nodes);
      if (n.feature >= static_cast<std::int32_t>(input_dim) ||
          (n.feature >= 0 && (n.left <= 0 || n.left >= limit || n.right <= 0 || n.right >= limit))) {
        throw Error(ErrorCode::kCacheCorrupt, "model file has an invalid tree node");
      }
    }
    if (t.nodes.empty()) throw Error(ErrorCode::kCacheCorrupt, "model file has an empty tree");
  }
  return RfModel(input_dim, std::move(trees));
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kind == ModelKind::kMlp ? "mlp" : "rf"; }

TrainedModel::TrainedModel(MlpModel model, MlpConfig config, TrainingMetadata metadata)
    : model_(std::move(model)), config_(std::move(config)), metadata_(metadata) {}

TrainedModel::TrainedModel(RfModel model, RfConfig config, TrainingMetadata metadata)
    : model_(std::move(model)), config_(std::move(config)), metadata_(metadata) {}

ModelKind TrainedModel::kind() const {
  return std::holds_alternative<MlpModel>(model_) ? ModelKind::kMlp : ModelKind::kRf;
}

std::size_t TrainedModel::input_dim() const {
  return std::visit([](const auto& m) { return m.input_dim(); }, model_);
}

int decide_label(double negative_score, double positive_score) {
  return positive_score >= negative_score ? 1 : 0;
}

Predictions predict(const TrainedModel& model, const FeatureMatrix& x) {
  Predictions out;
  if (x.rows() == 0) return out;
  if (x.cols() != model.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("model expects {} features, got {}", model.input_dim(), x.cols()));
  }
  out.labels.reserve(x.rows());
  out.scores.reserve(x.rows());
  if (const auto* mlp = std::get_if<MlpModel>(&model.model())) {
    for (const auto& s : mlp->class_scores(x)) {
      out.labels.push_back(decide_label(s[0], s[1]));
      out.scores.push_back(s[1]);
    }
  } else {
    const auto& rf = std::get<RfModel>(model.model());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double share = rf.positive_vote_share(x.row(r));
      out.labels.push_back(decide_label(1.0 - share, share));
      out.scores.push_back(share);
    }
  }
  return out;
}

std::string serialize_model(const TrainedModel& model) {
  const auto& md = model.metadata();
  json meta = {{"format_version", kFormatVersion},
               {"kind", to_string(model.kind())},
               {"input_dim", model.input_dim()},
               {"training",
                {{"n_train", md.n_train},
                 {"epochs_run", md.epochs_run},
                 {"best_epoch", md.best_epoch},
                 {"best_metric", md.best_metric}}}};
  std::string blob;
  if (model.kind() == ModelKind::kMlp) {
    meta["config"] = config_to_json(std::get<MlpConfig>(model.config()));
    blob = mlp_blob(std::get<MlpModel>(model.model()));
  } else {
    meta["config"] = config_to_json(std::get<RfConfig>(model.config()));
    blob = rf_blob(std::get<RfModel>(model.model()));
  }
  const std::string meta_text = meta.dump();

  std::string out(kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  put<std::uint64_t>(out, blob.size());
  out += blob;
  put<std::uint32_t>(out, crc32(std::as_bytes(std::span(blob.data(), blob.size()))));
  return out;
}

TrainedModel deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw Error(ErrorCode::kCacheCorrupt, "not a model file");
  const auto meta_len = r.get<std::uint32_t>();
  json meta;
  try {
    meta = json::parse(r.take(meta_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCacheCorrupt, std::string("model metadata unreadable: ") + e.what());
  }
  const auto blob_len = r.get<std::uint64_t>();
  const std::string_view blob = r.take(blob_len);
  const auto stored_crc = r.get<std::uint32_t>();
  if (!r.done()) throw Error(ErrorCode::kCacheCorrupt, "trailing bytes in model file");
  if (crc32(std::as_bytes(std::span(blob.data(), blob.size()))) != stored_crc) {
    throw Error(ErrorCode::kCacheCorrupt, "model parameter checksum mismatch");
  }

  try {
    if (meta.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kCacheCorrupt, "unsupported model format version");
    }
    const auto kind = meta.at("kind").get<std::string>();
    const auto input_dim = meta.at("input_dim").get<std::size_t>();
    const auto& t = meta.at("training");
    TrainingMetadata md{t.at("n_train").get<std::size_t>(), t.at("epochs_run").get<std::size_t>(),
                        t.at("best_epoch").get<std::size_t>(), t.at("best_metric").get<double>()};
    Reader br(blob);
    if (kind == "mlp") {
      auto m = mlp_from_blob(br);
      if (m.input_dim() != input_dim) throw Error(ErrorCode::kCacheCorrupt, "input_dim mismatch");
      return TrainedModel(std::move(m), mlp_config_from_json(meta.at("config")), md);
    }
    if (kind == "rf") {
      auto m = rf_from_blob(br, input_dim);
      return TrainedModel(std::move(m), rf_config_from_json(meta.at("config")), md);
    }
    throw Error(ErrorCode::kCacheCorrupt, "unknown model kind " + kind);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCacheCorrupt, std::string("model metadata incomplete: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace swpipe::classify
