#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <numeric>

#include "swpipe/classify/cross_validation.h"
#include "swpipe/classify/feature_io.h"
#include "swpipe/classify/folds.h"
#include "swpipe/classify/metrics.h"
#include "swpipe/classify/model.h"
#include "swpipe/io.h"
#include "swpipe/random.h"
#include "test_util.h"

namespace swpipe::classify {
namespace {

using testing::TempDir;

struct Data {
  FeatureMatrix x;
  std::vector<int> y;
};

Data clusters(std::size_t n, std::size_t d, double sep, std::uint64_t seed) {
  Rng rng(seed);
  Data out{FeatureMatrix(n, d), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.y[i] = static_cast<int>(i % 2);
    for (std::size_t c = 0; c < d; ++c) out.x(i, c) = (out.y[i] ? sep : -sep) + rng.normal();
  }
  return out;
}

TEST(Metrics, HandWorked) {
  const std::vector<int> t = {1, 1, 0, 0, 1}, p = {1, 0, 0, 1, 1};
  const auto m = compute_metrics(t, p);
  EXPECT_EQ(m.counts, (ConfusionCounts{2, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
}

TEST(Metrics, DegenerateDenominators) {
  const std::vector<int> t = {0, 0}, p = {0, 0};
  const auto m = compute_metrics(t, p);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
  const std::vector<int> one = {1}, bad = {2};
  EXPECT_SWPIPE_ERROR(compute_metrics(t, one), kLengthMismatch);
  EXPECT_SWPIPE_ERROR(compute_metrics(std::vector<int>{}, std::vector<int>{}), kEmptyInput);
  EXPECT_SWPIPE_ERROR(compute_metrics(one, bad), kInvalidParams);
}

TEST(Folds, StratifiedAndReproducible) {
  std::vector<int> y(23);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 9 ? 1 : 0;
  const auto folds = make_fold_indices(y, 4, 11);
  ASSERT_EQ(folds.size(), 4u);
  std::vector<int> seen(y.size());
  for (const auto& f : folds) {
    EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
    std::size_t pos = 0;
    for (auto i : f) {
      ++seen[i];
      pos += y[i];
    }
    EXPECT_TRUE(pos == 2 || pos == 3);
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  EXPECT_EQ(make_fold_indices(y, 4, 11), folds);
  EXPECT_NE(make_fold_indices(y, 4, 12), folds);
  EXPECT_SWPIPE_ERROR(make_fold_indices(y, 10, 1), kTooFewSamples);
}

TEST(Folds, HoldoutTakesFromEachClass) {
  std::vector<int> y = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const auto [keep, held] = stratified_holdout(y, 0.2, 3);
  EXPECT_EQ(keep.size() + held.size(), y.size());
  std::size_t pos = 0;
  for (auto i : held) pos += y[i];
  EXPECT_EQ(pos, 1u);
  EXPECT_EQ(held.size(), 3u);
  EXPECT_SWPIPE_ERROR(stratified_holdout(std::vector<int>{1, 0, 0}, 0.2, 3), kTooFewSamples);
}

TEST(Mlp, LearnsClustersAndIsReproducible) {
  const auto d = clusters(120, 6, 1.5, 1);
  const auto a = fit_mlp(d.x, d.y, {}, 9);
  const auto b = fit_mlp(d.x, d.y, {}, 9);
  EXPECT_EQ(a, b);
  const auto pred = predict(a, d.x);
  EXPECT_GE(compute_metrics(d.y, pred.labels).accuracy, 0.95);
  for (double s : pred.scores) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Mlp, ParameterCount) {
  const std::vector<std::size_t> h = {64, 32};
  EXPECT_EQ(mlp_parameter_count(1024, h), 67746u);
  EXPECT_EQ(mlp_parameter_count(5, h), 5u * 64 + 64 + 64 * 32 + 32 + 32 * 2 + 2);
}

TEST(Mlp, ConfigValidation) {
  MlpConfig c;
  c.dropout = 1.0;
  EXPECT_SWPIPE_ERROR(c.validate(), kInvalidParams);
  c = {};
  c.patience = c.max_epochs + 1;
  EXPECT_SWPIPE_ERROR(c.validate(), kInvalidParams);
  c = {};
  c.hidden = {8, 0};
  EXPECT_SWPIPE_ERROR(c.validate(), kInvalidParams);
}

TEST(Mlp, DegenerateLabels) {
  FeatureMatrix x(10, 2);
  std::vector<int> y(10, 1);
  EXPECT_SWPIPE_ERROR(fit_mlp(x, y, {}, 1), kTooFewSamples);
  EXPECT_SWPIPE_ERROR(train_mlp(x, y, {}, x, y), kDegenerateLabels);
}

TEST(Rf, FitsRuleAndIgnoresRowOrder) {
  Rng rng(5);
  FeatureMatrix x(60, 3);
  std::vector<int> y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t c = 0; c < 3; ++c) x(i, c) = static_cast<double>(rng.bernoulli(0.5));
    y[i] = static_cast<int>(x(i, 1)) ^ static_cast<int>(x(i, 2));
  }
  RfConfig cfg;
  cfg.seed = 4;
  const auto m = train_rf(x, y, cfg);
  EXPECT_EQ(m.trees().size(), 100u);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 60; ++i) correct += (m.positive_vote_share(x.row(i)) >= 0.5) == (y[i] == 1);
  EXPECT_EQ(correct, 60u);

  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<int> y_perm;
  for (auto i : perm) y_perm.push_back(y[i]);
  EXPECT_EQ(train_rf(x.select_rows(perm), y_perm, cfg), m);
}

TEST(Rf, ConfigValidation) {
  RfConfig c;
  c.n_trees = 0;
  EXPECT_SWPIPE_ERROR(c.validate(), kInvalidParams);
}

TEST(Model, SerializationRoundTrip) {
  TempDir dir("model");
  const auto d = clusters(40, 3, 2.0, 2);
  MlpConfig mc;
  mc.max_epochs = 20;
  mc.patience = 5;
  for (const auto& m : {fit_mlp(d.x, d.y, mc, 1), fit_rf(d.x, d.y, {}, 1)}) {
    save_model(m, dir / "m.bin");
    const auto back = load_model(dir / "m.bin");
    EXPECT_EQ(back, m);
    EXPECT_EQ(predict(back, d.x).scores, predict(m, d.x).scores);
  }
  std::string bytes = serialize_model(fit_rf(d.x, d.y, {}, 1));
  bytes[bytes.size() - 8] ^= 1;
  EXPECT_ANY_THROW(deserialize_model(bytes));
}

TEST(Model, PredictChecksDimension) {
  const auto d = clusters(40, 3, 2.0, 2);
  const auto m = fit_rf(d.x, d.y, {}, 1);
  EXPECT_SWPIPE_ERROR(predict(m, FeatureMatrix(2, 4)), kDimensionMismatch);
  EXPECT_TRUE(predict(m, FeatureMatrix()).labels.empty());
  EXPECT_EQ(decide_label(0.5, 0.5), 1);
}

TEST(CrossValidate, ReportCoversEveryParticipant) {
  const auto d = clusters(40, 3, 2.0, 3);
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("P" + std::to_string(i));
  const auto r = cross_validate(ids, d.x, d.y, rf_trainer({}), 5, 17);
  ASSERT_EQ(r.folds.size(), 5u);
  std::size_t total = 0;
  for (const auto& f : r.folds) total += f.participant_ids.size();
  EXPECT_EQ(total, 40u);
  EXPECT_GT(r.mean_accuracy, 0.9);
  EXPECT_NE(format_cv_report(r).find("mean"), std::string::npos);
  EXPECT_TRUE(nlohmann::json::accept(cv_report_json(r)));
}

TEST(FeatureIo, RoundTripAndErrors) {
  FeatureTable t{{"A", "B"}, FeatureMatrix(2, 2, {0.1, 1e-300, -3.0, 0.3333333333333333})};
  const auto back = parse_feature_table(format_feature_table(t));
  EXPECT_EQ(back.participant_ids, t.participant_ids);
  EXPECT_EQ(back.x, t.x);
  EXPECT_SWPIPE_ERROR(parse_feature_table("id,f0\nA,1\n"), kParseError);
  EXPECT_SWPIPE_ERROR(parse_feature_table("participant_id,f0\nA,x\n"), kParseError);
  EXPECT_SWPIPE_ERROR(parse_feature_table("participant_id,f0\nA,1\nA,2\n"), kParseError);
  EXPECT_SWPIPE_ERROR(parse_feature_table("participant_id,f0\nA,1,2\n"), kParseError);
}

TEST(FeatureIo, Labels) {
  TempDir dir("labels");
  write_file_atomic(dir / "l.csv", "participant_id,task,label\nA,ER,1\nA,PR,1\nB,ER,0\nC,ER,\n");
  EXPECT_EQ(read_labels(dir / "l.csv"), (std::map<std::string, int>{{"A", 1}, {"B", 0}}));
  write_file_atomic(dir / "bad.csv", "participant_id,label\nA,1\nA,0\n");
  EXPECT_SWPIPE_ERROR(read_labels(dir / "bad.csv"), kParseError);
}

}  // namespace
}  // namespace swpipe::classify
