#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "swpipe/ensemble.h"
#include "swpipe/io.h"
#include "test_util.h"

namespace swpipe::ensemble {
namespace {

using corpus::TaskKind;
using testing::TempDir;

EnsembleSpec spec_of(std::initializer_list<std::pair<int, Weight>> members, TieBreak tb = TieBreak::kPositive) {
  EnsembleSpec s;
  s.name = "test";
  s.tie_break = tb;
  for (const auto& [id, w] : members) {
    const auto& row = model_table_row(id);
    s.members.push_back({id, row.source, row.classifier, row.task, w});
  }
  return s;
}

TEST(Weights, ExactParsing) {
  EXPECT_EQ(parse_weight("2"), Weight(2));
  EXPECT_EQ(parse_weight("3/2"), Weight(3, 2));
  EXPECT_EQ(parse_weight("0.25"), Weight(1, 4));
  EXPECT_EQ(parse_weight("010"), Weight(10));
  EXPECT_EQ(parse_weight("08/03"), Weight(8, 3));
  EXPECT_EQ(parse_weight(".5"), Weight(1, 2));
  EXPECT_EQ(format_weight(Weight(6, 4)), "3/2");
  for (const char* bad : {"", "0", "-1", "1/0", "abc", "1e3", "2/-3"}) {
    EXPECT_SWPIPE_ERROR(parse_weight(bad), kInvalidParams);
  }
}

TEST(ModelTable, Layout) {
  const auto& t = model_table();
  EXPECT_EQ(t[0].source, FeatureSource::kHubert);
  EXPECT_EQ(t[0].task, TaskKind::kER);
  EXPECT_EQ(t[8].source, FeatureSource::kWhisper);
  EXPECT_EQ(t[8].task, TaskKind::kED);
  EXPECT_EQ(t[12].source, FeatureSource::kRoberta);
  EXPECT_EQ(t[15].source, FeatureSource::kDeepSeek);
  EXPECT_EQ(t[15].classifier, classify::ModelKind::kRf);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(t[i].index, i + 1);
  EXPECT_EQ(member_index(FeatureSource::kWav2Vec2, TaskKind::kPR), 5);
  EXPECT_FALSE(member_index(FeatureSource::kDeepSeek, TaskKind::kPR).has_value());
  EXPECT_SWPIPE_ERROR(model_table_row(17), kUnknownMember);
  EXPECT_EQ(parse_source("roberta"), FeatureSource::kRoberta);
  EXPECT_EQ(parse_source("hubert-large"), FeatureSource::kHubert);
  EXPECT_TRUE(is_acoustic(FeatureSource::kWhisper));
  EXPECT_TRUE(is_text(FeatureSource::kBert));
}

TEST(Presets, Members) {
  EXPECT_EQ(preset_combination("audio-only").member_tuple(), "(1, 2, 5, 6, 8, 9)");
  EXPECT_EQ(preset_combination("combo-A").member_tuple(), "(1, 2, 5, 6, 8, 13, 16)");
  const auto b = preset_combination("combo-B", Weight(5, 2));
  EXPECT_EQ(b.member_tuple(), "(1, 2, 5, 6, 9, 13, 16)");
  EXPECT_EQ(b.find(16)->weight, Weight(5, 2));
  EXPECT_EQ(b.find(1)->weight, 1);
  EXPECT_EQ(b.find(3), nullptr);
  EXPECT_SWPIPE_ERROR(preset_combination("combo-C"), kUnknownCombination);
}

TEST(Vote, WeightedMajorityAndTies) {
  const auto s = spec_of({{1, 1}, {2, 1}, {16, 2}});
  auto r = vote({{1, 0}, {2, 0}, {16, 1}}, s);
  EXPECT_EQ(r.final, 1);
  EXPECT_TRUE(r.tie);
  r = vote({{1, 1}, {2, 0}, {16, 0}}, s);
  EXPECT_EQ(r.final, 0);
  EXPECT_FALSE(r.tie);
  EXPECT_EQ(r.w_neg, 3);
  r = vote({{1, 1}, {2, std::nullopt}}, s);
  EXPECT_EQ(r.final, 1);
  EXPECT_EQ(r.w_pos, 1);

  EXPECT_EQ(vote({{1, 0}, {2, 1}}, spec_of({{1, 1}, {2, 1}}, TieBreak::kNegative)).final, 0);
  EXPECT_FALSE(vote({{1, 0}, {2, 1}}, spec_of({{1, 1}, {2, 1}}, TieBreak::kAbstain)).final.has_value());
  EXPECT_SWPIPE_ERROR(vote({{3, 1}}, s), kUnknownMember);
  EXPECT_SWPIPE_ERROR(vote({{1, 2}}, s), kInvalidParams);
}

TEST(Vote, NoVotesFallsToTieRule) {
  const auto r = vote({}, spec_of({{1, 1}}));
  EXPECT_TRUE(r.tie);
  EXPECT_EQ(r.final, 1);
}

TEST(Spec, Validation) {
  EXPECT_SWPIPE_ERROR(EnsembleSpec{}.validate(), kInvalidParams);
  EXPECT_SWPIPE_ERROR(spec_of({{1, 1}, {1, 1}}).validate(), kInvalidParams);
  EXPECT_SWPIPE_ERROR(spec_of({{1, 0}}).validate(), kInvalidParams);
}

TEST(Spec, JsonRoundTrip) {
  const auto s = spec_from_json(
      R"({"name":"mine","tie_break":"abstain","members":[{"model":"HuBERT","task":"ER","weight":"3/2"},)"
      R"({"model":"DeepSeek-R1","task":"ER"}]})");
  EXPECT_EQ(s.member_tuple(), "(1, 16)");
  EXPECT_EQ(s.find(1)->weight, Weight(3, 2));
  EXPECT_EQ(s.tie_break, TieBreak::kAbstain);
  const auto back = spec_from_json(spec_to_json(s));
  EXPECT_EQ(back.members, s.members);
  EXPECT_EQ(back.name, "mine");
  EXPECT_SWPIPE_ERROR(spec_from_json(R"({"members":[{"model":"DeepSeek-R1","task":"PR"}]})"), kConfigInvalid);
  EXPECT_SWPIPE_ERROR(spec_from_json(R"({"members":[{"model":"HuBERT","task":"ER","extra":1}]})"), kConfigInvalid);
  EXPECT_SWPIPE_ERROR(spec_from_json("not json"), kConfigInvalid);
}

TEST(Evaluate, MetricsAndAbstentions) {
  const auto s = spec_of({{1, 1}, {2, 1}}, TieBreak::kAbstain);
  const MemberPredictions preds = {{1, {{"A", 1}, {"B", 0}, {"C", 1}}},
                                   {2, {{"A", 1}, {"B", 0}, {"C", 0}}},
                                   {3, {{"A", 0}, {"Z", 1}}}};
  const std::map<std::string, int> labels = {{"A", 1}, {"B", 1}, {"C", 0}};
  const auto ev = evaluate_ensemble(s, preds, labels);
  ASSERT_EQ(ev.records.size(), 3u);  // member 3 ignored, so no Z
  EXPECT_EQ(ev.abstained, 1u);
  EXPECT_EQ(ev.decided_by_tie, 1u);
  EXPECT_EQ(ev.metrics.counts.total(), 2u);
  EXPECT_DOUBLE_EQ(ev.metrics.accuracy, 0.5);
  EXPECT_SWPIPE_ERROR(evaluate_ensemble(s, preds, {{"A", 1}}), kMissingLabels);

  const std::vector<std::string> scope = {"A"};
  EXPECT_EQ(combine(s, preds, &scope).size(), 1u);
}

TEST(PredictionFiles, RoundTripAndConflicts) {
  TempDir dir("pred");
  const std::vector<MemberPredictionRow> rows = {{"A", 1, 1, 0.75}, {"B", 1, 0, 0.1}};
  write_prediction_file(dir / "member_01.csv", rows);
  const auto back = read_prediction_file(dir / "member_01.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].score, 0.75);
  EXPECT_EQ(back[1].score, 0.1);
  write_prediction_file(dir / "member_16.csv", std::vector<MemberPredictionRow>{{"A", 16, 0, 0.2}});
  const auto all = read_prediction_dir(dir.path());
  EXPECT_EQ(all.at(1).at("A"), 1);
  EXPECT_EQ(all.at(16).at("A"), 0);

  write_prediction_file(dir / "zz.csv", std::vector<MemberPredictionRow>{{"A", 1, 0, 0.2}});
  EXPECT_ANY_THROW(read_prediction_dir(dir.path()));
  write_file_atomic(dir / "bad.csv", "pid,member,vote\n");
  EXPECT_SWPIPE_ERROR(read_prediction_file(dir / "bad.csv"), kParseError);
}

TEST(Reporting, VotingTableAndRecords) {
  classify::Metrics m;
  m.accuracy = 0.8;
  m.f1 = 0.75;
  const std::vector<VotingTableRow> rows = {{"combo-B", m, std::nullopt}};
  const auto table = format_voting_table(rows);
  EXPECT_NE(table.find("Accuracy (Dev / Test)"), std::string::npos);
  EXPECT_NE(table.find("combo-B"), std::string::npos);
  EXPECT_NE(table.find("-"), std::string::npos);

  const auto s = spec_of({{1, 1}, {16, 2}});
  const auto recs = combine(s, {{1, {{"A", 0}}}, {16, {{"A", 1}}}});
  const auto j = nlohmann::json::parse(records_to_json(recs));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["final"], 1);
  EXPECT_EQ(j[0]["decided_by_tie_rule"], false);
}

}  // namespace
}  // namespace swpipe::ensemble
