#include <gtest/gtest.h>

#include "swpipe/audio.h"
#include "swpipe/corpus.h"
#include "swpipe/io.h"
#include "test_util.h"

namespace swpipe::corpus {
namespace {

using testing::TempDir;

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* name : {"a_er.wav", "a_pr.wav", "b_er.wav", "c_er.wav"}) {
      write_wav(dir_ / name, testing::sine(200, 0.1));
    }
  }
  Corpus parse(const std::string& text) { return parse_manifest(text, dir_.path()); }

  TempDir dir_{"corpus"};
};

TEST_F(ManifestTest, GroupsRowsByParticipant) {
  const auto c = parse(
      "participant_id,task,audio_path,label,split,age,gender\n"
      "A,ER,a_er.wav,1,train,21,F\n"
      "B,ER,b_er.wav,0,dev,,M\n"
      "A,PR,a_pr.wav,1,train,21,F\n"
      "C,ER,c_er.wav,,test,,\n");
  ASSERT_EQ(c.size(), 3u);
  const auto* a = c.find("A");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->audio.size(), 2u);
  EXPECT_EQ(a->audio.at(TaskKind::kPR), dir_ / "a_pr.wav");
  EXPECT_EQ(a->label, 1);
  EXPECT_EQ(a->age, 21.0);
  EXPECT_EQ(a->gender, Gender::kFemale);
  EXPECT_EQ(c.records()[1].participant_id, "B");
  EXPECT_FALSE(c.find("C")->label.has_value());
  EXPECT_EQ(c.find("nobody"), nullptr);

  const auto balance = c.class_balance();
  EXPECT_EQ(balance.at(Split::kTrain).at_risk, 1u);
  EXPECT_EQ(balance.at(Split::kDev).no_risk, 1u);
  EXPECT_EQ(balance.at(Split::kTest).unlabeled, 1u);
}

TEST_F(ManifestTest, ColumnOrderIsFree) {
  const auto c = parse("split,label,audio_path,task,participant_id\ntrain,0,b_er.wav,ER,B\n");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.records()[0].label, 0);
}

TEST_F(ManifestTest, RejectsMalformedInput) {
  const std::string header = "participant_id,task,audio_path,label,split\n";
  EXPECT_SWPIPE_ERROR(parse("participant_id,task,audio_path,label\nA,ER,a_er.wav,1\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,XX,a_er.wav,1,train\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,ER,a_er.wav,2,train\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,ER,a_er.wav,1,holdout\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,ER,a_er.wav,1,train\nA,ER,a_pr.wav,1,train\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,ER,a_er.wav,1,train\nA,PR,a_pr.wav,0,train\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,ER,a_er.wav,1,train,extra\n"), kMalformedManifest);
  EXPECT_SWPIPE_ERROR(parse(header + "A,er,a_er.wav,1,train\n"), kMalformedManifest);
}

TEST_F(ManifestTest, MissingAudioIsReported) {
  EXPECT_SWPIPE_ERROR(parse("participant_id,task,audio_path,label,split\nA,ER,nope.wav,1,train\n"), kMissingAudio);
}

TEST_F(ManifestTest, WriteAndReloadIsIdentity) {
  const auto c = parse(
      "participant_id,task,audio_path,label,split,age,gender\n"
      "A,ER,a_er.wav,1,train,21.5,F\n"
      "A,PR,a_pr.wav,1,train,21.5,F\n"
      "B,ER,b_er.wav,0,test,30,M\n");
  write_manifest(c, dir_ / "out.csv");
  EXPECT_EQ(load_manifest(dir_ / "out.csv"), c);
}

TEST_F(ManifestTest, SummaryReportsDemographics) {
  const auto c = parse(
      "participant_id,task,audio_path,label,split,age,gender\n"
      "A,ER,a_er.wav,1,train,20,F\n"
      "B,ER,b_er.wav,1,train,30,M\n"
      "C,ER,c_er.wav,0,test,,F\n");
  const auto s = summarize(c);
  EXPECT_TRUE(s.has_age);
  EXPECT_TRUE(s.has_gender);
  EXPECT_EQ(s.by_label.at(1).count, 2u);
  EXPECT_DOUBLE_EQ(*s.by_label.at(1).mean_age, 25.0);
  EXPECT_FALSE(s.by_label.at(0).mean_age.has_value());
  const auto table = format_summary(s);
  EXPECT_NE(table.find("train"), std::string::npos);
  EXPECT_NE(table.find("1:1"), std::string::npos);
}

TEST(TaskNames, ParseIsCaseSensitive) {
  EXPECT_EQ(parse_task("ER"), TaskKind::kER);
  EXPECT_EQ(parse_task("ED"), TaskKind::kED);
  EXPECT_FALSE(parse_task("ed").has_value());
  EXPECT_EQ(to_string(TaskKind::kPR), "PR");
}

}  // namespace
}  // namespace swpipe::corpus
