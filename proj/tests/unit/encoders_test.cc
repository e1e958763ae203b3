#include <gtest/gtest.h>

#include <fstream>

#include "swpipe/embedding_cache.h"
#include "swpipe/encoders.h"
#include "swpipe/io.h"
#include "swpipe/mock_adapters.h"
#include "swpipe/random.h"
#include "test_util.h"

namespace swpipe::encoders {
namespace {

using corpus::TaskKind;
using testing::TempDir;

Embedding make(std::vector<float> v, std::string pid = "P1", Level level = Level::kSegment) {
  return {std::move(v), {std::move(pid), TaskKind::kER, "hubert-large", level}};
}

TEST(PoolSpeaker, MeanOfSegments) {
  const auto pooled = pool_speaker({make({1, 2}), make({3, 4}), make({5, 9})});
  EXPECT_EQ(pooled.vector, (std::vector<float>{3, 5}));
  EXPECT_EQ(pooled.source.level, Level::kSpeaker);
  EXPECT_EQ(pooled.source.participant_id, "P1");
}

TEST(PoolSpeaker, OrderIndependentBitwise) {
  Rng rng(3);
  std::vector<Embedding> segs;
  for (int i = 0; i < 9; ++i) {
    std::vector<float> v(7);
    for (auto& x : v) x = static_cast<float>(rng.normal() * 1e3);
    segs.push_back(make(v));
  }
  const auto a = pool_speaker(segs);
  std::reverse(segs.begin(), segs.end());
  EXPECT_EQ(pool_speaker(segs).vector, a.vector);
}

TEST(PoolSpeaker, Errors) {
  EXPECT_SWPIPE_ERROR(pool_speaker({}), kEmptyInput);
  EXPECT_SWPIPE_ERROR(pool_speaker({make({1}), make({1}, "P2")}), kMixedSource);
  EXPECT_SWPIPE_ERROR(pool_speaker({make({1}), make({1, 2})}), kDimensionMismatch);
}

TEST(EmbedSegments, OneVectorPerWindow) {
  mocks::MockAcousticEncoder enc("hubert-large", 12, 16000, 4);
  const auto clip = testing::sine(150, 65.0, 8000);
  const auto segs = embed_segments(clip, preprocess::plan_segments(65.0), enc, {"P9", TaskKind::kPR});
  ASSERT_EQ(segs.size(), 3u);
  for (const auto& s : segs) {
    EXPECT_EQ(s.dim(), 12u);
    EXPECT_EQ(s.source.task, TaskKind::kPR);
    EXPECT_EQ(s.source.encoder_id, "hubert-large");
    EXPECT_NO_THROW(validate(s));
  }
  EXPECT_NE(segs[0].vector, segs[2].vector);
  // Deterministic.
  EXPECT_EQ(embed_segments(clip, preprocess::plan_segments(65.0), enc, {"P9", TaskKind::kPR}), segs);
}

class WrongDimEncoder final : public AcousticEncoderAdapter {
 public:
  std::string encoder_id() const override { return "bad"; }
  std::size_t dim() const override { return 4; }
  int expected_rate() const override { return 16000; }
  FrameMatrix encode(const AudioClip&) override { return {2, 3, std::vector<float>(6, 0.f)}; }
};

TEST(EmbedSegments, DimensionChecked) {
  WrongDimEncoder enc;
  EXPECT_SWPIPE_ERROR(embed_segments(testing::sine(100, 1.0), preprocess::plan_segments(1.0), enc, {"P", TaskKind::kER}),
                      kDimensionMismatch);
}

TEST(EmbedText, RejectsEmptyTranscript) {
  mocks::HashingTextEncoder enc("xlm-roberta-base", 16);
  EXPECT_SWPIPE_ERROR(embed_text({"   ", "zh"}, enc, {"P", TaskKind::kER}), kEmptyTranscript);
  const auto e = embed_text({"some words here", "zh"}, enc, {"P", TaskKind::kER});
  EXPECT_EQ(e.dim(), 16u);
  EXPECT_EQ(e.source.level, Level::kSpeaker);
}

TEST(Validate, RejectsNonFinite) {
  EXPECT_SWPIPE_ERROR(validate(make({})), kDimensionMismatch);
  EXPECT_SWPIPE_ERROR(validate(make({1.f, std::numeric_limits<float>::quiet_NaN()})), kDimensionMismatch);
}

TEST(KnownDims, Assets) {
  EXPECT_EQ(known_encoder_dim("hubert-large"), 1024u);
  EXPECT_EQ(known_encoder_dim("bert-base-chinese"), 768u);
  EXPECT_FALSE(known_encoder_dim("nope").has_value());
}

TEST(EmbeddingCache, StoreLoadAndHashMismatch) {
  TempDir dir("emb");
  EmbeddingCache cache(dir.path());
  const auto e = make({0.5f, -1.25f, 3.0f}, "P/1 x", Level::kSpeaker);
  cache.store(e, "h1");
  EXPECT_EQ(cache.load(e.source, "h1"), e);
  EXPECT_FALSE(cache.load(e.source, "h2").has_value());
  auto other = e.source;
  other.task = TaskKind::kED;
  EXPECT_FALSE(cache.load(other, "h1").has_value());
  EXPECT_EQ(cache.path_for(e.source).parent_path().filename(), "hubert-large");
  EXPECT_EQ(cache.path_for(e.source).filename().string().find('/'), std::string::npos);
}

TEST(EmbeddingCache, CorruptionDetected) {
  TempDir dir("emb");
  EmbeddingCache cache(dir.path());
  const auto e = make({0.5f, -1.25f, 3.0f}, "P1", Level::kSpeaker);
  cache.store(e, "h");
  const auto path = cache.path_for(e.source);
  std::string bytes = read_file(path);
  bytes[bytes.size() - 6] ^= 0x40;
  write_file_atomic(path, bytes);
  EXPECT_SWPIPE_ERROR(cache.load(e.source, "h"), kCacheCorrupt);
  write_file_atomic(path, bytes.substr(0, 10));
  EXPECT_SWPIPE_ERROR(cache.load(e.source, "h"), kCacheCorrupt);
}

TEST(EmbeddingFile, RoundTrip) {
  const auto e = make({1.f, 2.f}, "P1", Level::kSpeaker);
  const auto decoded = decode_embedding_file(encode_embedding_file(e, "abc"));
  EXPECT_EQ(decoded.embedding, e);
  EXPECT_EQ(decoded.config_hash, "abc");
  EXPECT_EQ(escape_path_component("a b/c"), "a%20b%2Fc");
}

TEST(Mocks, AsrTracksPitch) {
  mocks::MockAsr asr;
  const auto low = asr.transcribe(testing::sine(120, 3.0));
  const auto high = asr.transcribe(testing::sine(240, 3.0));
  EXPECT_FALSE(low.text.empty());
  EXPECT_NE(low.text, high.text);
  EXPECT_EQ(asr.transcribe(testing::sine(120, 3.0)), low);
  EXPECT_NEAR(mocks::MockAsr::pitch_estimate(testing::sine(200, 1.0)), 200.0, 5.0);
}

}  // namespace
}  // namespace swpipe::encoders
