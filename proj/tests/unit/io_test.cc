#include <gtest/gtest.h>

#include <cmath>

#include "swpipe/audio.h"
#include "swpipe/hashing.h"
#include "swpipe/io.h"
#include "test_util.h"

namespace swpipe {
namespace {

using testing::TempDir;

TEST(Csv, QuotedFieldsAndCrlf) {
  const auto rows = parse_csv("\xEF\xBB\xBF" "a,\"b,c\",\"say \"\"hi\"\"\"\r\n\r\nx,,z\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (CsvRow{"a", "b,c", "say \"hi\""}));
  EXPECT_EQ(rows[1], (CsvRow{"x", "", "z"}));
}

TEST(Csv, LineRoundTrip) {
  const CsvRow row = {"plain", "with,comma", "with \"quote\"", "multi\nline"};
  const auto parsed = parse_csv(csv_line(row));
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0], row);
  EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(Files, AtomicWriteReplacesContent) {
  TempDir dir("io");
  const auto p = dir / "nested/file.txt";
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  EXPECT_EQ(read_file(p), "second");
  EXPECT_SWPIPE_ERROR(read_file(dir / "absent"), kIo);
}

TEST(Hashing, KnownDigests) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::string s = "123456789";
  EXPECT_EQ(crc32(std::as_bytes(std::span(s.data(), s.size()))), 0xCBF43926u);
}

TEST(Hashing, DerivedSeedsDependOnLabel) {
  EXPECT_EQ(derive_seed(7, "a"), derive_seed(7, "a"));
  EXPECT_NE(derive_seed(7, "a"), derive_seed(7, "b"));
  EXPECT_NE(derive_seed(7, "a"), derive_seed(8, "a"));
}

TEST(Wav, Float32RoundTripIsExact) {
  TempDir dir("wav");
  const auto clip = testing::sine(220, 0.25, 8000);
  write_wav(dir / "a.wav", clip);
  EXPECT_EQ(read_wav(dir / "a.wav"), clip);
}

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  TempDir dir("wav");
  const auto clip = testing::sine(220, 0.25, 16000);
  write_wav(dir / "a.wav", clip, WavEncoding::kPcm16);
  const auto back = read_wav(dir / "a.wav");
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  EXPECT_EQ(back.sample_rate, 16000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32767);
}

TEST(Wav, RejectsGarbage) {
  TempDir dir("wav");
  write_file_atomic(dir / "bad.wav", "not a wav file at all");
  EXPECT_ANY_THROW(read_wav(dir / "bad.wav"));
}

TEST(Resample, PreservesDurationAndIdentity) {
  const auto clip = testing::sine(100, 1.0, 8000);
  EXPECT_EQ(resample(clip, 8000), clip);
  const auto up = resample(clip, 16000);
  EXPECT_EQ(up.sample_rate, 16000);
  EXPECT_NEAR(up.duration(), clip.duration(), 1.0 / 8000);
}

}  // namespace
}  // namespace swpipe
