#include <gtest/gtest.h>

#include "swpipe/preprocess.h"
#include "test_util.h"

namespace swpipe::preprocess {
namespace {

std::vector<std::pair<double, double>> spans(const SegmentPlan& plan) {
  std::vector<std::pair<double, double>> out;
  for (const auto& w : plan.windows) out.emplace_back(w.start, w.end);
  return out;
}

using Spans = std::vector<std::pair<double, double>>;

TEST(PlanSegments, ShortClipIsOneWindow) {
  EXPECT_EQ(spans(plan_segments(20.0)), (Spans{{0, 20}}));
  EXPECT_EQ(spans(plan_segments(2.0)), (Spans{{0, 2}}));
}

TEST(PlanSegments, OverlappingWindows) {
  EXPECT_EQ(spans(plan_segments(65.0)), (Spans{{0, 30}, {27, 57}, {54, 65}}));
}

TEST(PlanSegments, ShortTailDropped) {
  EXPECT_EQ(spans(plan_segments(58.0)), (Spans{{0, 30}, {27, 57}}));
}

TEST(PlanSegments, ExactFitKeepsTailAtThreshold) {
  // Tail [54, 59) is exactly min_tail long.
  EXPECT_EQ(spans(plan_segments(59.0)), (Spans{{0, 30}, {27, 57}, {54, 59}}));
}

TEST(PlanSegments, CustomParams) {
  SegmentParams p{10.0, 0.5, 1.0};
  EXPECT_EQ(spans(plan_segments(20.0, p)), (Spans{{0, 10}, {5, 15}, {10, 20}, {15, 20}}));
}

TEST(PlanSegments, RejectsBadParams) {
  EXPECT_SWPIPE_ERROR(plan_segments(0.0), kInvalidParams);
  EXPECT_SWPIPE_ERROR(plan_segments(-1.0), kInvalidParams);
  EXPECT_SWPIPE_ERROR(plan_segments(10.0, {30.0, 1.0, 5.0}), kInvalidParams);
  EXPECT_SWPIPE_ERROR(plan_segments(10.0, {0.0, 0.1, 5.0}), kInvalidParams);
}

TEST(Slice, SampleBoundaries) {
  const auto clip = testing::sine(100, 65.0, 100);
  const auto parts = slice(clip, plan_segments(65.0));
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].samples.size(), 3000u);
  EXPECT_EQ(parts[2].samples.size(), 1100u);
  EXPECT_EQ(parts[1].samples.front(), clip.samples[2700]);
  EXPECT_SWPIPE_ERROR(slice(clip, plan_segments(70.0)), kOutOfRange);
}

TEST(Denoise, IdentityAndGain) {
  const auto clip = testing::sine(200, 0.5);
  IdentityDenoiser id;
  EXPECT_EQ(denoise(clip, id), clip);
  GainDenoiser half(0.5f);
  const auto out = denoise(clip, half);
  EXPECT_FLOAT_EQ(out.samples[10], clip.samples[10] * 0.5f);
}

class DroppingDenoiser final : public DenoiserAdapter {
 public:
  std::string name() const override { return "dropping"; }
  AudioClip process(const AudioClip& clip) override {
    auto out = clip;
    out.samples.resize(clip.samples.size() / 2);
    return out;
  }
};

class ThrowingDenoiser final : public DenoiserAdapter {
 public:
  std::string name() const override { return "throwing"; }
  AudioClip process(const AudioClip&) override { throw std::runtime_error("device lost"); }
};

TEST(Denoise, ContractViolationsFailOrPassThrough) {
  const auto clip = testing::sine(200, 0.5);
  DroppingDenoiser dropping;
  ThrowingDenoiser throwing;
  EXPECT_SWPIPE_ERROR(denoise(clip, dropping), kAdapterFailure);
  EXPECT_SWPIPE_ERROR(denoise(clip, throwing), kAdapterFailure);
  try {
    denoise(clip, throwing);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("throwing"), std::string::npos);
  }

  DenoiseOutcome outcome;
  EXPECT_EQ(denoise(clip, throwing, DenoiseErrorPolicy::kPassthrough, &outcome), clip);
  EXPECT_TRUE(outcome.passthrough);
  EXPECT_NE(outcome.error.find("device lost"), std::string::npos);
}

}  // namespace
}  // namespace swpipe::preprocess
