#include "swpipe/preprocess.h"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>

#include "swpipe/error.h"

namespace swpipe::preprocess {

SegmentPlan plan_segments(double duration_s, const SegmentParams& params) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorCode::kInvalidParams, fmt::format("duration must be > 0, got {}", duration_s));
  }
  if (!(params.window_s > 0.0) || !std::isfinite(params.window_s)) {
    throw Error(ErrorCode::kInvalidParams, "window must be > 0");
  }
  if (!(params.overlap >= 0.0 && params.overlap < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "overlap must be in [0, 1)");
  }
  if (!(params.min_tail_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "min_tail must be >= 0");
  }

  const double step = params.window_s * (1.0 - params.overlap);
  SegmentPlan plan;
  for (std::size_t i = 0;; ++i) {
    // Multiply rather than accumulate so starts never drift.
    const double start = static_cast<double>(i) * step;
    if (start >= duration_s) break;
    plan.windows.push_back({start, std::min(start + params.window_s, duration_s)});
  }
  if (plan.windows.size() > 1 && plan.windows.back().length() < params.min_tail_s) {
    plan.windows.pop_back();
  }
  return plan;
}

std::vector<AudioClip> slice(const AudioClip& clip, const SegmentPlan& plan) {
  const double rate = clip.sample_rate;
  const auto n = static_cast<long long>(clip.samples.size());
  std::vector<AudioClip> out;
  out.reserve(plan.windows.size());
  for (const auto& w : plan.windows) {
    const long long begin = std::llround(w.start * rate);
    const long long end = std::llround(w.end * rate);
    if (begin < 0 || end > n || begin > end) {
      throw Error(ErrorCode::kOutOfRange,
                  fmt::format("window [{}, {}) exceeds clip of {} s", w.start, w.end,
                              clip.duration()));
    }
    AudioClip seg;
    seg.sample_rate = clip.sample_rate;
    seg.samples.assign(clip.samples.begin() + begin, clip.samples.begin() + end);
    out.push_back(std::move(seg));
  }
  return out;
}

std::string GainDenoiser::name() const { return fmt::format("gain:{}", gain_); }

AudioClip GainDenoiser::process(const AudioClip& clip) {
  AudioClip out = clip;
  for (float& s : out.samples) s *= gain_;
  return out;
}

AudioClip denoise(const AudioClip& clip, DenoiserAdapter& adapter, DenoiseErrorPolicy policy,
                  DenoiseOutcome* outcome) {
  std::string failure;
  try {
    AudioClip out = adapter.process(clip);
    const auto diff = std::llabs(static_cast<long long>(out.samples.size()) -
                                 static_cast<long long>(clip.samples.size()));
    if (out.sample_rate != clip.sample_rate) {
      failure = fmt::format("sample rate changed from {} to {}", clip.sample_rate,
                            out.sample_rate);
    } else if (diff > 1) {
      failure = fmt::format("length changed from {} to {} samples", clip.samples.size(),
                            out.samples.size());
    } else {
      if (outcome) *outcome = {};
      return out;
    }
  } catch (const std::exception& e) {
    failure = e.what();
  }

  if (policy == DenoiseErrorPolicy::kFail) {
    throw Error(ErrorCode::kAdapterFailure,
                fmt::format("denoiser '{}' failed: {}", adapter.name(), failure));
  }
  if (outcome) *outcome = {true, fmt::format("denoiser '{}' failed: {}", adapter.name(), failure)};
  return clip;
}

}  // namespace swpipe::preprocess
