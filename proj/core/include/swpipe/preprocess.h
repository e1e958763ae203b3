#pragma once

#include <memory>
#include <string>
#include <vector>

#include "swpipe/audio.h"

namespace swpipe::preprocess {

struct Window {
  double start = 0.0;  // seconds, inclusive
  double end = 0.0;    // seconds, exclusive

  double length() const { return end - start; }
  bool operator==(const Window&) const = default;
};

struct SegmentPlan {
  std::vector<Window> windows;
  bool operator==(const SegmentPlan&) const = default;
};

struct SegmentParams {
  double window_s = 30.0;
  double overlap = 0.10;  // fraction of window shared by adjacent windows
  double min_tail_s = 5.0;
};

// Windows start at 0, step, 2*step, ... (step = window * (1 - overlap)) while
// start < duration and end at min(start + window, duration). A final window
// shorter than min_tail is dropped unless it is the only window.
// Throws InvalidParams.
SegmentPlan plan_segments(double duration_s, const SegmentParams& params = {});

// Segment i holds samples [round(start * rate), round(end * rate)).
// Throws OutOfRange when a window extends past the clip.
std::vector<AudioClip> slice(const AudioClip& clip, const SegmentPlan& plan);

class DenoiserAdapter {
 public:
  virtual ~DenoiserAdapter() = default;
  virtual std::string name() const = 0;
  // Must preserve sample rate and duration (within one sample).
  virtual AudioClip process(const AudioClip& clip) = 0;
};

// Default bundled denoiser: returns the clip unchanged.
class IdentityDenoiser final : public DenoiserAdapter {
 public:
  std::string name() const override { return "identity"; }
  AudioClip process(const AudioClip& clip) override { return clip; }
};

// Test double: scales every sample by a constant.
class GainDenoiser final : public DenoiserAdapter {
 public:
  explicit GainDenoiser(float gain) : gain_(gain) {}
  std::string name() const override;
  AudioClip process(const AudioClip& clip) override;

 private:
  float gain_;
};

enum class DenoiseErrorPolicy { kFail, kPassthrough };

struct DenoiseOutcome {
  bool passthrough = false;  // adapter failed and the input was returned as-is
  std::string error;
};

// Runs the adapter and checks its contract. Adapter exceptions and contract
// violations become AdapterFailure (naming the adapter) under kFail; under
// kPassthrough the input clip is returned and `outcome` records why.
AudioClip denoise(const AudioClip& clip, DenoiserAdapter& adapter,
                  DenoiseErrorPolicy policy = DenoiseErrorPolicy::kFail,
                  DenoiseOutcome* outcome = nullptr);

}  // namespace swpipe::preprocess
