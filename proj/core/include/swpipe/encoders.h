#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swpipe/audio.h"
#include "swpipe/corpus.h"
#include "swpipe/preprocess.h"

namespace swpipe::encoders {

enum class Level { kSegment, kSpeaker };

std::string_view to_string(Level level);
std::optional<Level> parse_level(std::string_view token);

struct EmbeddingSource {
  std::string participant_id;
  corpus::TaskKind task = corpus::TaskKind::kER;
  std::string encoder_id;
  Level level = Level::kSegment;

  bool operator==(const EmbeddingSource&) const = default;
};

struct Embedding {
  std::vector<float> vector;
  EmbeddingSource source;

  std::size_t dim() const { return vector.size(); }
  bool operator==(const Embedding&) const = default;
};

// Row-major n_frames x dim.
struct FrameMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct Transcript {
  std::string text;
  std::string language;

  bool operator==(const Transcript&) const = default;
};

class AcousticEncoderAdapter {
 public:
  virtual ~AcousticEncoderAdapter() = default;
  virtual std::string encoder_id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual int expected_rate() const = 0;
  // Clip arrives at expected_rate(). For encoder-decoder models these are
  // encoder-side hidden states.
  virtual FrameMatrix encode(const AudioClip& clip) = 0;
};

class TextEncoderAdapter {
 public:
  virtual ~TextEncoderAdapter() = default;
  virtual std::string encoder_id() const = 0;
  virtual std::size_t dim() const = 0;
  // Sequence-to-vector reduction is the adapter's business (mean over token
  // states for the bundled adapters).
  virtual std::vector<float> encode(std::string_view text) = 0;
};

class AsrAdapter {
 public:
  virtual ~AsrAdapter() = default;
  virtual std::string asr_id() const = 0;
  virtual Transcript transcribe(const AudioClip& clip) = 0;
};

// Hidden sizes of the supported pretrained assets; nullopt for unknown ids.
std::optional<std::size_t> known_encoder_dim(std::string_view encoder_id);

struct SourceTag {
  std::string participant_id;
  corpus::TaskKind task = corpus::TaskKind::kER;
};

// One segment-level embedding per plan window: the clip is resampled to the
// encoder's rate, sliced, encoded, and averaged over frames.
// Throws AdapterFailure, DimensionMismatch, OutOfRange.
std::vector<Embedding> embed_segments(const AudioClip& clip, const preprocess::SegmentPlan& plan,
                                      AcousticEncoderAdapter& encoder, const SourceTag& tag);

// Elementwise unweighted mean of segment embeddings. The result is bitwise
// independent of the input order. Throws EmptyInput, MixedSource,
// DimensionMismatch.
Embedding pool_speaker(const std::vector<Embedding>& segments);

// Throws EmptyTranscript, AdapterFailure, DimensionMismatch.
Embedding embed_text(const Transcript& transcript, TextEncoderAdapter& encoder,
                     const SourceTag& tag);

// Throws DimensionMismatch for an empty or non-finite vector.
void validate(const Embedding& embedding);

}  // namespace swpipe::encoders
