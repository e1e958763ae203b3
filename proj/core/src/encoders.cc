#include "swpipe/encoders.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "swpipe/error.h"

namespace swpipe::encoders {

std::string_view to_string(Level level) {
  return level == Level::kSegment ? "segment" : "speaker";
}

std::optional<Level> parse_level(std::string_view token) {
  if (token == "segment") return Level::kSegment;
  if (token == "speaker") return Level::kSpeaker;
  return std::nullopt;
}

std::optional<std::size_t> known_encoder_dim(std::string_view encoder_id) {
  static const std::map<std::string, std::size_t, std::less<>> kDims = {
      {"wav2vec2-xlsr-53", 1024}, {"whisper-large-v3", 1280}, {"hubert-large", 1024},
      {"bert-base-chinese", 768}, {"xlm-roberta-base", 768},
  };
  const auto it = kDims.find(encoder_id);
  if (it == kDims.end()) return std::nullopt;
  return it->second;
}

void validate(const Embedding& embedding) {
  if (embedding.vector.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding has zero dimensions");
  }
  for (float v : embedding.vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("embedding from '{}' has non-finite entries",
                              embedding.source.encoder_id));
    }
  }
}

namespace {

template <typename Fn>
auto call_adapter(std::string_view adapter_id, Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kAdapterFailure, fmt::format("adapter '{}': {}", adapter_id, e.what()));
  }
}

}  // namespace

std::vector<Embedding> embed_segments(const AudioClip& clip, const preprocess::SegmentPlan& plan,
                                      AcousticEncoderAdapter& encoder, const SourceTag& tag) {
  const std::string id = encoder.encoder_id();
  const std::size_t dim = encoder.dim();
  const AudioClip resampled = resample(clip, encoder.expected_rate());
  const auto segments = preprocess::slice(resampled, plan);

  std::vector<Embedding> out;
  out.reserve(segments.size());
  for (const auto& segment : segments) {
    const FrameMatrix frames = call_adapter(id, [&] { return encoder.encode(segment); });
    if (frames.cols != dim || frames.data.size() != frames.rows * frames.cols) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("encoder '{}' declared dim {} but returned {} columns", id, dim,
                              frames.cols));
    }
    if (frames.rows == 0) {
      throw Error(ErrorCode::kAdapterFailure, fmt::format("encoder '{}' returned no frames", id));
    }
    std::vector<double> acc(dim, 0.0);
    for (std::size_t r = 0; r < frames.rows; ++r) {
      for (std::size_t c = 0; c < dim; ++c) acc[c] += frames.at(r, c);
    }
    Embedding e;
    e.source = {tag.participant_id, tag.task, id, Level::kSegment};
    e.vector.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      e.vector[c] = static_cast<float>(acc[c] / static_cast<double>(frames.rows));
    }
    validate(e);
    out.push_back(std::move(e));
  }
  return out;
}

Embedding pool_speaker(const std::vector<Embedding>& segments) {
  if (segments.empty()) throw Error(ErrorCode::kEmptyInput, "no segment embeddings to pool");
  const auto& first = segments.front();
  const std::size_t dim = first.dim();
  for (const auto& s : segments) {
    if (s.source.participant_id != first.source.participant_id ||
        s.source.task != first.source.task || s.source.encoder_id != first.source.encoder_id) {
      throw Error(ErrorCode::kMixedSource, "segments come from different (participant, task, encoder)");
    }
    if (s.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("segment dims differ: {} vs {}", dim, s.dim()));
    }
  }

  Embedding pooled;
  pooled.source = first.source;
  pooled.source.level = Level::kSpeaker;
  pooled.vector.resize(dim);
  // Summing each column in sorted order makes the result independent of the
  // segment order down to the last bit.
  std::vector<float> column(segments.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < segments.size(); ++i) column[i] = segments[i].vector[c];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (float v : column) sum += v;
    pooled.vector[c] = static_cast<float>(sum / static_cast<double>(segments.size()));
  }
  return pooled;
}

Embedding embed_text(const Transcript& transcript, TextEncoderAdapter& encoder,
                     const SourceTag& tag) {
  const std::string id = encoder.encoder_id();
  if (transcript.text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::kEmptyTranscript,
                fmt::format("empty transcript for {} {}", tag.participant_id,
                            corpus::to_string(tag.task)));
  }
  auto vec = call_adapter(id, [&] { return encoder.encode(transcript.text); });
  if (vec.size() != encoder.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("text encoder '{}' declared dim {} but returned {}", id, encoder.dim(),
                            vec.size()));
  }
  Embedding e;
  e.vector = std::move(vec);
  e.source = {tag.participant_id, tag.task, id, Level::kSpeaker};
  validate(e);
  return e;
}

}  // namespace swpipe::encoders
