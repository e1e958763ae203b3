#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "swpipe/encoders.h"

namespace swpipe::encoders {

// On-disk embedding store.
//
// Layout: <root>/<encoder_id>/<participant>_<task>_<level>.emb
//   bytes 0..7   magic "EMB1\0\0\0\0"
//   u32 LE       metadata length
//   metadata     UTF-8 JSON {participant, task, encoder_id, dim, level, config_hash}
//   dim x f32 LE vector
//   u32 LE       CRC-32 of the f32 payload
//
// Path components are percent-escaped outside [A-Za-z0-9._-]. Writes are
// atomic (temp file, fsync, rename).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path_for(const EmbeddingSource& key) const;

  void store(const Embedding& embedding, std::string_view config_hash) const;

  // nullopt when the file is absent or was written under a different config
  // hash. Throws CacheCorrupt for truncated or checksum-failing files.
  std::optional<Embedding> load(const EmbeddingSource& key, std::string_view config_hash) const;

 private:
  std::filesystem::path root_;
};

// Exposed for tests and tooling.
std::string encode_embedding_file(const Embedding& embedding, std::string_view config_hash);

struct DecodedEmbeddingFile {
  Embedding embedding;
  std::string config_hash;
};
DecodedEmbeddingFile decode_embedding_file(std::string_view bytes);

std::string escape_path_component(std::string_view raw);

}  // namespace swpipe::encoders
