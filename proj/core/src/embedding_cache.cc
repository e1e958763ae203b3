#include "swpipe/embedding_cache.h"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <nlohmann/json.hpp>

#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/io.h"

namespace swpipe::encoders {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little);
constexpr std::string_view kMagic{"EMB1\0\0\0\0", 8};

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::kCacheCorrupt, what);
}

template <typename T>
void append_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

std::string escape_path_component(std::string_view raw) {
  std::string out;
  for (unsigned char c : raw) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  if (out == "." || out == "..") out = fmt::format("%2E{}", out.substr(1));
  return out;
}

std::string encode_embedding_file(const Embedding& embedding, std::string_view config_hash) {
  validate(embedding);
  const json meta = {
      {"participant", embedding.source.participant_id},
      {"task", corpus::to_string(embedding.source.task)},
      {"encoder_id", embedding.source.encoder_id},
      {"dim", embedding.dim()},
      {"level", to_string(embedding.source.level)},
      {"config_hash", config_hash},
  };
  const std::string meta_text = meta.dump();

  std::string out(kMagic);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  const std::size_t payload_at = out.size();
  for (float v : embedding.vector) append_le<float>(out, v);
  const auto payload = std::as_bytes(std::span(out.data() + payload_at, out.size() - payload_at));
  append_le<std::uint32_t>(out, crc32(payload));
  return out;
}

DecodedEmbeddingFile decode_embedding_file(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    corrupt("bad magic or truncated header");
  }
  std::uint32_t meta_len = 0;
  std::memcpy(&meta_len, bytes.data() + kMagic.size(), 4);
  const std::size_t meta_at = kMagic.size() + 4;
  if (bytes.size() < meta_at + meta_len) corrupt("truncated metadata");

  json meta;
  try {
    meta = json::parse(bytes.substr(meta_at, meta_len));
  } catch (const json::exception& e) {
    corrupt(std::string("unreadable metadata: ") + e.what());
  }

  DecodedEmbeddingFile out;
  std::size_t dim = 0;
  try {
    dim = meta.at("dim").get<std::size_t>();
    out.config_hash = meta.at("config_hash").get<std::string>();
    out.embedding.source.participant_id = meta.at("participant").get<std::string>();
    out.embedding.source.encoder_id = meta.at("encoder_id").get<std::string>();
    const auto task = corpus::parse_task(meta.at("task").get<std::string>());
    const auto level = parse_level(meta.at("level").get<std::string>());
    if (!task || !level) corrupt("bad task or level in metadata");
    out.embedding.source.task = *task;
    out.embedding.source.level = *level;
  } catch (const json::exception& e) {
    corrupt(std::string("incomplete metadata: ") + e.what());
  }

  const std::size_t payload_at = meta_at + meta_len;
  const std::size_t payload_len = dim * sizeof(float);
  if (bytes.size() != payload_at + payload_len + 4) {
    corrupt(fmt::format("expected {} bytes, found {}", payload_at + payload_len + 4, bytes.size()));
  }
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + payload_at + payload_len, 4);
  const auto payload = std::as_bytes(std::span(bytes.data() + payload_at, payload_len));
  if (crc32(payload) != stored_crc) corrupt("payload checksum mismatch");

  out.embedding.vector.resize(dim);
  std::memcpy(out.embedding.vector.data(), bytes.data() + payload_at, payload_len);
  return out;
}

EmbeddingCache::EmbeddingCache(fs::path root) : root_(std::move(root)) {}

fs::path EmbeddingCache::path_for(const EmbeddingSource& key) const {
  return root_ / escape_path_component(key.encoder_id) /
         fmt::format("{}_{}_{}.emb", escape_path_component(key.participant_id),
                     corpus::to_string(key.task), to_string(key.level));
}

void EmbeddingCache::store(const Embedding& embedding, std::string_view config_hash) const {
  write_file_atomic(path_for(embedding.source), encode_embedding_file(embedding, config_hash));
}

std::optional<Embedding> EmbeddingCache::load(const EmbeddingSource& key,
                                              std::string_view config_hash) const {
  const fs::path path = path_for(key);
  if (!fs::exists(path)) return std::nullopt;
  auto decoded = decode_embedding_file(read_file(path));
  if (decoded.config_hash != config_hash) return std::nullopt;
  if (decoded.embedding.source != key) {
    corrupt(fmt::format("{} holds an embedding for a different key", path.string()));
  }
  return std::move(decoded.embedding);
}

}  // namespace swpipe::encoders
