#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace swpipe {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// CRC-32 (IEEE, zlib polynomial).
std::uint32_t crc32(std::span<const std::byte> bytes);

// Stable child seed for a named sub-task. Depends only on (master, label),
// never on call order, so stages and trees get reproducible streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

}  // namespace swpipe
