#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgnp/gpgen/protocol.hpp"

namespace cgnp {

class IoError : public Error {
 public:
  using Error::Error;
};

/// One JSON object per line: {"x_c":[..],"y_c":[..],"x_t":[..],"y_t":[..]}
/// with shortest round-trip decimals.
std::string serialize_episode(const Episode& ep);
Episode parse_episode(std::string_view line);

std::string serialize_episodes(std::span<const Episode> episodes);
std::vector<Episode> parse_episodes(std::string_view text);

void write_episodes(const std::filesystem::path& path, std::span<const Episode> episodes);
/// Throws IoError on an unreadable or empty file.
std::vector<Episode> read_episodes(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, hex encoded.
std::string content_hash(std::string_view bytes);

}  // namespace cgnp
