#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctxjudge {

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD, one per
// byte, so the result is total over arbitrary input.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::size_t utf8_length(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Stable 64-bit hash (FNV-1a followed by a splitmix finalizer).
std::uint64_t stable_hash(std::string_view data);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace ctxjudge
