#pragma once

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>

namespace tweetscope {

// Shortest decimal that round-trips; stable across runs and platforms.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

}  // namespace tweetscope
