#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace demandcast {

/// Writes via `<path>.tmp` and renames into place, so a failed writer leaves no file behind.
void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace demandcast
