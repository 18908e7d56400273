#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace citysplat::io {

/// Writes `data` to a sibling temporary file and renames it over `path`, so
/// readers never observe a partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Whole-file read; throws DataError if the file cannot be opened.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

} // namespace citysplat::io
