#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace divswap {

// Writes to a sibling temporary and renames over `path`, so readers never
// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace divswap
