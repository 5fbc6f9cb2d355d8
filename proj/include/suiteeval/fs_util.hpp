#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace suiteeval::fsutil {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Total size in bytes of all regular files below `root` (0 if absent).
std::uint64_t tree_bytes(const std::filesystem::path& root);

bool files_identical(const std::filesystem::path& a,
                     const std::filesystem::path& b);

}  // namespace suiteeval::fsutil
