#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace metasurf {

// Writes to "<path>.tmp" and renames over `path`, so readers never see a
// partially written file. Throws std::runtime_error on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace metasurf
