#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace storyloop::fsutil {

/// Reads a whole file in binary mode. Throws Error(NotFound) if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" then renames over path. Throws std::filesystem_error / Error on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Appends bytes and flushes to the OS. Returns false on any I/O failure.
bool append_durable(const std::filesystem::path& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);

}  // namespace storyloop::fsutil
