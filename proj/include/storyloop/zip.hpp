#pragma once

// Minimal zip writer: stored (uncompressed) entries, fixed timestamps, so the
// same inputs always give the same archive bytes.

#include <string>
#include <utility>
#include <vector>

namespace storyloop::zip {

struct Entry {
  std::string name;
  std::string data;
};

std::string write_archive(const std::vector<Entry>& entries);

/// Reads an archive made of stored entries. Throws Error(InvalidArgument)
/// on anything else.
std::vector<Entry> read_stored_archive(const std::string& bytes);

}  // namespace storyloop::zip
