#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace storyloop::text {

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) noexcept;
std::string_view rtrim(std::string_view s) noexcept;
std::string_view ltrim(std::string_view s) noexcept;

/// Splits on '\n'. A trailing newline does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix) noexcept;

}  // namespace storyloop::text
