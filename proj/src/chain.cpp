#include "storyloop/chain.hpp"

#include <cctype>

#include "storyloop/text.hpp"

namespace storyloop {
namespace {

// Length of a "12. " / "3) " marker at the start of a trimmed line, or 0.
std::size_t item_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i > 3 || i >= line.size()) return 0;
  if (line[i] != '.' && line[i] != ')') return 0;
  ++i;
  if (i < line.size() && !text::is_space(line[i])) return 0;
  return i;
}

}  // namespace

std::vector<std::string> parse_numbered_list(std::string_view reply) {
  std::vector<std::string> items;
  bool open = false;
  for (auto raw : text::split_lines(reply)) {
    auto line = text::trim(raw);
    if (auto m = item_marker(line)) {
      items.emplace_back(text::trim(line.substr(m)));
      open = true;
    } else if (open && !line.empty()) {
      auto& cur = items.back();
      if (!cur.empty()) cur.push_back('\n');
      cur.append(line);
    }
  }
  std::erase_if(items, [](const std::string& s) { return s.empty(); });
  return items;
}

std::string format_numbered_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i] + "\n";
  }
  return out;
}

std::string strip_code_fences(std::string_view reply) {
  std::string out;
  for (auto raw : text::split_lines(reply)) {
    auto line = text::trim(raw);
    if (line.starts_with("```")) continue;
    out.append(raw);
    out.push_back('\n');
  }
  return out;
}

}  // namespace storyloop
