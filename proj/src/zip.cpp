#include "storyloop/zip.hpp"

#include <zlib.h>

#include <cstdint>

#include "storyloop/error.hpp"

namespace storyloop::zip {
namespace {

constexpr std::uint16_t kDosTime = 0;                      // 00:00:00
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get(const std::string& in, std::size_t at, int width) {
  if (at + width > in.size()) throw Error(Errc::InvalidArgument, "truncated zip archive");
  std::uint32_t v = 0;
  for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[at + i]);
  return v;
}

std::uint32_t crc_of(const std::string& data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(
      crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace

std::string write_archive(const std::vector<Entry>& entries) {
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    if (e.data.size() > 0xfffffffeu || e.name.size() > 0xffffu)
      throw Error(Errc::InvalidArgument, "zip entry too large: " + e.name);
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto crc = crc_of(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto name_len = static_cast<std::uint16_t>(e.name.size());

    put32(out, 0x04034b50);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out += e.name;
    out += e.data;

    put32(central, 0x02014b50);
    put16(central, 20);  // made by
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += e.name;
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read_stored_archive(const std::string& bytes) {
  std::vector<Entry> out;
  std::size_t at = 0;
  while (at + 4 <= bytes.size() && get(bytes, at, 4) == 0x04034b50) {
    if (at + 30 > bytes.size()) throw Error(Errc::InvalidArgument, "truncated zip archive");
    if (get(bytes, at + 8, 2) != 0) throw Error(Errc::InvalidArgument, "compressed zip entries are not supported");
    const auto crc = get(bytes, at + 14, 4);
    const auto size = get(bytes, at + 18, 4);
    const auto name_len = get(bytes, at + 26, 2);
    const auto extra_len = get(bytes, at + 28, 2);
    const auto name_at = at + 30;
    const auto data_at = name_at + name_len + extra_len;
    if (data_at + size > bytes.size()) throw Error(Errc::InvalidArgument, "truncated zip archive");
    Entry e{bytes.substr(name_at, name_len), bytes.substr(data_at, size)};
    if (crc_of(e.data) != crc) throw Error(Errc::InvalidArgument, "crc mismatch in " + e.name);
    out.push_back(std::move(e));
    at = data_at + size;
  }
  // the central directory, or the end record of an empty archive, must follow
  if (at + 4 > bytes.size() || (get(bytes, at, 4) != 0x02014b50 && get(bytes, at, 4) != 0x06054b50))
    throw Error(Errc::InvalidArgument, "not a zip archive");
  return out;
}

}  // namespace storyloop::zip
