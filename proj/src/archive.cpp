// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/archive.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <zlib.h>

#include "mvseg/error.hpp"

namespace mvseg {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint32_t get(std::string_view s, std::size_t at, int bytes) {
  if (at + bytes > s.size()) throw Error(ErrorCode::kParseError, "truncated zip archive", "zip");
  std::uint32_t v = 0;
  for (int b = 0; b < bytes; ++b)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + b])) << (8 * b);
  return v;
}

std::uint32_t crc_of(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + done), n);
    done += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string write_zip(const std::vector<ArchiveEntry>& entries) {
  std::string out, central;
  for (const auto& e : entries) {
    if (e.data.size() > std::numeric_limits<std::uint32_t>::max() || e.name.size() > 0xffff)
      throw Error(ErrorCode::kInvalidArgument, "zip entry too large: " + e.name, "zip");
    const std::uint32_t crc = crc_of(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto offset = static_cast<std::uint32_t>(out.size());
    put32(out, kLocalSig);
    put16(out, kVersion);
    put16(out, 0);  // flags
    put16(out, 0);  // stored
    put16(out, 0);  // time
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);
    out += e.name;
    out += e.data;

    put32(central, kCentralSig);
    put16(central, kVersion);
    put16(central, kVersion);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint16_t>(e.name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attributes
    put32(central, 0);  // external attributes
    put32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<ArchiveEntry> read_zip(std::string_view bytes) {
  if (bytes.size() < 22) throw Error(ErrorCode::kParseError, "not a zip archive", "zip");
  std::size_t end = std::string_view::npos;
  for (std::size_t p = bytes.size() - 22 + 1; p-- > 0;) {
    if (get(bytes, p, 4) == kEndSig) {
      end = p;
      break;
    }
    if (bytes.size() - p > 22 + 0xffff) break;
  }
  if (end == std::string_view::npos)
    throw Error(ErrorCode::kParseError, "zip end-of-directory record not found", "zip");
  const std::uint32_t count = get(bytes, end + 10, 2);
  std::size_t at = get(bytes, end + 16, 4);

  std::vector<ArchiveEntry> entries;
  for (std::uint32_t n = 0; n < count; ++n) {
    if (get(bytes, at, 4) != kCentralSig)
      throw Error(ErrorCode::kParseError, "bad zip central directory", "zip");
    const std::uint32_t method = get(bytes, at + 10, 2);
    const std::uint32_t crc = get(bytes, at + 16, 4);
    const std::uint32_t size = get(bytes, at + 20, 4);
    const std::uint32_t name_len = get(bytes, at + 28, 2);
    const std::uint32_t extra_len = get(bytes, at + 30, 2);
    const std::uint32_t comment_len = get(bytes, at + 32, 2);
    const std::uint32_t local = get(bytes, at + 42, 4);
    if (at + 46 + name_len > bytes.size())
      throw Error(ErrorCode::kParseError, "truncated zip archive", "zip");
    ArchiveEntry e;
    e.name = std::string(bytes.substr(at + 46, name_len));
    if (method != 0)
      throw Error(ErrorCode::kParseError, "zip entry '" + e.name + "' is compressed", "zip");
    if (get(bytes, local, 4) != kLocalSig)
      throw Error(ErrorCode::kParseError, "bad zip local header", "zip");
    const std::size_t data = local + 30 + get(bytes, local + 26, 2) + get(bytes, local + 28, 2);
    if (data + size > bytes.size()) throw Error(ErrorCode::kParseError, "truncated zip entry", "zip");
    e.data = std::string(bytes.substr(data, size));
    if (crc_of(e.data) != crc)
      throw Error(ErrorCode::kParseError, "CRC mismatch in zip entry '" + e.name + "'", "zip");
    entries.push_back(std::move(e));
    at += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

}  // namespace mvseg
