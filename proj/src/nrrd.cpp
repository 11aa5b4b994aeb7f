// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/nrrd.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mvseg/error.hpp"

namespace mvseg {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kUInt8:
    case ScalarType::kInt8: return 1;
    case ScalarType::kUInt16:
    case ScalarType::kInt16: return 2;
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

const char* scalar_name(ScalarType t) {
  switch (t) {
    case ScalarType::kUInt8: return "uint8";
    case ScalarType::kInt8: return "int8";
    case ScalarType::kUInt16: return "uint16";
    case ScalarType::kInt16: return "int16";
    case ScalarType::kFloat32: return "float";
    case ScalarType::kFloat64: return "double";
  }
  return "";
}

ScalarType parse_type(const std::string& raw) {
  static const std::map<std::string, ScalarType> names = {
      {"uchar", ScalarType::kUInt8},          {"unsigned char", ScalarType::kUInt8},
      {"uint8", ScalarType::kUInt8},          {"uint8_t", ScalarType::kUInt8},
      {"signed char", ScalarType::kInt8},     {"int8", ScalarType::kInt8},
      {"int8_t", ScalarType::kInt8},          {"short", ScalarType::kInt16},
      {"short int", ScalarType::kInt16},      {"signed short", ScalarType::kInt16},
      {"signed short int", ScalarType::kInt16}, {"int16", ScalarType::kInt16},
      {"int16_t", ScalarType::kInt16},        {"ushort", ScalarType::kUInt16},
      {"unsigned short", ScalarType::kUInt16}, {"unsigned short int", ScalarType::kUInt16},
      {"uint16", ScalarType::kUInt16},        {"uint16_t", ScalarType::kUInt16},
      {"float", ScalarType::kFloat32},        {"double", ScalarType::kFloat64},
  };
  const auto it = names.find(lower(raw));
  if (it == names.end())
    throw Error(ErrorCode::kParseError, "unsupported scalar type '" + raw + "'", "type");
  return it->second;
}

std::vector<double> parse_numbers(const std::string& s, const char* field) {
  std::vector<double> out;
  std::string cleaned = s;
  for (char& c : cleaned)
    if (c == '(' || c == ')' || c == ',') c = ' ';
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) {
    if (lower(tok) == "none") continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "malformed number '" + tok + "'", field);
    }
  }
  return out;
}

std::string gunzip(std::string_view in) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK)
    throw Error(ErrorCode::kParseError, "zlib init failed", "encoding");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      // A truncated gzip stream surfaces as Z_BUF_ERROR with no more input.
      if (rc == Z_BUF_ERROR) break;
      throw Error(ErrorCode::kParseError, "corrupt gzip payload", "encoding");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
  }
  inflateEnd(&zs);
  return out;
}

std::string gzip(std::string_view in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(ErrorCode::kIoError, "zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = deflate(&zs, Z_FINISH);
    out.append(buf, sizeof(buf) - zs.avail_out);
  } while (rc == Z_OK);
  deflateEnd(&zs);
  return out;
}

template <typename T>
T load_scalar(const char* p, bool swap) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if (swap && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_scalar(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(b, sizeof(T));
}

double decode_one(const char* p, ScalarType t, bool swap) {
  switch (t) {
    case ScalarType::kUInt8: return load_scalar<std::uint8_t>(p, swap);
    case ScalarType::kInt8: return load_scalar<std::int8_t>(p, swap);
    case ScalarType::kUInt16: return load_scalar<std::uint16_t>(p, swap);
    case ScalarType::kInt16: return load_scalar<std::int16_t>(p, swap);
    case ScalarType::kFloat32: return load_scalar<float>(p, swap);
    case ScalarType::kFloat64: return load_scalar<double>(p, swap);
  }
  return 0.0;
}

struct ParsedNrrd {
  Geometry geometry;
  ScalarType type = ScalarType::kFloat32;
  std::string payload;  // decoded, still in file byte order
  bool swap = false;
};

ParsedNrrd parse(std::string_view bytes, std::vector<std::string>* warnings) {
  if (bytes.size() < 8 || bytes.substr(0, 7) != "NRRD000" || bytes[7] < '1' || bytes[7] > '5')
    throw Error(ErrorCode::kParseError, "missing NRRD magic", "magic");

  std::map<std::string, std::string> fields;
  std::size_t pos = bytes.find('\n');
  if (pos == std::string_view::npos)
    throw Error(ErrorCode::kParseError, "header has no terminating blank line", "header");
  ++pos;
  bool terminated = false;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    if (line.empty()) {
      terminated = true;
      break;
    }
    if (line.front() == '#') continue;
    if (line.find(":=") != std::string_view::npos) continue;  // key/value comments
    const std::size_t colon = line.find(": ");
    if (colon == std::string_view::npos)
      throw Error(ErrorCode::kParseError, "malformed header line '" + std::string(line) + "'",
                  "header");
    fields[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 2));
  }
  if (!terminated)
    throw Error(ErrorCode::kParseError, "header has no terminating blank line", "header");

  auto require = [&](const char* key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end())
      throw Error(ErrorCode::kParseError, std::string("missing required field '") + key + "'",
                  key);
    return it->second;
  };

  ParsedNrrd out;
  const std::string& dim_s = require("dimension");
  if (trim(dim_s) != "3")
    throw Error(ErrorCode::kParseError, "unsupported dimension " + dim_s + " (expected 3)",
                "dimension");
  out.type = parse_type(require("type"));

  const auto sizes = parse_numbers(require("sizes"), "sizes");
  if (sizes.size() != 3)
    throw Error(ErrorCode::kParseError, "sizes must list 3 axes", "sizes");
  for (int a = 0; a < 3; ++a) {
    if (sizes[a] < 1 || sizes[a] != std::floor(sizes[a]) || sizes[a] > 1e5)
      throw Error(ErrorCode::kParseError, "invalid axis size", "sizes");
    out.geometry.dims[a] = static_cast<int>(sizes[a]);
  }

  if (fields.count("data file"))
    throw Error(ErrorCode::kParseError, "detached data files are not supported", "data file");

  const std::string enc = lower(require("encoding"));
  bool gz = false;
  if (enc == "gzip" || enc == "gz") {
    gz = true;
  } else if (enc != "raw") {
    throw Error(ErrorCode::kParseError, "unsupported encoding '" + enc + "'", "encoding");
  }

  const std::size_t elem = scalar_size(out.type);
  if (elem > 1) {
    const auto it = fields.find("endian");
    if (it == fields.end())
      throw Error(ErrorCode::kParseError, "multi-byte data requires an endian field", "endian");
    const std::string e = lower(it->second);
    if (e != "little" && e != "big")
      throw Error(ErrorCode::kParseError, "invalid endian '" + e + "'", "endian");
    const bool file_little = e == "little";
    out.swap = file_little != (std::endian::native == std::endian::little);
  }

  if (const auto it = fields.find("space directions"); it != fields.end()) {
    const auto v = parse_numbers(it->second, "space directions");
    if (v.size() != 9)
      throw Error(ErrorCode::kParseError, "space directions must hold three 3-vectors",
                  "space directions");
    for (int a = 0; a < 3; ++a) {
      Vec3 col(v[3 * a], v[3 * a + 1], v[3 * a + 2]);
      const double n = col.norm();
      if (!(n > 0.0))
        throw Error(ErrorCode::kParseError, "zero-length space direction", "space directions");
      out.geometry.spacing[a] = n;
      out.geometry.orientation.col(a) = col / n;
    }
  } else if (const auto sp = fields.find("spacings"); sp != fields.end()) {
    const auto v = parse_numbers(sp->second, "spacings");
    if (v.size() != 3)
      throw Error(ErrorCode::kParseError, "spacings must list 3 axes", "spacings");
    for (int a = 0; a < 3; ++a) out.geometry.spacing[a] = std::isnan(v[a]) ? 1.0 : v[a];
  } else if (warnings) {
    warnings->push_back("no 'space directions' or 'spacings'; assuming identity orientation and 1 mm spacing");
  }
  if (const auto it = fields.find("space origin"); it != fields.end()) {
    const auto v = parse_numbers(it->second, "space origin");
    if (v.size() != 3)
      throw Error(ErrorCode::kParseError, "space origin must be a 3-vector", "space origin");
    out.geometry.origin = Vec3(v[0], v[1], v[2]);
  }
  try {
    out.geometry.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, e.what(), e.field());
  }

  std::string_view data = bytes.substr(std::min(pos, bytes.size()));
  out.payload = gz ? gunzip(data) : std::string(data);
  const std::size_t need = out.geometry.voxel_count() * elem;
  if (out.payload.size() < need)
    throw Error(ErrorCode::kParseError,
                "data payload truncated: expected " + std::to_string(need) + " bytes, found " +
                    std::to_string(out.payload.size()),
                "sizes");
  return out;
}

std::string header(const Geometry& g, ScalarType type, NrrdEncoding enc) {
  char buf[256];
  std::string h = "NRRD0004\n";
  h += "# Complete NRRD file format specification at:\n";
  h += "# http://teem.sourceforge.net/nrrd/format.html\n";
  h += std::string("type: ") + scalar_name(type) + "\n";
  h += "dimension: 3\n";
  h += "space: left-posterior-superior\n";
  std::snprintf(buf, sizeof(buf), "sizes: %d %d %d\n", g.dims[0], g.dims[1], g.dims[2]);
  h += buf;
  h += "space directions:";
  for (int a = 0; a < 3; ++a) {
    const Vec3 c = g.orientation.col(a) * g.spacing[a];
    std::snprintf(buf, sizeof(buf), " (%.17g,%.17g,%.17g)", c[0], c[1], c[2]);
    h += buf;
  }
  h += "\nkinds: domain domain domain\n";
  if (scalar_size(type) > 1) h += "endian: little\n";
  h += enc == NrrdEncoding::kGzip ? "encoding: gzip\n" : "encoding: raw\n";
  std::snprintf(buf, sizeof(buf), "space origin: (%.17g,%.17g,%.17g)\n\n", g.origin[0],
                g.origin[1], g.origin[2]);
  h += buf;
  return h;
}

template <typename T>
void encode_integer(std::string& out, const std::vector<float>& s) {
  for (float v : s) {
    if (v != std::floor(v) || v < static_cast<float>(std::numeric_limits<T>::min()) ||
        v > static_cast<float>(std::numeric_limits<T>::max()))
      throw Error(ErrorCode::kInvalidArgument, "sample not representable in integer output type",
                  "type");
    store_scalar<T>(out, static_cast<T>(v));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace

Volume3D read_nrrd(std::string_view bytes, std::vector<std::string>* warnings) {
  ParsedNrrd p = parse(bytes, warnings);
  const std::size_t n = p.geometry.voxel_count();
  const std::size_t elem = scalar_size(p.type);
  std::vector<float> samples(n);
  for (std::size_t i = 0; i < n; ++i)
    samples[i] = static_cast<float>(decode_one(p.payload.data() + i * elem, p.type, p.swap));
  return Volume3D(p.geometry, std::move(samples));
}

Volume3D load_nrrd(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return read_nrrd(read_file(path), warnings);
}

std::string write_nrrd(const Volume3D& vol, const NrrdWriteOptions& opts) {
  std::string data;
  data.reserve(vol.samples.size() * scalar_size(opts.type));
  switch (opts.type) {
    case ScalarType::kUInt8: encode_integer<std::uint8_t>(data, vol.samples); break;
    case ScalarType::kInt8: encode_integer<std::int8_t>(data, vol.samples); break;
    case ScalarType::kUInt16: encode_integer<std::uint16_t>(data, vol.samples); break;
    case ScalarType::kInt16: encode_integer<std::int16_t>(data, vol.samples); break;
    case ScalarType::kFloat32:
      for (float v : vol.samples) store_scalar<float>(data, v);
      break;
    case ScalarType::kFloat64:
      for (float v : vol.samples) store_scalar<double>(data, v);
      break;
  }
  std::string out = header(vol.geometry, opts.type, opts.encoding);
  out += opts.encoding == NrrdEncoding::kGzip ? gzip(data) : data;
  return out;
}

void save_nrrd(const Volume3D& vol, const std::filesystem::path& path,
               const NrrdWriteOptions& opts) {
  write_file(path, write_nrrd(vol, opts));
}

std::string write_mask_nrrd(const LabelMask& mask) {
  std::string out = header(mask.geometry, ScalarType::kUInt8, NrrdEncoding::kRaw);
  out.reserve(out.size() + mask.samples.size());
  for (auto v : mask.samples) out.push_back(v ? 1 : 0);
  return out;
}

void save_mask_nrrd(const LabelMask& mask, const std::filesystem::path& path) {
  write_file(path, write_mask_nrrd(mask));
}

LabelMask read_mask_nrrd(std::string_view bytes) {
  ParsedNrrd p = parse(bytes, nullptr);
  const std::size_t n = p.geometry.voxel_count();
  const std::size_t elem = scalar_size(p.type);
  std::vector<std::uint8_t> samples(n);
  for (std::size_t i = 0; i < n; ++i)
    samples[i] = decode_one(p.payload.data() + i * elem, p.type, p.swap) != 0.0 ? 1 : 0;
  return LabelMask(p.geometry, std::move(samples));
}

LabelMask load_mask_nrrd(const std::filesystem::path& path) {
  return read_mask_nrrd(read_file(path));
}

}  // namespace mvseg
