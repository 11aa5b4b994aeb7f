// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/mesh_io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "mvseg/error.hpp"

namespace mvseg {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(std::string_view s, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + b])) << (8 * b);
  return v;
}

float get_f32(std::string_view s, std::size_t at) {
  const std::uint32_t bits = get_u32(s, at);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string(), "path");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

MeshFormat parse_mesh_format(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!n.empty() && n[0] == '.') n.erase(0, 1);
  if (n == "stl" || n == "stl_binary") return MeshFormat::kStlBinary;
  if (n == "ply" || n == "ply_ascii") return MeshFormat::kPlyAscii;
  throw Error(ErrorCode::kInvalidArgument, "unknown mesh format '" + std::string(name) + "'",
              "format");
}

const char* extension(MeshFormat format) {
  return format == MeshFormat::kStlBinary ? "stl" : "ply";
}

std::string write_stl(const TriMesh& mesh) {
  std::string out(80, '\0');
  const char banner[] = "mvseg binary STL";
  std::memcpy(out.data(), banner, sizeof(banner) - 1);
  put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const Vec3 n = face_normal(mesh, static_cast<int>(f));
    const double len = n.norm();
    const Vec3 u = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    for (int a = 0; a < 3; ++a) put_f32(out, static_cast<float>(u[a]));
    for (int v : mesh.triangles[f])
      for (int a = 0; a < 3; ++a) put_f32(out, static_cast<float>(mesh.vertices[v][a]));
    out.push_back('\0');
    out.push_back('\0');
  }
  return out;
}

std::string write_ply(const TriMesh& mesh) {
  std::string out;
  out += "ply\nformat ascii 1.0\ncomment mvseg\n";
  out += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property float nx\nproperty float ny\nproperty float nz\n";
  out += "element face " + std::to_string(mesh.triangles.size()) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  char buf[256];
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3& p = mesh.vertices[v];
    const Vec3 n = v < mesh.normals.size() ? mesh.normals[v] : Vec3::Zero();
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g\n", p.x(), p.y(), p.z(), n.x(),
                  n.y(), n.z());
    out += buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof(buf), "3 %d %d %d\n", t[0], t[1], t[2]);
    out += buf;
  }
  return out;
}

std::string write_mesh(const TriMesh& mesh, MeshFormat format) {
  if (mesh.empty()) throw Error(ErrorCode::kEmptySurface, "cannot export an empty mesh", "mesh");
  return format == MeshFormat::kStlBinary ? write_stl(mesh) : write_ply(mesh);
}

void export_mesh(const TriMesh& mesh, MeshFormat format, const std::filesystem::path& path) {
  const std::string bytes = write_mesh(mesh, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string(), "path");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string(), "path");
}

TriMesh read_stl(std::string_view bytes) {
  if (bytes.size() < 84) throw Error(ErrorCode::kParseError, "STL shorter than its header", "header");
  const std::uint32_t n = get_u32(bytes, 80);
  if (bytes.size() != 84 + 50ull * n)
    throw Error(ErrorCode::kParseError, "STL size does not match its facet count", "count");
  TriMesh mesh;
  std::map<std::array<float, 3>, int> index;
  for (std::uint32_t f = 0; f < n; ++f) {
    const std::size_t base = 84 + 50ull * f + 12;
    Triangle t;
    for (int v = 0; v < 3; ++v) {
      const std::array<float, 3> p{get_f32(bytes, base + 12 * v), get_f32(bytes, base + 12 * v + 4),
                                   get_f32(bytes, base + 12 * v + 8)};
      auto [it, inserted] = index.try_emplace(p, static_cast<int>(mesh.vertices.size()));
      if (inserted) mesh.vertices.emplace_back(p[0], p[1], p[2]);
      t[v] = it->second;
    }
    mesh.triangles.push_back(t);
  }
  mesh.compute_normals();
  return mesh;
}

TriMesh read_ply(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw Error(ErrorCode::kParseError, "missing PLY magic", "magic");
  std::size_t nv = 0, nf = 0;
  int vertex_props = 0;
  bool has_normals = false;
  std::string current;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii")
        throw Error(ErrorCode::kParseError, "only ASCII PLY is supported", "format");
    } else if (word == "element") {
      ls >> current;
      if (current == "vertex") ls >> nv;
      else if (current == "face") ls >> nf;
    } else if (word == "property" && current == "vertex") {
      std::string type, name;
      ls >> type >> name;
      ++vertex_props;
      if (name == "nx") has_normals = true;
    } else if (word == "end_header") {
      break;
    }
  }
  if (vertex_props < 3) throw Error(ErrorCode::kParseError, "PLY vertex lacks x y z", "vertex");
  TriMesh mesh;
  mesh.vertices.resize(nv);
  if (has_normals) mesh.normals.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<double> vals(vertex_props);
    for (auto& x : vals)
      if (!(in >> x)) throw Error(ErrorCode::kParseError, "truncated PLY vertex list", "vertex");
    mesh.vertices[v] = Vec3(vals[0], vals[1], vals[2]);
    if (has_normals && vertex_props >= 6) mesh.normals[v] = Vec3(vals[3], vals[4], vals[5]);
  }
  for (std::size_t f = 0; f < nf; ++f) {
    int count = 0;
    if (!(in >> count) || count != 3)
      throw Error(ErrorCode::kParseError, "PLY faces must be triangles", "face");
    Triangle t;
    for (int& v : t)
      if (!(in >> v)) throw Error(ErrorCode::kParseError, "truncated PLY face list", "face");
    mesh.triangles.push_back(t);
  }
  bool usable = has_normals && vertex_props >= 6;
  for (auto& n : mesh.normals) {
    if (!(n.norm() > 0.0)) usable = false;
    else n.normalize();
  }
  if (!usable) mesh.normals.clear();
  mesh.validate();
  if (!usable) mesh.compute_normals();
  return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
  const MeshFormat format = parse_mesh_format(path.extension().string());
  const std::string bytes = read_file(path);
  return format == MeshFormat::kStlBinary ? read_stl(bytes) : read_ply(bytes);
}

}  // namespace mvseg
