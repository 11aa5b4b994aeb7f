// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mvseg/mesh.hpp"

namespace mvseg {

enum class MeshFormat { kStlBinary, kPlyAscii };

MeshFormat parse_mesh_format(std::string_view name);  // "stl" or "ply"
const char* extension(MeshFormat format);

/// Binary STL: 80-byte header, uint32 facet count, 50 bytes per facet, little
/// endian. Facet normals are recomputed from the vertex positions.
std::string write_stl(const TriMesh& mesh);
/// ASCII PLY with x y z nx ny nz per vertex and triangle face lists.
std::string write_ply(const TriMesh& mesh);
std::string write_mesh(const TriMesh& mesh, MeshFormat format);
void export_mesh(const TriMesh& mesh, MeshFormat format, const std::filesystem::path& path);

/// STL facets are welded on exact coordinate equality.
TriMesh read_stl(std::string_view bytes);
TriMesh read_ply(std::string_view text);
/// Picks the reader from the file extension.
TriMesh load_mesh(const std::filesystem::path& path);

}  // namespace mvseg
