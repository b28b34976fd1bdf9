#pragma once

#include <filesystem>

#include "ocgs/mesher.hpp"

namespace ocgs {

/// Binary little-endian PLY: double x y z, uchar red green blue (when colored), uint face list.
void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh);
/// Reads any binary-LE PLY with a vertex element; faces and colors are optional. Polygons
/// with more than three corners are fanned.
TriangleMesh read_mesh_ply(const std::filesystem::path& path);

/// Geometry only.
void write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_mesh_obj(const std::filesystem::path& path);

/// Dispatches on the extension (.ply / .obj).
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_mesh(const std::filesystem::path& path);

}  // namespace ocgs
