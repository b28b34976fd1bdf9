#include "ocgs/mesh_io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ocgs/error.hpp"
#include "ocgs/ply.hpp"

namespace ocgs {

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

void add_polygon(TriangleMesh& mesh, const std::vector<std::int64_t>& idx, const std::filesystem::path& path) {
  for (auto i : idx)
    if (i < 0 || static_cast<std::size_t>(i) >= mesh.vertices.size())
      throw Error(ErrorKind::format, path.string() + ": face index out of range");
  for (std::size_t k = 2; k < idx.size(); ++k)
    mesh.triangles.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k - 1]),
                              static_cast<std::uint32_t>(idx[k])});
}

}  // namespace

void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh) {
  mesh.validate();
  const bool colored = !mesh.colors.empty();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(ErrorKind::format, "cannot write " + path.string());
    os << "ply\nformat binary_little_endian 1.0\n";
    os << "element vertex " << mesh.vertices.size() << "\n";
    os << "property double x\nproperty double y\nproperty double z\n";
    if (colored) os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    os << "element face " << mesh.triangles.size() << "\n";
    os << "property list uchar uint vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      for (int a = 0; a < 3; ++a) put(os, mesh.vertices[i][a]);
      if (colored)
        for (int c = 0; c < 3; ++c) put(os, mesh.colors[i][c]);
    }
    for (const auto& t : mesh.triangles) {
      put<std::uint8_t>(os, 3);
      for (auto i : t) put<std::uint32_t>(os, i);
    }
    if (!os) throw Error(ErrorKind::format, "write failed: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

TriangleMesh read_mesh_ply(const std::filesystem::path& path) {
  const PlyFile ply = read_ply(path);
  const PlyElement* v = ply.find("vertex");
  if (!v) throw FormatError(path.string() + ": no vertex element", ply.header_bytes);
  const int ix = v->property_index("x"), iy = v->property_index("y"), iz = v->property_index("z");
  if (ix < 0 || iy < 0 || iz < 0) throw FormatError(path.string() + ": vertex lacks x/y/z", ply.header_bytes);
  const int ir = v->property_index("red"), ig = v->property_index("green"), ib = v->property_index("blue");
  TriangleMesh mesh;
  mesh.vertices.reserve(v->count);
  for (std::size_t r = 0; r < v->count; ++r) {
    mesh.vertices.emplace_back(v->value(r, ix), v->value(r, iy), v->value(r, iz));
    if (ir >= 0 && ig >= 0 && ib >= 0)
      mesh.colors.push_back({static_cast<std::uint8_t>(v->value(r, ir)), static_cast<std::uint8_t>(v->value(r, ig)),
                             static_cast<std::uint8_t>(v->value(r, ib))});
  }
  if (const PlyElement* f = ply.find("face"))
    for (const auto& idx : f->lists) add_polygon(mesh, idx, path);
  mesh.validate();
  return mesh;
}

void write_mesh_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::format, "cannot write " + path.string());
  os << std::setprecision(17);
  for (const auto& p : mesh.vertices) os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : mesh.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!os) throw Error(ErrorKind::format, "write failed: " + path.string());
}

TriangleMesh read_mesh_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::format, "cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw Error(ErrorKind::format, path.string() + ": bad vertex on line " + std::to_string(lineno));
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::int64_t> idx;
      std::string tok;
      while (ls >> tok) {
        const long long i = std::stoll(tok.substr(0, tok.find('/')));
        idx.push_back(i < 0 ? static_cast<std::int64_t>(mesh.vertices.size()) + i : i - 1);
      }
      add_polygon(mesh, idx, path);
    }
  }
  return mesh;
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  if (lower_ext(path) == ".obj") return write_mesh_obj(path, mesh);
  write_mesh_ply(path, mesh);
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  if (lower_ext(path) == ".obj") return read_mesh_obj(path);
  return read_mesh_ply(path);
}

}  // namespace ocgs
