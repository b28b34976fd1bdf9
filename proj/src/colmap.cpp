#include "ocgs/colmap.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ocgs/error.hpp"

namespace ocgs {

namespace fs = std::filesystem;

namespace {

struct ModelInfo {
  int id;
  const char* name;
  int params;
};

// COLMAP's camera model table; only the first three are accepted downstream.
constexpr ModelInfo kModels[] = {
    {0, "SIMPLE_PINHOLE", 3}, {1, "PINHOLE", 4},         {2, "SIMPLE_RADIAL", 4},
    {3, "RADIAL", 5},         {4, "OPENCV", 8},          {5, "OPENCV_FISHEYE", 8},
    {6, "FULL_OPENCV", 12},   {7, "FOV", 5},             {8, "SIMPLE_RADIAL_FISHEYE", 4},
    {9, "RADIAL_FISHEYE", 5}, {10, "THIN_PRISM_FISHEYE", 12}};

const ModelInfo* model_by_name(const std::string& n) {
  for (const auto& m : kModels)
    if (n == m.name) return &m;
  return nullptr;
}
const ModelInfo* model_by_id(int id) {
  for (const auto& m : kModels)
    if (id == m.id) return &m;
  return nullptr;
}

bool supported(const std::string& model) {
  return model == "SIMPLE_PINHOLE" || model == "PINHOLE" || model == "SIMPLE_RADIAL";
}

void check_camera(const ColmapCamera& c, const fs::path& file) {
  if (!supported(c.model))
    throw Error(ErrorKind::unsupported_model,
                file.string() + ": camera " + std::to_string(c.id) + " uses unsupported model " + c.model);
  const ModelInfo* info = model_by_name(c.model);
  if (static_cast<int>(c.params.size()) != info->params)
    throw Error(ErrorKind::ingest, file.string() + ": wrong parameter count for camera " + std::to_string(c.id));
  if (c.width <= 0 || c.height <= 0)
    throw Error(ErrorKind::ingest, file.string() + ": bad size for camera " + std::to_string(c.id));
}

std::ifstream open(const fs::path& p, bool binary) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorKind::ingest, "missing or unreadable file: " + p.string());
  return in;
}

// Data lines of a COLMAP text file with their 1-based line numbers (comments dropped,
// blank lines kept because images.txt uses them for empty keypoint lists).
std::vector<std::pair<int, std::string>> text_lines(const fs::path& p) {
  std::ifstream in = open(p, false);
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    out.emplace_back(no, line);
  }
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

[[noreturn]] void bad_line(const fs::path& p, int line) {
  throw Error(ErrorKind::ingest, p.string() + ":" + std::to_string(line) + ": malformed record");
}

void read_cameras_text(const fs::path& p, SparseModel& m) {
  for (const auto& [no, line] : text_lines(p)) {
    if (blank(line)) continue;
    std::istringstream ss(line);
    ColmapCamera c;
    if (!(ss >> c.id >> c.model >> c.width >> c.height)) bad_line(p, no);
    double v;
    while (ss >> v) c.params.push_back(v);
    if (!model_by_name(c.model) && !supported(c.model))
      throw Error(ErrorKind::unsupported_model, p.string() + ": unknown camera model " + c.model);
    check_camera(c, p);
    m.cameras[c.id] = c;
  }
}

void read_images_text(const fs::path& p, SparseModel& m) {
  const auto lines = text_lines(p);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i].second)) continue;
    std::istringstream ss(lines[i].second);
    ImageRecord r;
    if (!(ss >> r.id >> r.qvec[0] >> r.qvec[1] >> r.qvec[2] >> r.qvec[3] >> r.tvec[0] >> r.tvec[1] >> r.tvec[2] >>
          r.camera_id >> r.name))
      bad_line(p, lines[i].first);
    ++i;  // keypoint line, possibly blank or absent at end of file
    m.images.push_back(r);
  }
}

void read_points_text(const fs::path& p, SparseModel& m) {
  for (const auto& [no, line] : text_lines(p)) {
    if (blank(line)) continue;
    std::istringstream ss(line);
    std::uint64_t id;
    Eigen::Vector3d x;
    int r, g, b;
    if (!(ss >> id >> x[0] >> x[1] >> x[2] >> r >> g >> b)) bad_line(p, no);
    m.point_ids.push_back(id);
    m.points.push_back(x);
    m.colors.push_back(Eigen::Vector3d(r, g, b) / 255.0);
  }
}

template <typename T>
T read_pod(std::ifstream& in, const fs::path& p) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(p.string() + ": truncated binary model", static_cast<std::uint64_t>(std::max<std::streamoff>(0, in.tellg())));
  return v;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void read_cameras_binary(const fs::path& p, SparseModel& m) {
  std::ifstream in = open(p, true);
  const auto n = read_pod<std::uint64_t>(in, p);
  for (std::uint64_t i = 0; i < n; ++i) {
    ColmapCamera c;
    c.id = read_pod<std::uint32_t>(in, p);
    const int model = read_pod<std::int32_t>(in, p);
    c.width = static_cast<int>(read_pod<std::uint64_t>(in, p));
    c.height = static_cast<int>(read_pod<std::uint64_t>(in, p));
    const ModelInfo* info = model_by_id(model);
    if (!info) throw Error(ErrorKind::unsupported_model, p.string() + ": unknown camera model id " + std::to_string(model));
    c.model = info->name;
    for (int k = 0; k < info->params; ++k) c.params.push_back(read_pod<double>(in, p));
    check_camera(c, p);
    m.cameras[c.id] = c;
  }
}

void read_images_binary(const fs::path& p, SparseModel& m) {
  std::ifstream in = open(p, true);
  const auto n = read_pod<std::uint64_t>(in, p);
  for (std::uint64_t i = 0; i < n; ++i) {
    ImageRecord r;
    r.id = read_pod<std::uint32_t>(in, p);
    for (int k = 0; k < 4; ++k) r.qvec[k] = read_pod<double>(in, p);
    for (int k = 0; k < 3; ++k) r.tvec[k] = read_pod<double>(in, p);
    r.camera_id = read_pod<std::uint32_t>(in, p);
    char ch;
    while ((ch = read_pod<char>(in, p)) != '\0') r.name.push_back(ch);
    const auto n2d = read_pod<std::uint64_t>(in, p);
    in.seekg(static_cast<std::streamoff>(n2d * 24), std::ios::cur);
    if (!in) throw FormatError(p.string() + ": truncated keypoints", 0);
    m.images.push_back(r);
  }
}

void read_points_binary(const fs::path& p, SparseModel& m) {
  std::ifstream in = open(p, true);
  const auto n = read_pod<std::uint64_t>(in, p);
  for (std::uint64_t i = 0; i < n; ++i) {
    m.point_ids.push_back(read_pod<std::uint64_t>(in, p));
    Eigen::Vector3d x;
    for (int k = 0; k < 3; ++k) x[k] = read_pod<double>(in, p);
    Eigen::Vector3d c;
    for (int k = 0; k < 3; ++k) c[k] = read_pod<std::uint8_t>(in, p) / 255.0;
    read_pod<double>(in, p);  // reprojection error
    const auto track = read_pod<std::uint64_t>(in, p);
    in.seekg(static_cast<std::streamoff>(track * 8), std::ios::cur);
    if (!in) throw FormatError(p.string() + ": truncated track", 0);
    m.points.push_back(x);
    m.colors.push_back(c);
  }
}

void validate(SparseModel& m, const fs::path& dir) {
  for (const auto& r : m.images) {
    if (!m.cameras.count(r.camera_id))
      throw Error(ErrorKind::ingest, dir.string() + ": image '" + r.name + "' references undeclared camera " +
                                         std::to_string(r.camera_id));
    if (!r.qvec.allFinite() || !r.tvec.allFinite() || !(r.qvec.norm() > 0.0))
      throw Error(ErrorKind::ingest, dir.string() + ": image '" + r.name + "' has an invalid pose");
  }
  for (std::size_t i = 0; i < m.points.size(); ++i)
    if (!m.points[i].allFinite())
      throw Error(ErrorKind::ingest, dir.string() + ": non-finite point " + std::to_string(m.point_ids[i]));
  std::stable_sort(m.images.begin(), m.images.end(),
                   [](const ImageRecord& a, const ImageRecord& b) { return a.name < b.name; });
}

int rgb_byte(double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

CameraView ColmapCamera::intrinsics() const {
  CameraView c;
  c.width = width;
  c.height = height;
  if (model == "PINHOLE") {
    c.fx = params[0], c.fy = params[1], c.cx = params[2], c.cy = params[3];
  } else {
    c.fx = c.fy = params[0];
    c.cx = params[1], c.cy = params[2];
  }
  return c;
}

CameraView SparseModel::camera_for(const ImageRecord& r) const {
  auto it = cameras.find(r.camera_id);
  if (it == cameras.end()) throw Error(ErrorKind::ingest, "image '" + r.name + "' references undeclared camera");
  CameraView c = it->second.intrinsics();
  const Eigen::Vector4d q = r.qvec.normalized();
  c.pose.topLeftCorner<3, 3>() = rotation_from_unit_quaternion(q);
  c.pose.topRightCorner<3, 1>() = r.tvec;
  return c;
}

SparseModel parse_colmap(const fs::path& dir) {
  SparseModel m;
  const bool text = fs::exists(dir / "cameras.txt") || !fs::exists(dir / "cameras.bin");
  if (text) {
    read_cameras_text(dir / "cameras.txt", m);
    read_images_text(dir / "images.txt", m);
    read_points_text(dir / "points3D.txt", m);
  } else {
    read_cameras_binary(dir / "cameras.bin", m);
    read_images_binary(dir / "images.bin", m);
    read_points_binary(dir / "points3D.bin", m);
  }
  validate(m, dir);
  return m;
}

void write_colmap_text(const fs::path& dir, const SparseModel& m) {
  fs::create_directories(dir);
  std::ofstream cams(dir / "cameras.txt"), imgs(dir / "images.txt"), pts(dir / "points3D.txt");
  if (!cams || !imgs || !pts) throw Error(ErrorKind::ingest, "cannot write COLMAP model to " + dir.string());
  for (auto* s : {&cams, &imgs, &pts}) *s << std::setprecision(17);
  cams << "# CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]\n";
  for (const auto& [id, c] : m.cameras) {
    cams << id << ' ' << c.model << ' ' << c.width << ' ' << c.height;
    for (double p : c.params) cams << ' ' << p;
    cams << '\n';
  }
  imgs << "# IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n# POINTS2D[] as (X, Y, POINT3D_ID)\n";
  for (const auto& r : m.images) {
    imgs << r.id;
    for (int k = 0; k < 4; ++k) imgs << ' ' << r.qvec[k];
    for (int k = 0; k < 3; ++k) imgs << ' ' << r.tvec[k];
    imgs << ' ' << r.camera_id << ' ' << r.name << "\n\n";
  }
  pts << "# POINT3D_ID X Y Z R G B ERROR TRACK[]\n";
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const std::uint64_t id = i < m.point_ids.size() ? m.point_ids[i] : i + 1;
    pts << id << ' ' << m.points[i][0] << ' ' << m.points[i][1] << ' ' << m.points[i][2] << ' '
        << rgb_byte(m.colors[i][0]) << ' ' << rgb_byte(m.colors[i][1]) << ' ' << rgb_byte(m.colors[i][2]) << " 0\n";
  }
}

void write_colmap_binary(const fs::path& dir, const SparseModel& m) {
  fs::create_directories(dir);
  std::ofstream cams(dir / "cameras.bin", std::ios::binary), imgs(dir / "images.bin", std::ios::binary),
      pts(dir / "points3D.bin", std::ios::binary);
  if (!cams || !imgs || !pts) throw Error(ErrorKind::ingest, "cannot write COLMAP model to " + dir.string());
  write_pod<std::uint64_t>(cams, m.cameras.size());
  for (const auto& [id, c] : m.cameras) {
    const ModelInfo* info = model_by_name(c.model);
    if (!info) throw Error(ErrorKind::unsupported_model, "cannot encode camera model " + c.model);
    write_pod<std::uint32_t>(cams, id);
    write_pod<std::int32_t>(cams, info->id);
    write_pod<std::uint64_t>(cams, static_cast<std::uint64_t>(c.width));
    write_pod<std::uint64_t>(cams, static_cast<std::uint64_t>(c.height));
    for (double p : c.params) write_pod(cams, p);
  }
  write_pod<std::uint64_t>(imgs, m.images.size());
  for (const auto& r : m.images) {
    write_pod<std::uint32_t>(imgs, r.id);
    for (int k = 0; k < 4; ++k) write_pod(imgs, r.qvec[k]);
    for (int k = 0; k < 3; ++k) write_pod(imgs, r.tvec[k]);
    write_pod<std::uint32_t>(imgs, r.camera_id);
    imgs.write(r.name.c_str(), static_cast<std::streamsize>(r.name.size() + 1));
    write_pod<std::uint64_t>(imgs, 0);
  }
  write_pod<std::uint64_t>(pts, m.points.size());
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    write_pod<std::uint64_t>(pts, i < m.point_ids.size() ? m.point_ids[i] : i + 1);
    for (int k = 0; k < 3; ++k) write_pod(pts, m.points[i][k]);
    for (int k = 0; k < 3; ++k) write_pod<std::uint8_t>(pts, static_cast<std::uint8_t>(rgb_byte(m.colors[i][k])));
    write_pod<double>(pts, 0.0);
    write_pod<std::uint64_t>(pts, 0);
  }
}

ImageRecord image_record_from_camera(const CameraView& cam, std::uint32_t id, std::uint32_t camera_id,
                                     const std::string& name) {
  ImageRecord r;
  r.id = id;
  r.camera_id = camera_id;
  r.name = name;
  const Eigen::Quaterniond q(Eigen::Matrix3d(cam.rotation()));
  r.qvec = {q.w(), q.x(), q.y(), q.z()};
  r.tvec = cam.translation();
  return r;
}

}  // namespace ocgs
