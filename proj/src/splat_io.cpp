#include "ocgs/splat_io.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ocgs/error.hpp"
#include "ocgs/ply.hpp"

namespace ocgs {

void save_splats(const std::filesystem::path& path, const SplatSet& s) {
  s.check_consistent();
  const int C = s.coeffs();
  std::vector<std::string> props = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (int i = 0; i < 3 * (C - 1); ++i) props.push_back("f_rest_" + std::to_string(i));
  for (const char* p : {"opacity", "scale_0", "scale_1", "rot_0", "rot_1", "rot_2", "rot_3"}) props.push_back(p);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::format, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << s.size() << "\n";
  for (const auto& p : props) out << "property double " << p << "\n";
  out << "end_header\n";

  std::vector<double> row(props.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::size_t j = 0;
    for (int a = 0; a < 3; ++a) row[j++] = s.position[k][a];
    const double qn = s.rotation[k].norm();
    const Eigen::Vector3d n = qn > 0.0 ? Eigen::Vector3d(rotation_from_unit_quaternion(s.rotation[k] / qn).col(2))
                                       : Eigen::Vector3d::Zero();
    for (int a = 0; a < 3; ++a) row[j++] = n[a];
    const auto sh = s.sh_of(k);
    for (int ch = 0; ch < 3; ++ch) row[j++] = sh[ch];
    for (int ch = 0; ch < 3; ++ch)
      for (int c = 1; c < C; ++c) row[j++] = sh[c * 3 + ch];
    row[j++] = s.opacity_logit[k];
    row[j++] = s.log_scale[k][0];
    row[j++] = s.log_scale[k][1];
    for (int a = 0; a < 4; ++a) row[j++] = s.rotation[k][a];
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorKind::format, "write failed for " + path.string());
}

SplatSet load_splats(const std::filesystem::path& path) {
  const PlyFile ply = read_ply(path);
  const PlyElement* v = ply.find("vertex");
  if (!v) throw FormatError("splat PLY has no vertex element", ply.header_bytes);
  auto need = [&](const std::string& p) {
    const int i = v->property_index(p);
    if (i < 0) throw FormatError("splat PLY lacks property '" + p + "'", ply.header_bytes);
    return i;
  };
  const int ix = need("x"), iy = need("y"), iz = need("z");
  const int idc[3] = {need("f_dc_0"), need("f_dc_1"), need("f_dc_2")};
  const int iop = need("opacity"), is0 = need("scale_0"), is1 = need("scale_1");
  const int ir[4] = {need("rot_0"), need("rot_1"), need("rot_2"), need("rot_3")};
  int rest = 0;
  while (v->property_index("f_rest_" + std::to_string(rest)) >= 0) ++rest;
  int degree = -1;
  for (int d = 0; d <= kMaxShDegree; ++d)
    if (3 * (sh_coeff_count(d) - 1) == rest) degree = d;
  if (degree < 0) throw FormatError("splat PLY has " + std::to_string(rest) + " f_rest properties", ply.header_bytes);
  std::vector<int> irest(rest);
  for (int i = 0; i < rest; ++i) irest[i] = need("f_rest_" + std::to_string(i));

  SplatSet s;
  s.sh_degree = degree;
  const int C = s.coeffs();
  std::vector<double> sh(static_cast<std::size_t>(C) * 3);
  for (std::size_t k = 0; k < v->count; ++k) {
    for (int ch = 0; ch < 3; ++ch) sh[ch] = v->value(k, idc[ch]);
    for (int ch = 0; ch < 3; ++ch)
      for (int c = 1; c < C; ++c) sh[c * 3 + ch] = v->value(k, irest[ch * (C - 1) + (c - 1)]);
    s.push_back({v->value(k, ix), v->value(k, iy), v->value(k, iz)},
                {v->value(k, ir[0]), v->value(k, ir[1]), v->value(k, ir[2]), v->value(k, ir[3])},
                {v->value(k, is0), v->value(k, is1)}, v->value(k, iop), sh, static_cast<std::uint32_t>(k));
  }
  return s;
}

}  // namespace ocgs
