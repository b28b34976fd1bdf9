#include "ocgs/scene_model.hpp"

#include <cmath>

#include "ocgs/error.hpp"

namespace ocgs {

void SplatSet::push_back(const Eigen::Vector3d& pos, const Eigen::Vector4d& rot, const Eigen::Vector2d& log_s,
                         double opacity, std::span<const double> sh_coeffs, std::uint32_t provenance) {
  if (sh_coeffs.size() != static_cast<std::size_t>(coeffs()) * 3)
    throw Error(ErrorKind::contract, "push_back: SH coefficient count mismatch");
  position.push_back(pos);
  rotation.push_back(rot);
  log_scale.push_back(log_s);
  opacity_logit.push_back(opacity);
  sh.insert(sh.end(), sh_coeffs.begin(), sh_coeffs.end());
  grad_accum.push_back(0.0);
  grad_count.push_back(0);
  seen_since_prune.push_back(0);
  max_radius.push_back(0.0);
  tag.push_back(provenance);
}

void SplatSet::push_copy(std::size_t k) {
  const std::size_t c = static_cast<std::size_t>(coeffs()) * 3;
  position.push_back(position[k]);
  rotation.push_back(rotation[k]);
  log_scale.push_back(log_scale[k]);
  opacity_logit.push_back(opacity_logit[k]);
  sh.resize(sh.size() + c);
  std::copy_n(sh.begin() + k * c, c, sh.end() - c);
  grad_accum.push_back(grad_accum[k]);
  grad_count.push_back(grad_count[k]);
  seen_since_prune.push_back(seen_since_prune[k]);
  max_radius.push_back(max_radius[k]);
  tag.push_back(tag[k]);
}

namespace {

template <typename T>
void compact(std::vector<T>& v, std::span<const std::uint8_t> keep, std::size_t stride = 1) {
  std::size_t out = 0;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (!keep[k]) continue;
    if (out != k)
      for (std::size_t s = 0; s < stride; ++s) v[out * stride + s] = v[k * stride + s];
    ++out;
  }
  v.resize(out * stride);
}

}  // namespace

void SplatSet::keep(std::span<const std::uint8_t> keep_mask) {
  if (keep_mask.size() != size()) throw Error(ErrorKind::contract, "keep: mask length mismatch");
  compact(position, keep_mask);
  compact(rotation, keep_mask);
  compact(log_scale, keep_mask);
  compact(opacity_logit, keep_mask);
  compact(sh, keep_mask, static_cast<std::size_t>(coeffs()) * 3);
  compact(grad_accum, keep_mask);
  compact(grad_count, keep_mask);
  compact(seen_since_prune, keep_mask);
  compact(max_radius, keep_mask);
  compact(tag, keep_mask);
}

void SplatSet::reset_statistics() {
  std::fill(grad_accum.begin(), grad_accum.end(), 0.0);
  std::fill(grad_count.begin(), grad_count.end(), 0u);
  std::fill(max_radius.begin(), max_radius.end(), 0.0);
}

void SplatSet::check_consistent() const {
  const std::size_t m = size();
  const bool ok = rotation.size() == m && log_scale.size() == m && opacity_logit.size() == m &&
                  sh.size() == m * coeffs() * 3 && grad_accum.size() == m && grad_count.size() == m &&
                  seen_since_prune.size() == m && max_radius.size() == m && tag.size() == m;
  if (!ok) throw Error(ErrorKind::contract, "SplatSet arrays have inconsistent lengths");
  if (sh_degree < 0 || sh_degree > kMaxShDegree) throw Error(ErrorKind::contract, "SplatSet: bad SH degree");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Eigen::Matrix3d rotation_from_unit_quaternion(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

DecodedSplat decode_splat(const SplatSet& splats, std::size_t k) {
  const Eigen::Vector3d& p = splats.position[k];
  const Eigen::Vector4d& q = splats.rotation[k];
  const Eigen::Vector2d& ls = splats.log_scale[k];
  const double o = splats.opacity_logit[k];
  bool finite = p.allFinite() && q.allFinite() && ls.allFinite() && std::isfinite(o);
  for (double c : splats.sh_of(k)) finite = finite && std::isfinite(c);
  const double qn = q.norm();
  if (!finite || !(qn > 0.0))
    throw Error(ErrorKind::parameter_corruption, "non-finite or degenerate parameter on splat " + std::to_string(k));

  const Eigen::Matrix3d r = rotation_from_unit_quaternion(q / qn);
  DecodedSplat d;
  d.position = p;
  d.tangent_u = r.col(0);
  d.tangent_v = r.col(1);
  d.normal = r.col(2);
  d.scale = {std::exp(ls.x()), std::exp(ls.y())};
  d.opacity = sigmoid(o);
  if (!d.scale.allFinite() || !(d.scale.minCoeff() > 0.0))
    throw Error(ErrorKind::parameter_corruption, "scale underflow/overflow on splat " + std::to_string(k));
  return d;
}

std::vector<DecodedSplat> decode_params(const SplatSet& splats) {
  splats.check_consistent();
  std::vector<DecodedSplat> out;
  out.reserve(splats.size());
  for (std::size_t k = 0; k < splats.size(); ++k) out.push_back(decode_splat(splats, k));
  return out;
}

void CameraView::validate() const {
  const Eigen::Matrix3d r = rotation();
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!pose.allFinite() || ortho > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6)
    throw Error(ErrorKind::contract, "camera pose is not a proper rigid transform");
  if (std::abs(pose(3, 0)) + std::abs(pose(3, 1)) + std::abs(pose(3, 2)) + std::abs(pose(3, 3) - 1.0) > 1e-12)
    throw Error(ErrorKind::contract, "camera pose bottom row must be (0,0,0,1)");
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorKind::contract, "camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::contract, "camera dimensions must be positive");
}

CameraView CameraView::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                               const Eigen::Vector3d& up, int width, int height, double fov_x) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d down = (-up + up.dot(forward) * forward).normalized();
  const Eigen::Vector3d right = down.cross(forward);
  Eigen::Matrix3d r;  // rows: camera axes expressed in world coordinates
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  CameraView cam;
  cam.pose.topLeftCorner<3, 3>() = r;
  cam.pose.topRightCorner<3, 1>() = -r * eye;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = 0.5 * width / std::tan(0.5 * fov_x);
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  return cam;
}

void TrainingView::validate() const {
  camera.validate();
  if (image.width != camera.width || image.height != camera.height || image.channels != 3)
    throw Error(ErrorKind::ingest, "image/camera dimension mismatch on view " + std::to_string(index));
  if (mask.width != camera.width || mask.height != camera.height || mask.channels != 1)
    throw Error(ErrorKind::ingest, "mask/camera dimension mismatch on view " + std::to_string(index));
  for (double m : mask.data)
    if (m != 0.0 && m != 1.0) throw Error(ErrorKind::ingest, "mask not binary on view " + std::to_string(index));
}

double camera_extent(std::span<const CameraView> cameras) {
  if (cameras.empty()) return 1.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : cameras) mean += c.center();
  mean /= static_cast<double>(cameras.size());
  double radius = 0.0;
  for (const auto& c : cameras) radius = std::max(radius, (c.center() - mean).norm());
  return radius > 0.0 ? 1.1 * radius : 1.0;
}

double camera_extent(std::span<const TrainingView> views) {
  std::vector<CameraView> cams;
  cams.reserve(views.size());
  for (const auto& v : views) cams.push_back(v.camera);
  return camera_extent(cams);
}

}  // namespace ocgs
