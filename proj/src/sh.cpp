#include "ocgs/sh.hpp"

#include <array>

namespace ocgs {

namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr std::array<double, 5> kC2 = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                       -1.0925484305920792, 0.5462742152960396};
constexpr std::array<double, 7> kC3 = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                       0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                       -0.5900435899266435};

// Value plus gradient w.r.t. (x, y, z); enough forward-mode AD for the polynomial bands.
struct Dual {
  double v = 0.0;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
};
Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.g * b.v + b.g * a.v}; }
Dual operator*(double s, const Dual& a) { return {s * a.v, s * a.g}; }
Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.g - b.g}; }

// Bands 1..3; index 0 (the constant) is handled by callers.
template <typename T, typename Out>
void bands(int degree, const T& x, const T& y, const T& z, Out&& out) {
  if (degree < 1) return;
  out(1, -kC1 * y);
  out(2, kC1 * z);
  out(3, -kC1 * x);
  if (degree < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z, xy = x * y, yz = y * z, xz = x * z;
  out(4, kC2[0] * xy);
  out(5, kC2[1] * yz);
  out(6, kC2[2] * (2.0 * zz - xx - yy));
  out(7, kC2[3] * xz);
  out(8, kC2[4] * (xx - yy));
  if (degree < 3) return;
  out(9, kC3[0] * y * (3.0 * xx - yy));
  out(10, kC3[1] * xy * z);
  out(11, kC3[2] * y * (4.0 * zz - xx - yy));
  out(12, kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy));
  out(13, kC3[4] * x * (4.0 * zz - xx - yy));
  out(14, kC3[5] * z * (xx - yy));
  out(15, kC3[6] * x * (xx - 3.0 * yy));
}

Eigen::Vector3d raw_color(std::span<const double> c, const Eigen::Vector3d& dir, int degree) {
  Eigen::Vector3d rgb(c[0], c[1], c[2]);
  rgb *= kShC0;
  bands(degree, dir.x(), dir.y(), dir.z(), [&](int k, double b) {
    for (int ch = 0; ch < 3; ++ch) rgb[ch] += b * c[k * 3 + ch];
  });
  return rgb.array() + 0.5;
}

}  // namespace

void sh_basis(int degree, const Eigen::Vector3d& dir, std::span<double> out) {
  out[0] = kShC0;
  bands(degree, dir.x(), dir.y(), dir.z(), [&](int k, double b) { out[k] = b; });
}

Eigen::Vector3d eval_sh_color(std::span<const double> coeffs, const Eigen::Vector3d& dir, int degree) {
  return raw_color(coeffs, dir, degree).cwiseMax(0.0);
}

void eval_sh_color_backward(std::span<const double> coeffs, const Eigen::Vector3d& dir, int degree,
                            const Eigen::Vector3d& grad_rgb, std::span<double> grad_coeffs,
                            Eigen::Vector3d* grad_dir) {
  const Eigen::Vector3d raw = raw_color(coeffs, dir, degree);
  Eigen::Vector3d g = grad_rgb;
  for (int ch = 0; ch < 3; ++ch)
    if (raw[ch] < 0.0) g[ch] = 0.0;
  for (int ch = 0; ch < 3; ++ch) grad_coeffs[ch] += kShC0 * g[ch];
  if (degree < 1) return;
  const Dual x{dir.x(), Eigen::Vector3d::UnitX()};
  const Dual y{dir.y(), Eigen::Vector3d::UnitY()};
  const Dual z{dir.z(), Eigen::Vector3d::UnitZ()};
  bands(degree, x, y, z, [&](int k, const Dual& b) {
    double dot = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      grad_coeffs[k * 3 + ch] += b.v * g[ch];
      dot += coeffs[k * 3 + ch] * g[ch];
    }
    if (grad_dir) *grad_dir += dot * b.g;
  });
}

}  // namespace ocgs
