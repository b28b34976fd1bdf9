#include "ocgs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocgs/error.hpp"
#include "ocgs/ssim.hpp"

namespace ocgs {

namespace {

void require_same_size(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorKind::contract, std::string(what) + ": image sizes differ");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Image masked(const Image& img, const Image& mask) {
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) *= mask.at(x, y);
  return out;
}

}  // namespace

LossWeights LossWeights::at(const TrainConfig& config, int iteration) {
  LossWeights w;
  w.lambda_dssim = config.lambda_dssim;
  w.alpha = iteration >= config.distortion_from_iter ? config.alpha_coeff : 0.0;
  w.beta = iteration >= config.normal_from_iter ? config.beta_coeff : 0.0;
  w.gamma = config.gamma_coeff;
  return w;
}

double background_loss(const Image& alpha, const Image& mask, Image* grad_alpha) {
  require_same_size(alpha, mask, "background_loss");
  if (alpha.channels != 1 || mask.channels != 1) throw Error(ErrorKind::contract, "background_loss: expected 1 channel");
  const double inv = 1.0 / static_cast<double>(alpha.pixel_count());
  double sum = 0.0;
  if (grad_alpha) *grad_alpha = Image(alpha.width, alpha.height, 1);
  for (std::size_t i = 0; i < alpha.data.size(); ++i) {
    sum += alpha.data[i] * (1.0 - mask.data[i]);
    if (grad_alpha) grad_alpha->data[i] = (1.0 - mask.data[i]) * inv;
  }
  return sum * inv;
}

double photometric_loss(const Image& image, const Image& render, double lambda, Image* grad_render) {
  if (!image.same_shape(render)) throw Error(ErrorKind::contract, "photometric_loss: shapes differ");
  const double n = static_cast<double>(image.data.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < image.data.size(); ++i) l1 += std::abs(render.data[i] - image.data[i]);
  l1 /= n;
  const double s = ssim(image, render);
  if (grad_render) {
    Image up(image.width, image.height, image.channels, -lambda / n);
    *grad_render = ssim_backward(image, render, up);
    for (std::size_t i = 0; i < image.data.size(); ++i)
      grad_render->data[i] += (1.0 - lambda) * sign(render.data[i] - image.data[i]) / n;
  }
  return (1.0 - lambda) * l1 + lambda * (1.0 - s);
}

double photometric_masked(const Image& image, const Image& render, const Image& mask, double lambda,
                          Image* grad_render) {
  require_same_size(image, mask, "photometric_masked");
  if (!image.same_shape(render) || mask.channels != 1)
    throw Error(ErrorKind::contract, "photometric_masked: shapes differ");
  const double value = photometric_loss(masked(image, mask), masked(render, mask), lambda, grad_render);
  if (grad_render) *grad_render = masked(*grad_render, mask);
  return value;
}

double depth_distortion(std::span<const double> w, std::span<const double> z, std::span<double> gw,
                        std::span<double> gz) {
  if (w.size() != z.size()) throw Error(ErrorKind::contract, "depth_distortion: length mismatch");
  const bool grad = !gw.empty() && !gz.empty();
  double value = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (grad) gw[i] = 0.0, gz[i] = 0.0;
  }
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      const double dz = z[i] - z[j];
      value += w[i] * w[j] * std::abs(dz);
      if (grad) {
        gw[i] += w[j] * std::abs(dz);
        gw[j] += w[i] * std::abs(dz);
        gz[i] += w[i] * w[j] * sign(dz);
        gz[j] -= w[i] * w[j] * sign(dz);
      }
    }
  return value;
}

double normal_consistency(std::span<const double> w, std::span<const Eigen::Vector3d> n, const Eigen::Vector3d& N) {
  if (w.size() != n.size()) throw Error(ErrorKind::contract, "normal_consistency: length mismatch");
  double value = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) value += w[i] * (1.0 - n[i].dot(N));
  return value;
}

namespace {

struct NormalPixel {
  bool valid = false;
  Eigen::Vector3d dpx, dpy, raw, N;
  double len = 0.0;
};

Eigen::Vector3d surface_point(const Image& E, const CameraView& cam, int x, int y) {
  return E.at(x, y) * cam.pixel_ray(x, y);
}

NormalPixel normal_at(const Image& E, const Image& A, const CameraView& cam, int x, int y) {
  NormalPixel p;
  if (x < 1 || y < 1 || x + 1 >= E.width || y + 1 >= E.height) return p;
  if (!(A.at(x, y) > 0.0 && A.at(x - 1, y) > 0.0 && A.at(x + 1, y) > 0.0 && A.at(x, y - 1) > 0.0 &&
        A.at(x, y + 1) > 0.0))
    return p;
  p.dpx = surface_point(E, cam, x + 1, y) - surface_point(E, cam, x - 1, y);
  p.dpy = surface_point(E, cam, x, y + 1) - surface_point(E, cam, x, y - 1);
  p.raw = p.dpy.cross(p.dpx);
  p.len = p.raw.norm();
  if (!(p.len > 1e-300)) return p;
  p.N = p.raw / p.len;
  p.valid = true;
  return p;
}

}  // namespace

DepthNormals depth_normals(const Image& E, const Image& A, const CameraView& cam) {
  DepthNormals out{Image(E.width, E.height, 3), Image(E.width, E.height, 1)};
  for (int y = 0; y < E.height; ++y)
    for (int x = 0; x < E.width; ++x) {
      const NormalPixel p = normal_at(E, A, cam, x, y);
      if (!p.valid) continue;
      out.valid.at(x, y) = 1.0;
      for (int c = 0; c < 3; ++c) out.normal.at(x, y, c) = p.N[c];
    }
  return out;
}

double normal_consistency_loss(const RenderOutput& out, const CameraView& cam, Image* g_alpha, Image* g_normal,
                               Image* g_depth) {
  const Image& E = out.expected_depth;
  const Image& A = out.alpha;
  const int W = E.width, H = E.height;
  const double inv = 1.0 / static_cast<double>(E.pixel_count());
  if (g_alpha) *g_alpha = Image(W, H, 1);
  if (g_normal) *g_normal = Image(W, H, 3);
  if (g_depth) *g_depth = Image(W, H, 1);
  double sum = 0.0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const NormalPixel p = normal_at(E, A, cam, x, y);
      if (!p.valid) continue;
      const Eigen::Vector3d nr(out.normal.at(x, y, 0), out.normal.at(x, y, 1), out.normal.at(x, y, 2));
      sum += A.at(x, y) - nr.dot(p.N);
      if (g_alpha) g_alpha->at(x, y) += inv;
      if (g_normal)
        for (int c = 0; c < 3; ++c) g_normal->at(x, y, c) -= inv * p.N[c];
      if (g_depth) {
        const Eigen::Vector3d gN = -inv * nr;
        const Eigen::Vector3d g_raw = (gN - p.N * p.N.dot(gN)) / p.len;
        const Eigen::Vector3d g_dpy = p.dpx.cross(g_raw);
        const Eigen::Vector3d g_dpx = g_raw.cross(p.dpy);
        g_depth->at(x + 1, y) += g_dpx.dot(cam.pixel_ray(x + 1, y));
        g_depth->at(x - 1, y) -= g_dpx.dot(cam.pixel_ray(x - 1, y));
        g_depth->at(x, y + 1) += g_dpy.dot(cam.pixel_ray(x, y + 1));
        g_depth->at(x, y - 1) -= g_dpy.dot(cam.pixel_ray(x, y - 1));
      }
    }
  return sum * inv;
}

TotalLoss total_loss(const TrainingView& view, const RenderOutput& out, const LossWeights& w) {
  require_same_size(view.image, out.color, "total_loss");
  TotalLoss r;
  LossBreakdown& b = r.breakdown;
  PixelAdjoints& g = r.adjoints;
  const int W = out.color.width, H = out.color.height;

  b.photometric = photometric_masked(view.image, out.color, view.mask, w.lambda_dssim, &g.color);

  Image g_bg;
  b.background = background_loss(out.alpha, view.mask, &g_bg);
  g.alpha = Image(W, H, 1);
  for (std::size_t i = 0; i < g_bg.data.size(); ++i) g.alpha.data[i] = w.gamma * g_bg.data[i];

  if (!out.distortion.empty()) {
    const double inv = 1.0 / static_cast<double>(out.distortion.pixel_count());
    b.depth_distortion = std::accumulate(out.distortion.data.begin(), out.distortion.data.end(), 0.0) * inv;
    if (w.alpha != 0.0) g.distortion = Image(W, H, 1, w.alpha * inv);
  }

  Image gA_n, gN_n, gE_n;
  const bool need = w.beta != 0.0;
  b.normal_consistency = normal_consistency_loss(out, view.camera, need ? &gA_n : nullptr, need ? &gN_n : nullptr,
                                                 need ? &gE_n : nullptr);
  if (need) {
    for (std::size_t i = 0; i < gA_n.data.size(); ++i) g.alpha.data[i] += w.beta * gA_n.data[i];
    g.normal = gN_n;
    for (double& v : g.normal.data) v *= w.beta;
    g.expected_depth = gE_n;
    for (double& v : g.expected_depth.data) v *= w.beta;
  }

  b.total = b.photometric + w.alpha * b.depth_distortion + w.beta * b.normal_consistency + w.gamma * b.background;
  if (!std::isfinite(b.total)) throw Error(ErrorKind::numerical, "non-finite loss");
  return r;
}

}  // namespace ocgs
