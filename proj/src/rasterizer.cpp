#include "ocgs/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "ocgs/error.hpp"
#include "ocgs/parallel.hpp"
#include "ocgs/sh.hpp"

namespace ocgs {

namespace {

using Eigen::Vector2d;
using Eigen::Vector3d;

// Camera-space disc: points c + u*a + v*b. bc = b×c, ca = c×a and cn = c·(a×b) are
// constant per view, which makes the per-pixel intersection three dot products.
struct Projected {
  Vector3d c, a, b, n_cam, bc, ca, N;
  double cn = 0.0;
  double sign = 1.0;  // orientation flip applied to the world normal
  Vector3d color = Vector3d::Zero();
  Vector3d view_dir = Vector3d::UnitZ();
  double view_dist = 1.0;
  double opacity = 0.0;
  Vector2d mu = Vector2d::Zero();
  bool valid = false;
};

struct Hit {
  double alpha = 0.0;
  double t = 0.0;
  double u = 0.0, v = 0.0, D = 0.0, G = 0.0;
  bool object_space = true;  // false when the screen-space low-pass won
  bool clipped = false;
};

struct Frame {
  const CameraView* cam = nullptr;
  Eigen::Matrix3d R;
  Vector3d t;
  Vector3d center;
  double cutoff_rho = 9.0;
};

Projected project(const DecodedSplat& s, std::span<const double> sh, int degree, const Frame& f) {
  Projected p;
  p.c = f.R * s.position + f.t;
  p.a = s.scale[0] * (f.R * s.tangent_u);
  p.b = s.scale[1] * (f.R * s.tangent_v);
  p.N = p.a.cross(p.b);
  p.bc = p.b.cross(p.c);
  p.ca = p.c.cross(p.a);
  p.cn = p.c.dot(p.N);
  const Vector3d n = f.R * s.normal;
  p.sign = n.dot(p.c) > 0.0 ? -1.0 : 1.0;
  p.n_cam = p.sign * n;
  p.opacity = s.opacity;
  const Vector3d dir = s.position - f.center;
  p.view_dist = dir.norm();
  p.view_dir = p.view_dist > 0.0 ? Vector3d(dir / p.view_dist) : Vector3d::UnitZ();
  p.color = eval_sh_color(sh, p.view_dir, degree);
  if (p.c.z() > 0.0)
    p.mu = {f.cam->fx * p.c.x() / p.c.z() + f.cam->cx, f.cam->fy * p.c.y() / p.c.z() + f.cam->cy};
  return p;
}

// Pixel-center ray vs disc. Returns false when the splat does not blend at this pixel.
bool intersect(const Projected& p, const Vector3d& d, const Vector2d& pix, const RenderSettings& s,
               double cutoff_rho, Hit& h) {
  const double D = d.dot(p.N);
  double rho3 = std::numeric_limits<double>::infinity();
  double u = 0.0, v = 0.0;
  if (std::abs(D) > 1e-12 * p.N.norm() * d.norm()) {
    u = d.dot(p.bc) / D;
    v = d.dot(p.ca) / D;
    rho3 = u * u + v * v;
  }
  const double rho2 = s.lowpass_inv_square * (pix - p.mu).squaredNorm();
  const bool object_space = rho3 <= rho2;
  const double rho = object_space ? rho3 : rho2;
  if (!(rho <= cutoff_rho)) return false;
  const double t = object_space ? p.cn / D : p.c.z();
  if (!(t >= s.near_plane)) return false;
  const double G = std::exp(-0.5 * rho);
  double alpha = p.opacity * G;
  bool clipped = false;
  if (alpha > s.alpha_clip) alpha = s.alpha_clip, clipped = true;
  if (alpha < s.min_splat_alpha) return false;
  h.alpha = alpha;
  h.t = t;
  h.u = u;
  h.v = v;
  h.D = D;
  h.G = G;
  h.object_space = object_space;
  h.clipped = clipped;
  return true;
}

Frame make_frame(const CameraView& cam, const RenderSettings& s) {
  Frame f;
  f.cam = &cam;
  f.R = cam.rotation();
  f.t = cam.translation();
  f.center = cam.center();
  f.cutoff_rho = s.cutoff_sigma * s.cutoff_sigma;
  return f;
}

struct Prepared {
  std::vector<DecodedSplat> decoded;
  std::vector<Projected> proj;
  TileBinning bins;
  Frame frame;
  int degree = 0;
};

// Screen bounding box [x0,x1]×[y0,y1] (continuous pixel coordinates) of the cutoff
// ellipse, from the dual conic of the disc boundary. Returns false if the boundary
// reaches behind the camera plane, in which case the whole image is a candidate.
bool ellipse_bbox(const Projected& p, const CameraView& cam, double cutoff_rho, Eigen::Vector4d& box) {
  Eigen::Matrix3d K;
  K << cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1;
  Eigen::Matrix3d T;
  T.col(0) = K * p.a;
  T.col(1) = K * p.b;
  T.col(2) = K * p.c;
  const Eigen::Matrix3d Q = Eigen::Vector3d(cutoff_rho, cutoff_rho, -1.0).asDiagonal();
  const Eigen::Matrix3d C = T * Q * T.transpose();
  if (!(C(2, 2) < 0.0)) return false;
  const double cx = C(0, 2) / C(2, 2);
  const double cy = C(1, 2) / C(2, 2);
  const double hx = std::sqrt(std::max(0.0, cx * cx - C(0, 0) / C(2, 2)));
  const double hy = std::sqrt(std::max(0.0, cy * cy - C(1, 1) / C(2, 2)));
  box = {cx - hx, cy - hy, cx + hx, cy + hy};
  return box.allFinite();
}

Prepared prepare(const SplatSet& splats, const CameraView& cam, const RenderOptions& opt) {
  splats.check_consistent();
  cam.validate();
  Prepared P;
  P.degree = opt.sh_degree < 0 ? splats.sh_degree : std::min(opt.sh_degree, splats.sh_degree);
  P.frame = make_frame(cam, opt.settings);
  const std::size_t m = splats.size();
  P.decoded.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    try {
      P.decoded[k] = decode_splat(splats, k);
    } catch (const Error& e) {
      throw RenderError("cannot render non-finite splat", k);
    }
  }
  P.proj.resize(m);
  for (std::size_t k = 0; k < m; ++k) P.proj[k] = project(P.decoded[k], splats.sh_of(k), P.degree, P.frame);

  const RenderSettings& s = opt.settings;
  TileBinning& B = P.bins;
  B.tile_size = s.tile_size;
  B.tiles_x = (cam.width + s.tile_size - 1) / s.tile_size;
  B.tiles_y = (cam.height + s.tile_size - 1) / s.tile_size;
  B.in_frustum.assign(m, 0);
  B.pixel_rect.assign(m, Eigen::Vector4i::Zero());
  B.radius_px.assign(m, 0.0);

  struct Entry {
    std::uint32_t tile;
    double depth;
    std::uint32_t index;
  };
  std::vector<Entry> entries;
  const double lowpass_r = std::sqrt(P.frame.cutoff_rho / s.lowpass_inv_square);
  for (std::size_t k = 0; k < m; ++k) {
    Projected& p = P.proj[k];
    if (!(p.c.z() >= s.near_plane)) continue;
    Eigen::Vector4d box;
    double x0, y0, x1, y1;
    if (ellipse_bbox(p, cam, P.frame.cutoff_rho, box)) {
      x0 = std::min(box[0], p.mu.x() - lowpass_r);
      y0 = std::min(box[1], p.mu.y() - lowpass_r);
      x1 = std::max(box[2], p.mu.x() + lowpass_r);
      y1 = std::max(box[3], p.mu.y() + lowpass_r);
      B.radius_px[k] = 0.5 * std::max(box[2] - box[0], box[3] - box[1]);
    } else {
      x0 = -1.0, y0 = -1.0, x1 = cam.width + 1.0, y1 = cam.height + 1.0;
      B.radius_px[k] = std::max(cam.width, cam.height);
    }
    // Pixel i is a candidate iff its center i + 0.5 lies in the box (padded for rounding).
    constexpr double pad = 1e-3;
    const double fx0 = std::ceil(x0 - 0.5 - pad), fx1 = std::floor(x1 - 0.5 + pad);
    const double fy0 = std::ceil(y0 - 0.5 - pad), fy1 = std::floor(y1 - 0.5 + pad);
    const int px0 = static_cast<int>(std::clamp(fx0, 0.0, static_cast<double>(cam.width)));
    const int px1 = static_cast<int>(std::clamp(fx1 + 1.0, 0.0, static_cast<double>(cam.width)));
    const int py0 = static_cast<int>(std::clamp(fy0, 0.0, static_cast<double>(cam.height)));
    const int py1 = static_cast<int>(std::clamp(fy1 + 1.0, 0.0, static_cast<double>(cam.height)));
    if (px0 >= px1 || py0 >= py1) continue;
    p.valid = true;
    B.in_frustum[k] = 1;
    B.pixel_rect[k] = {px0, py0, px1, py1};
    for (int ty = py0 / s.tile_size; ty <= (py1 - 1) / s.tile_size; ++ty)
      for (int tx = px0 / s.tile_size; tx <= (px1 - 1) / s.tile_size; ++tx)
        entries.push_back({static_cast<std::uint32_t>(ty * B.tiles_x + tx), p.c.z(), static_cast<std::uint32_t>(k)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    if (l.tile != r.tile) return l.tile < r.tile;
    if (l.depth != r.depth) return l.depth < r.depth;
    return l.index < r.index;
  });
  const std::size_t n_tiles = static_cast<std::size_t>(B.tiles_x) * B.tiles_y;
  B.tile_offsets.assign(n_tiles + 1, 0);
  B.tile_splats.resize(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    B.tile_splats[e] = entries[e].index;
    ++B.tile_offsets[entries[e].tile + 1];
  }
  for (std::size_t t = 0; t < n_tiles; ++t) B.tile_offsets[t + 1] += B.tile_offsets[t];
  return P;
}

struct Contribution {
  std::uint32_t slot;  // position in tile_splats
  std::uint32_t k;
  Hit hit;
  double T;  // transmittance before this splat
  double w;
};

// Front-to-back blend of one pixel. Fills `list` with the splats that received weight.
double blend_pixel(const Prepared& P, const RenderSettings& s, std::uint32_t begin, std::uint32_t end, int x, int y,
                   std::vector<Contribution>& list) {
  list.clear();
  const Vector3d d = P.frame.cam->pixel_ray(x, y);
  const Vector2d pix(x + 0.5, y + 0.5);
  const double T_stop = 1.0 - s.alpha_termination_threshold;
  double T = 1.0;
  for (std::uint32_t e = begin; e < end; ++e) {
    const std::uint32_t k = P.bins.tile_splats[e];
    const Projected& p = P.proj[k];
    const Eigen::Vector4i& r = P.bins.pixel_rect[k];
    if (x < r[0] || x >= r[2] || y < r[1] || y >= r[3]) continue;
    Hit h;
    if (!intersect(p, d, pix, s, P.frame.cutoff_rho, h)) continue;
    const double w = h.alpha * T;
    if (!(w > 0.0)) continue;
    list.push_back({e, k, h, T, w});
    T *= 1.0 - h.alpha;
    if (T < T_stop) break;
  }
  return T;
}

struct DepthStats {
  double value = 0.0;
  std::vector<double> dw, dz;  // partials w.r.t. weights and mapped depths
};

// sum_{i<j} w_i w_j |z_i - z_j| via a sort by z and prefix sums.
void distortion_of(const std::vector<Contribution>& list, const RenderSettings& s, bool with_grad, DepthStats& out) {
  const std::size_t K = list.size();
  out.value = 0.0;
  if (with_grad) out.dw.assign(K, 0.0), out.dz.assign(K, 0.0);
  if (K < 2) return;
  std::vector<double> z(K);
  std::vector<std::size_t> order(K);
  for (std::size_t i = 0; i < K; ++i) z[i] = distortion_depth(list[i].hit.t, s), order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return z[l] < z[r] || (z[l] == z[r] && l < r); });
  double W_total = 0.0, ZW_total = 0.0;
  for (std::size_t i = 0; i < K; ++i) W_total += list[i].w, ZW_total += list[i].w * z[i];
  double W_below = 0.0, ZW_below = 0.0;
  for (std::size_t o : order) {
    const double w = list[o].w, zo = z[o];
    out.value += w * (zo * W_below - ZW_below);
    if (with_grad) {
      const double W_above = W_total - W_below - w;
      const double ZW_above = ZW_total - ZW_below - w * zo;
      out.dw[o] = zo * (W_below - W_above) - (ZW_below - ZW_above);
      out.dz[o] = w * (W_below - W_above);
    }
    W_below += w;
    ZW_below += w * zo;
  }
}

RenderOutput make_output(const CameraView& cam, std::size_t m, bool distortion) {
  RenderOutput out;
  out.color = Image(cam.width, cam.height, 3);
  out.alpha = Image(cam.width, cam.height, 1);
  out.depth = Image(cam.width, cam.height, 1);
  out.expected_depth = Image(cam.width, cam.height, 1);
  out.normal = Image(cam.width, cam.height, 3);
  if (distortion) out.distortion = Image(cam.width, cam.height, 1);
  out.contributed.assign(m, 0);
  return out;
}

template <typename Fn>
void for_each_tile_pixel(const TileBinning& B, const CameraView& cam, std::size_t tile, Fn&& fn) {
  const int tx = static_cast<int>(tile % B.tiles_x), ty = static_cast<int>(tile / B.tiles_x);
  const int x0 = tx * B.tile_size, y0 = ty * B.tile_size;
  const int x1 = std::min(x0 + B.tile_size, cam.width), y1 = std::min(y0 + B.tile_size, cam.height);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) fn(x, y);
}

double pixel_or_zero(const Image& img, int x, int y, int c = 0) { return img.empty() ? 0.0 : img.at(x, y, c); }

}  // namespace

double distortion_depth(double t, const RenderSettings& s) {
  const double n = s.distortion_near, f = s.distortion_far;
  return f / (f - n) * (1.0 - n / t);
}

double distortion_depth_derivative(double t, const RenderSettings& s) {
  const double n = s.distortion_near, f = s.distortion_far;
  return f / (f - n) * n / (t * t);
}

void SplatGradients::resize(std::size_t m, int coeffs) {
  position.assign(m, Vector3d::Zero());
  rotation.assign(m, Eigen::Vector4d::Zero());
  log_scale.assign(m, Vector2d::Zero());
  opacity_logit.assign(m, 0.0);
  sh.assign(m * coeffs * 3, 0.0);
  screen.assign(m, Vector2d::Zero());
}

TileBinning bin_splats(const SplatSet& splats, const CameraView& camera, const RenderSettings& settings) {
  RenderOptions opt;
  opt.settings = settings;
  return prepare(splats, camera, opt).bins;
}

RenderOutput render_forward(const SplatSet& splats, const CameraView& cam, const RenderOptions& opt) {
  const Prepared P = prepare(splats, cam, opt);
  const RenderSettings& s = opt.settings;
  RenderOutput out = make_output(cam, splats.size(), opt.distortion);
  out.in_frustum = P.bins.in_frustum;
  out.radius_px = P.bins.radius_px;
  const std::size_t n_tiles = P.bins.tile_offsets.size() - 1;
  parallel_for(n_tiles, [&](std::size_t tile) {
    std::vector<Contribution> list;
    DepthStats dist;
    const std::uint32_t begin = P.bins.tile_offsets[tile], end = P.bins.tile_offsets[tile + 1];
    for_each_tile_pixel(P.bins, cam, tile, [&](int x, int y) {
      const double T = blend_pixel(P, s, begin, end, x, y, list);
      Vector3d color = Vector3d::Zero(), normal = Vector3d::Zero();
      double A = 0.0, wt = 0.0, median = 0.0;
      bool median_set = false;
      for (const Contribution& c : list) {
        const Projected& p = P.proj[c.k];
        color += c.w * p.color;
        normal += c.w * p.n_cam;
        A += c.w;
        wt += c.w * c.hit.t;
        if (!median_set && A >= 0.5) median = c.hit.t, median_set = true;
        std::atomic_ref<std::uint8_t>(out.contributed[c.k]).store(1, std::memory_order_relaxed);
      }
      color += T * opt.background;
      for (int ch = 0; ch < 3; ++ch) {
        out.color.at(x, y, ch) = color[ch];
        out.normal.at(x, y, ch) = normal[ch];
      }
      out.alpha.at(x, y) = A;
      out.depth.at(x, y) = median;
      out.expected_depth.at(x, y) = A > 0.0 ? wt / A : 0.0;
      if (opt.distortion) {
        distortion_of(list, s, false, dist);
        out.distortion.at(x, y) = dist.value;
      }
    });
  });
  return out;
}

SplatGradients render_backward(const SplatSet& splats, const CameraView& cam, const RenderOptions& opt,
                               const RenderOutput& output, const PixelAdjoints& adj) {
  const int W = cam.width, H = cam.height;
  auto check = [&](const Image& img, int ch, const char* name) {
    if (!img.empty() && (img.width != W || img.height != H || img.channels != ch))
      throw Error(ErrorKind::contract, std::string("render_backward: adjoint '") + name + "' has wrong shape");
  };
  check(adj.color, 3, "color");
  check(adj.alpha, 1, "alpha");
  check(adj.depth, 1, "depth");
  check(adj.expected_depth, 1, "expected_depth");
  check(adj.normal, 3, "normal");
  check(adj.distortion, 1, "distortion");
  if (output.alpha.width != W || output.alpha.height != H || output.contributed.size() != splats.size())
    throw Error(ErrorKind::contract, "render_backward: forward output does not match camera/splats");

  const Prepared P = prepare(splats, cam, opt);
  const RenderSettings& s = opt.settings;
  const std::size_t m = splats.size();
  SplatGradients G;
  G.resize(m, splats.coeffs());

  // Per tile-list slot partials: g_c(3) g_a(3) g_b(3) g_n(3) g_color(3) g_opacity(1).
  constexpr int kSlot = 16;
  std::vector<double> slots(P.bins.tile_splats.size() * kSlot, 0.0);
  const std::size_t n_tiles = P.bins.tile_offsets.size() - 1;

  parallel_for(n_tiles, [&](std::size_t tile) {
    std::vector<Contribution> list;
    std::vector<double> g_w, g_t;
    DepthStats dist;
    const std::uint32_t begin = P.bins.tile_offsets[tile], end = P.bins.tile_offsets[tile + 1];
    for_each_tile_pixel(P.bins, cam, tile, [&](int x, int y) {
      const Vector3d gC(pixel_or_zero(adj.color, x, y, 0), pixel_or_zero(adj.color, x, y, 1),
                        pixel_or_zero(adj.color, x, y, 2));
      const Vector3d gN(pixel_or_zero(adj.normal, x, y, 0), pixel_or_zero(adj.normal, x, y, 1),
                        pixel_or_zero(adj.normal, x, y, 2));
      const double gA = pixel_or_zero(adj.alpha, x, y);
      const double gMed = pixel_or_zero(adj.depth, x, y);
      const double gE = pixel_or_zero(adj.expected_depth, x, y);
      const double gD = pixel_or_zero(adj.distortion, x, y);
      if (gC.isZero(0) && gN.isZero(0) && gA == 0.0 && gMed == 0.0 && gE == 0.0 && gD == 0.0) return;

      const double T_final = blend_pixel(P, s, begin, end, x, y, list);
      const std::size_t K = list.size();
      if (K == 0) return;
      double A = 0.0, wt = 0.0;
      std::size_t median = K;
      for (std::size_t i = 0; i < K; ++i) {
        A += list[i].w;
        wt += list[i].w * list[i].hit.t;
        if (median == K && A >= 0.5) median = i;
      }
      const double E = wt / A;
      if (gD != 0.0) distortion_of(list, s, true, dist);

      g_w.assign(K, 0.0);
      g_t.assign(K, 0.0);
      for (std::size_t i = 0; i < K; ++i) {
        const Projected& p = P.proj[list[i].k];
        const double t = list[i].hit.t, w = list[i].w;
        g_w[i] = gC.dot(p.color) + gA + gN.dot(p.n_cam) + gE * (t - E) / A;
        g_t[i] = gE * w / A;
        if (i == median) g_t[i] += gMed;
        if (gD != 0.0) {
          g_w[i] += gD * dist.dw[i];
          g_t[i] += gD * dist.dz[i] * distortion_depth_derivative(t, s);
        }
      }

      const Vector3d d = cam.pixel_ray(x, y);
      const Vector2d pix(x + 0.5, y + 0.5);
      double suffix = gC.dot(opt.background) * T_final;  // sum_{j>i} g_w[j] w_j + (gC·bg) T_final
      for (std::size_t ii = K; ii-- > 0;) {
        const Contribution& c = list[ii];
        const Projected& p = P.proj[c.k];
        const Hit& h = c.hit;
        double* g = &slots[static_cast<std::size_t>(c.slot) * kSlot];
        const double g_alpha = g_w[ii] * c.T - suffix / (1.0 - h.alpha);
        suffix += g_w[ii] * c.w;

        for (int ch = 0; ch < 3; ++ch) {
          g[9 + ch] += c.w * gN[ch];
          g[12 + ch] += c.w * gC[ch];
        }
        double g_rho = 0.0;
        if (!h.clipped) {
          g[15] += g_alpha * h.G;
          g_rho = -0.5 * g_alpha * h.alpha;
        }
        Vector3d g_c = Vector3d::Zero(), g_a = Vector3d::Zero(), g_b = Vector3d::Zero();
        if (h.object_space) {
          const double gu = g_rho * 2.0 * h.u, gv = g_rho * 2.0 * h.v, gt = g_t[ii];
          const Vector3d g_pu = (gu / h.D) * d;
          const Vector3d g_pv = (gv / h.D) * d;
          const double g_cn = gt / h.D;
          const double g_D = -(gu * h.u + gv * h.v + gt * h.t) / h.D;
          g_b += p.c.cross(g_pu);
          g_c += g_pu.cross(p.b);
          g_c += p.a.cross(g_pv);
          g_a += g_pv.cross(p.c);
          g_c += g_cn * p.N;
          g_a += g_cn * p.b.cross(p.c);
          g_b += g_cn * p.c.cross(p.a);
          g_a += g_D * p.b.cross(d);
          g_b += g_D * d.cross(p.a);
        } else {
          const Vector2d g_mu = g_rho * s.lowpass_inv_square * 2.0 * (p.mu - pix);
          const double z = p.c.z();
          g_c.x() += g_mu.x() * cam.fx / z;
          g_c.y() += g_mu.y() * cam.fy / z;
          g_c.z() += -(g_mu.x() * cam.fx * p.c.x() + g_mu.y() * cam.fy * p.c.y()) / (z * z) + g_t[ii];
        }
        for (int ch = 0; ch < 3; ++ch) {
          g[ch] += g_c[ch];
          g[3 + ch] += g_a[ch];
          g[6 + ch] += g_b[ch];
        }
      }
    });
  });

  // Deterministic reduction in tile order, then the per-splat chain rule.
  std::vector<double> acc(m * kSlot, 0.0);
  for (std::size_t e = 0; e < P.bins.tile_splats.size(); ++e) {
    const std::size_t k = P.bins.tile_splats[e];
    for (int j = 0; j < kSlot; ++j) acc[k * kSlot + j] += slots[e * kSlot + j];
  }
  const Eigen::Matrix3d& R = P.frame.R;
  for (std::size_t k = 0; k < m; ++k) {
    const double* g = &acc[k * kSlot];
    bool any = false;
    for (int j = 0; j < kSlot; ++j) any = any || g[j] != 0.0;
    if (!any) continue;
    const DecodedSplat& ds = P.decoded[k];
    const Projected& p = P.proj[k];
    const Vector3d g_c(g[0], g[1], g[2]), g_a(g[3], g[4], g[5]), g_b(g[6], g[7], g[8]), g_n(g[9], g[10], g[11]);
    const Vector3d g_col(g[12], g[13], g[14]);

    Vector3d g_pos = R.transpose() * g_c;
    const Vector3d g_tu = ds.scale[0] * (R.transpose() * g_a);
    const Vector3d g_tv = ds.scale[1] * (R.transpose() * g_b);
    const Vector3d g_nw = p.sign * (R.transpose() * g_n);
    G.log_scale[k] = {g_a.dot(p.a), g_b.dot(p.b)};

    const Eigen::Vector4d& q_raw = splats.rotation[k];
    const double qn = q_raw.norm();
    const Eigen::Vector4d q = q_raw / qn;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    // d(column)/d(w,x,y,z) for the columns t_u, t_v, n of the rotation matrix.
    Eigen::Matrix<double, 3, 4> du, dv, dn;
    du << 0, 0, -4 * y, -4 * z, 2 * z, 2 * y, 2 * x, 2 * w, -2 * y, 2 * z, -2 * w, 2 * x;
    dv << -2 * z, 2 * y, 2 * x, -2 * w, 0, -4 * x, 0, -4 * z, 2 * x, 2 * w, 2 * z, 2 * y;
    dn << 2 * y, 2 * z, 2 * w, 2 * x, -2 * x, -2 * w, 2 * z, 2 * y, 0, -4 * x, -4 * y, 0;
    const Eigen::Vector4d g_qhat = du.transpose() * g_tu + dv.transpose() * g_tv + dn.transpose() * g_nw;
    G.rotation[k] = (g_qhat - q * q.dot(g_qhat)) / qn;

    const double op = ds.opacity;
    G.opacity_logit[k] = g[15] * op * (1.0 - op);

    Vector3d g_dir = Vector3d::Zero();
    eval_sh_color_backward(splats.sh_of(k), p.view_dir, P.degree, g_col,
                           std::span<double>(G.sh.data() + k * splats.coeffs() * 3, splats.coeffs() * 3),
                           P.degree > 0 ? &g_dir : nullptr);
    if (P.degree > 0) g_pos += (g_dir - p.view_dir * p.view_dir.dot(g_dir)) / p.view_dist;
    G.position[k] = g_pos;
    if (p.c.z() > 0.0)
      G.screen[k] = {g_c.x() * p.c.z() / cam.fx * 0.5 * W, g_c.y() * p.c.z() / cam.fy * 0.5 * H};
  }
  return G;
}

}  // namespace ocgs
