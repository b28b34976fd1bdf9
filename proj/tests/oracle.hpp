#pragma once

// Brute-force reference blender for tests: every splat is tested at every pixel in
// (center depth, index) order using a world-space ray/plane solve.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ocgs/config.hpp"
#include "ocgs/scene_model.hpp"

namespace oracle {

struct PixelBlend {
  std::vector<std::size_t> splats;  // in blend order
  std::vector<double> weights;
  std::vector<double> before;  // transmittance in front of each entry
  double transmittance = 1.0;
};

struct Result {
  int width = 0, height = 0;
  std::vector<PixelBlend> pixels;
  std::vector<std::uint8_t> participated;  // got a positive weight somewhere
};

inline Result blend(const ocgs::SplatSet& s, const ocgs::CameraView& cam, const ocgs::RenderSettings& rs = {},
                    bool terminate = true) {
  const auto dec = ocgs::decode_params(s);
  const Eigen::Matrix3d R = cam.rotation();
  const Eigen::Vector3d t = cam.translation(), o = cam.center();
  std::vector<double> cz(s.size());
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cz[k] = (R * dec[k].position + t).z();
    if (cz[k] >= rs.near_plane) order.push_back(k);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cz[a] != cz[b] ? cz[a] < cz[b] : a < b;
  });
  const double cutoff = rs.cutoff_sigma * rs.cutoff_sigma;
  const double T_stop = 1.0 - rs.alpha_termination_threshold;
  Result r;
  r.width = cam.width;
  r.height = cam.height;
  r.pixels.resize(static_cast<std::size_t>(cam.width) * cam.height);
  r.participated.assign(s.size(), 0);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      PixelBlend& pb = r.pixels[static_cast<std::size_t>(y) * cam.width + x];
      const Eigen::Vector3d dw = R.transpose() * cam.pixel_ray(x, y);
      for (std::size_t k : order) {
        const auto& d = dec[k];
        Eigen::Matrix3d A;
        A.col(0) = d.scale[0] * d.tangent_u;
        A.col(1) = d.scale[1] * d.tangent_v;
        A.col(2) = -dw;
        double rho3 = std::numeric_limits<double>::infinity(), depth = 0.0;
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
        if (lu.isInvertible()) {
          const Eigen::Vector3d sol = lu.solve(o - d.position);
          rho3 = sol[0] * sol[0] + sol[1] * sol[1];
          depth = sol[2];
        }
        const Eigen::Vector3d pc = R * d.position + t;
        const Eigen::Vector2d mu(cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy);
        const double rho2 = rs.lowpass_inv_square * (Eigen::Vector2d(x + 0.5, y + 0.5) - mu).squaredNorm();
        const double rho = std::min(rho3, rho2);
        if (!(rho <= cutoff)) continue;
        if (!((rho3 <= rho2 ? depth : pc.z()) >= rs.near_plane)) continue;
        const double alpha = std::min(rs.alpha_clip, d.opacity * std::exp(-0.5 * rho));
        if (alpha < rs.min_splat_alpha) continue;
        const double w = alpha * pb.transmittance;
        if (!(w > 0.0)) continue;
        pb.splats.push_back(k);
        pb.weights.push_back(w);
        pb.before.push_back(pb.transmittance);
        r.participated[k] = 1;
        pb.transmittance *= 1.0 - alpha;
        if (terminate && pb.transmittance < T_stop) break;
      }
    }
  return r;
}

/// Participation read off an unterminated blend: a splat takes part iff some pixel
/// reaches it before the transmittance has dropped below the stop threshold.
inline std::vector<std::uint8_t> participation_from_weights(const ocgs::SplatSet& s, const ocgs::CameraView& cam,
                                                            const ocgs::RenderSettings& rs = {}) {
  const Result r = blend(s, cam, rs, false);
  const double T_stop = 1.0 - rs.alpha_termination_threshold;
  std::vector<std::uint8_t> out(s.size(), 0);
  for (const PixelBlend& pb : r.pixels) {
    for (std::size_t i = 0; i < pb.splats.size() && pb.before[i] >= T_stop; ++i) out[pb.splats[i]] = 1;
  }
  return out;
}

}  // namespace oracle
