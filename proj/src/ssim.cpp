#include "ocgs/ssim.hpp"

#include <array>
#include <cmath>

#include "ocgs/error.hpp"

namespace ocgs {

namespace {

constexpr int kRadius = 5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, 2 * kRadius + 1> window() {
  std::array<double, 2 * kRadius + 1> w{};
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    w[i + kRadius] = std::exp(-(i * i) / (2.0 * 1.5 * 1.5));
    sum += w[i + kRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

Image product(const Image& a, const Image& b) {
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

void check_shapes(const Image& x, const Image& y) {
  if (!x.same_shape(y) || x.empty()) throw Error(ErrorKind::contract, "ssim: image shapes differ");
}

struct Moments {
  Image mx, my, exx, eyy, exy;
};

Moments moments(const Image& x, const Image& y) {
  return {gaussian_filter(x), gaussian_filter(y), gaussian_filter(product(x, x)), gaussian_filter(product(y, y)),
          gaussian_filter(product(x, y))};
}

}  // namespace

Image gaussian_filter(const Image& img) {
  static const auto w = window();
  Image tmp(img.width, img.height, img.channels);
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (int k = -kRadius; k <= kRadius; ++k) {
          const int xx = x + k;
          if (xx >= 0 && xx < img.width) s += w[k + kRadius] * img.at(xx, y, c);
        }
        tmp.at(x, y, c) = s;
      }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (int k = -kRadius; k <= kRadius; ++k) {
          const int yy = y + k;
          if (yy >= 0 && yy < img.height) s += w[k + kRadius] * tmp.at(x, yy, c);
        }
        out.at(x, y, c) = s;
      }
  return out;
}

Image ssim_map(const Image& x, const Image& y) {
  check_shapes(x, y);
  const Moments m = moments(x, y);
  Image out(x.width, x.height, x.channels);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double mx = m.mx.data[i], my = m.my.data[i];
    const double sxx = m.exx.data[i] - mx * mx, syy = m.eyy.data[i] - my * my, sxy = m.exy.data[i] - mx * my;
    out.data[i] = (2 * mx * my + kC1) * (2 * sxy + kC2) / ((mx * mx + my * my + kC1) * (sxx + syy + kC2));
  }
  return out;
}

double ssim(const Image& x, const Image& y) {
  const Image map = ssim_map(x, y);
  double s = 0.0;
  for (double v : map.data) s += v;
  return s / static_cast<double>(map.data.size());
}

Image ssim_backward(const Image& x, const Image& y, const Image& upstream) {
  check_shapes(x, y);
  check_shapes(x, upstream);
  const Moments m = moments(x, y);
  Image d_my(x.width, x.height, x.channels), d_eyy = d_my, d_exy = d_my;
  for (std::size_t i = 0; i < d_my.data.size(); ++i) {
    const double mx = m.mx.data[i], my = m.my.data[i];
    const double sxx = m.exx.data[i] - mx * mx, syy = m.eyy.data[i] - my * my, sxy = m.exy.data[i] - mx * my;
    const double A = 2 * mx * my + kC1, B = 2 * sxy + kC2;
    const double C = mx * mx + my * my + kC1, D = sxx + syy + kC2;
    const double S = A * B / (C * D);
    const double g = upstream.data[i];
    // The means enter A, B (through sxy), C and D (through syy).
    d_my.data[i] = g * ((2 * mx * B - 2 * mx * A) / (C * D) - S * 2 * my / C + S * 2 * my / D);
    d_eyy.data[i] = g * (-S / D);
    d_exy.data[i] = g * (2 * A / (C * D));
  }
  const Image f_my = gaussian_filter(d_my), f_eyy = gaussian_filter(d_eyy), f_exy = gaussian_filter(d_exy);
  Image grad(x.width, x.height, x.channels);
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    grad.data[i] = f_my.data[i] + 2 * y.data[i] * f_eyy.data[i] + x.data[i] * f_exy.data[i];
  return grad;
}

}  // namespace ocgs
