#pragma once

#include "ocgs/image.hpp"

namespace ocgs {

/// Per-pixel, per-channel SSIM with an 11×11 Gaussian window (sigma 1.5), zero padding
/// at the borders and stabilizers C1 = 0.01^2, C2 = 0.03^2.
Image ssim_map(const Image& x, const Image& y);

/// Mean of ssim_map over all pixels and channels.
double ssim(const Image& x, const Image& y);

/// Gradient w.r.t. y of sum(ssim_map(x, y) * upstream).
Image ssim_backward(const Image& x, const Image& y, const Image& upstream);

/// Separable "same" Gaussian filtering with zero padding, applied per channel.
Image gaussian_filter(const Image& img);

}  // namespace ocgs
