#pragma once

#include "splatfuse/core/pixel_grid.hpp"

namespace splatfuse {

// Mean structural similarity over all fully-interior windows (Gaussian
// window, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2 for images in [0,1]).
// Multi-channel images average the per-channel means.
double ssim_mean(const GridD& a, const GridD& b, int window = 11);
double ssim_mean(const GridV3& a, const GridV3& b, int window = 11);

// Same value plus the gradient with respect to the first image. `dx` is
// resized to match and overwritten.
double ssim_with_gradient(const GridD& x, const GridD& y, GridD& dx,
                          int window = 11);
double ssim_with_gradient(const GridV3& x, const GridV3& y, GridV3& dx,
                          int window = 11);

}  // namespace splatfuse
