#pragma once

#include <cstdint>

#include "aindex/image.hpp"

namespace aidx {

// Procedural image with roughly natural second-order statistics: a 1/f-like
// sum of smoothed noise octaves plus a few soft blobs and a global tint.
// Values stay inside (0.04, 0.96) * max_value so small perturbations and
// shifts do not hit the clamp. Deterministic in (shape, seed).
ImageBuffer make_natural_image(int height, int width, int channels, std::uint64_t seed,
                               double max_value = 255.0);

// Uniform i.i.d. samples in [lo, hi] * max_value.
ImageBuffer make_uniform_noise_image(int height, int width, int channels, std::uint64_t seed,
                                     double lo = 0.0, double hi = 1.0, double max_value = 255.0);

// Adds zero-mean Gaussian noise with standard deviation sigma * max_value, clamped to range.
ImageBuffer add_gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed);

}  // namespace aidx
