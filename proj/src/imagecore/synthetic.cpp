#include "aindex/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace aidx {

namespace {

// Bilinearly upsampled lattice noise at a given cell size.
std::vector<double> lattice_octave(int height, int width, int cell, std::mt19937_64& rng) {
  const int gh = height / cell + 2;
  const int gw = width / cell + 2;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> lattice(static_cast<std::size_t>(gh) * gw);
  for (double& v : lattice) v = u(rng);

  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    const double fy = static_cast<double>(r) / cell;
    const int y0 = static_cast<int>(fy);
    const double ty = fy - y0;
    const double sy = ty * ty * (3.0 - 2.0 * ty);
    for (int c = 0; c < width; ++c) {
      const double fx = static_cast<double>(c) / cell;
      const int x0 = static_cast<int>(fx);
      const double tx = fx - x0;
      const double sx = tx * tx * (3.0 - 2.0 * tx);
      auto L = [&](int y, int x) { return lattice[static_cast<std::size_t>(y) * gw + x]; };
      const double top = (1 - sx) * L(y0, x0) + sx * L(y0, x0 + 1);
      const double bot = (1 - sx) * L(y0 + 1, x0) + sx * L(y0 + 1, x0 + 1);
      out[static_cast<std::size_t>(r) * width + c] = (1 - sy) * top + sy * bot;
    }
  }
  return out;
}

}  // namespace

ImageBuffer make_natural_image(int height, int width, int channels, std::uint64_t seed,
                               double max_value) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> field(static_cast<std::size_t>(height) * width, 0.0);
  double amplitude = 1.0;
  for (int cell = std::max(2, std::max(height, width) / 2); cell >= 1; cell /= 2) {
    const auto octave = lattice_octave(height, width, cell, rng);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] += amplitude * octave[i];
    amplitude *= 0.55;
  }
  const int blobs = 2 + static_cast<int>(u01(rng) * 3);
  for (int b = 0; b < blobs; ++b) {
    const double cy = u01(rng) * height;
    const double cx = u01(rng) * width;
    const double rad = (0.1 + 0.25 * u01(rng)) * std::max(height, width);
    const double amp = (u01(rng) - 0.5) * 2.0;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
        field[static_cast<std::size_t>(r) * width + c] += amp * std::exp(-d2 / (2 * rad * rad));
      }
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
  const double lo = *lo_it;
  const double span = std::max(*hi_it - lo, 1e-12);
  const double contrast = 0.45 + 0.45 * u01(rng);
  const double base = 0.5 + (u01(rng) - 0.5) * (0.9 - contrast);

  ImageBuffer out(height, width, channels, max_value);
  double tint[3] = {1.0, 1.0, 1.0};
  if (channels == 3) {
    for (double& t : tint) t = 0.85 + 0.3 * u01(rng);
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double v = (field[static_cast<std::size_t>(r) * width + c] - lo) / span - 0.5;
      for (int ch = 0; ch < channels; ++ch) {
        const double s = base + contrast * v * tint[ch] + 0.02 * (tint[ch] - 1.0);
        out.at(r, c, ch) = std::clamp(s, 0.04, 0.96) * max_value;
      }
    }
  }
  return out;
}

ImageBuffer make_uniform_noise_image(int height, int width, int channels, std::uint64_t seed,
                                     double lo, double hi, double max_value) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ImageBuffer out(height, width, channels, max_value);
  for (double& s : out.data()) s = u(rng) * max_value;
  return out;
}

ImageBuffer add_gaussian_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma * img.max_value());
  ImageBuffer out = img;
  for (double& s : out.data()) s += n(rng);
  out.clamp_to_range();
  return out;
}

}  // namespace aidx
