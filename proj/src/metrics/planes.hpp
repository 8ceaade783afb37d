#pragma once

// Single-channel scratch planes shared by the metric kernels and their
// hand-written adjoints.

#include <vector>

#include "aindex/image.hpp"

namespace aidx::detail {

struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int h, int w, double fill = 0.0)
      : height(h), width(w), v(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * width + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * width + c]; }
};

// Luminance on the image's own scale (no normalization).
Plane luminance_plane(const ImageBuffer& img);

// Gradient w.r.t. luminance -> gradient w.r.t. the image's channels.
ImageBuffer luminance_adjoint(const Plane& grad, const ImageBuffer& like);

// 3x3 box mean with replicated borders, and its adjoint.
Plane box3(const Plane& in);
Plane box3_adjoint(const Plane& g);

// 2x2 average downsample (an axis of length 1 is kept), and its adjoint.
Plane down2(const Plane& in);
Plane down2_adjoint(const Plane& g, int in_height, int in_width);

}  // namespace aidx::detail
