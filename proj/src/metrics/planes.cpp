#include "metrics/planes.hpp"

#include <algorithm>

namespace aidx::detail {

Plane luminance_plane(const ImageBuffer& img) {
  Plane out(img.height(), img.width());
  auto src = img.data();
  if (img.channels() == 1) {
    std::copy(src.begin(), src.end(), out.v.begin());
    return out;
  }
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    out.v[p] = kLumaR * src[3 * p] + kLumaG * src[3 * p + 1] + kLumaB * src[3 * p + 2];
  }
  return out;
}

ImageBuffer luminance_adjoint(const Plane& grad, const ImageBuffer& like) {
  ImageBuffer out(like.height(), like.width(), like.channels(), like.max_value(), 0.0);
  auto dst = out.data();
  if (like.channels() == 1) {
    std::copy(grad.v.begin(), grad.v.end(), dst.begin());
    return out;
  }
  for (std::size_t p = 0; p < like.pixel_count(); ++p) {
    dst[3 * p] = kLumaR * grad.v[p];
    dst[3 * p + 1] = kLumaG * grad.v[p];
    dst[3 * p + 2] = kLumaB * grad.v[p];
  }
  return out;
}

Plane box3(const Plane& in) {
  Plane out(in.height, in.width);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = std::clamp(r + dr, 0, in.height - 1);
        for (int dc = -1; dc <= 1; ++dc) acc += in(rr, std::clamp(c + dc, 0, in.width - 1));
      }
      out(r, c) = acc / 9.0;
    }
  }
  return out;
}

Plane box3_adjoint(const Plane& g) {
  Plane out(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const double share = g(r, c) / 9.0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = std::clamp(r + dr, 0, g.height - 1);
        for (int dc = -1; dc <= 1; ++dc) out(rr, std::clamp(c + dc, 0, g.width - 1)) += share;
      }
    }
  }
  return out;
}

namespace {

struct Span2 {
  int first, second;
};

Span2 pair_rows(int i, int n) {
  if (n == 1) return {0, 0};
  return {2 * i, 2 * i + 1};
}

}  // namespace

Plane down2(const Plane& in) {
  const int oh = std::max(1, in.height / 2);
  const int ow = std::max(1, in.width / 2);
  Plane out(oh, ow);
  for (int r = 0; r < oh; ++r) {
    const auto rs = pair_rows(r, in.height);
    for (int c = 0; c < ow; ++c) {
      const auto cs = pair_rows(c, in.width);
      out(r, c) = 0.25 * (in(rs.first, cs.first) + in(rs.first, cs.second) +
                          in(rs.second, cs.first) + in(rs.second, cs.second));
    }
  }
  return out;
}

Plane down2_adjoint(const Plane& g, int in_height, int in_width) {
  Plane out(in_height, in_width);
  for (int r = 0; r < g.height; ++r) {
    const auto rs = pair_rows(r, in_height);
    for (int c = 0; c < g.width; ++c) {
      const auto cs = pair_rows(c, in_width);
      const double share = 0.25 * g(r, c);
      out(rs.first, cs.first) += share;
      out(rs.first, cs.second) += share;
      out(rs.second, cs.first) += share;
      out(rs.second, cs.second) += share;
    }
  }
  return out;
}

}  // namespace aidx::detail
