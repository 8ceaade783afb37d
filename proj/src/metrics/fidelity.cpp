#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "aindex/error.hpp"
#include "aindex/metrics.hpp"
#include "metrics/planes.hpp"

namespace aidx {

void SsimConfig::validate() const {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "SSIM window must be odd and >= 3");
  }
  if (!(gaussian_sigma > 0.0) || !(k1 > 0.0) || !(k2 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SSIM sigma, k1 and k2 must be positive");
  }
}

namespace {

void require_same_shape(const ImageBuffer& x, const ImageBuffer& y, const char* what) {
  if (!x.same_shape(y) || x.max_value() != y.max_value()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(x.height()) + "x" +
                    std::to_string(x.width()) + "x" + std::to_string(x.channels()) + " vs " +
                    std::to_string(y.height()) + "x" + std::to_string(y.width()) + "x" +
                    std::to_string(y.channels()));
  }
}

double mean_squared_error(const ImageBuffer& x, const ImageBuffer& y) {
  auto a = x.data();
  auto b = y.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// Valid-mode separable correlation with a symmetric kernel.
detail::Plane filter_valid(const detail::Plane& in, const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int oh = in.height - k + 1;
  const int ow = in.width - k + 1;
  detail::Plane horizontal(in.height, ow);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * in(r, c + t);
      horizontal(r, c) = acc;
    }
  }
  detail::Plane out(oh, ow);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * horizontal(r + t, c);
      out(r, c) = acc;
    }
  }
  return out;
}

// Adjoint of filter_valid: scatters each output back onto its window.
detail::Plane filter_valid_adjoint(const detail::Plane& g, const std::vector<double>& taps,
                                   int in_height, int in_width) {
  const int k = static_cast<int>(taps.size());
  detail::Plane horizontal(in_height, g.width);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      for (int t = 0; t < k; ++t) horizontal(r + t, c) += taps[t] * g(r, c);
    }
  }
  detail::Plane out(in_height, in_width);
  for (int r = 0; r < in_height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      for (int t = 0; t < k; ++t) out(r, c + t) += taps[t] * horizontal(r, c);
    }
  }
  return out;
}

struct SsimMoments {
  detail::Plane mu_x, mu_y, e_xx, e_yy, e_xy;
};

SsimMoments ssim_moments(const detail::Plane& x, const detail::Plane& y,
                         const std::vector<double>& taps) {
  detail::Plane xx = x, yy = y, xy = x;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    xx.v[i] = x.v[i] * x.v[i];
    yy.v[i] = y.v[i] * y.v[i];
    xy.v[i] = x.v[i] * y.v[i];
  }
  return {filter_valid(x, taps), filter_valid(y, taps), filter_valid(xx, taps),
          filter_valid(yy, taps), filter_valid(xy, taps)};
}

void check_ssim_inputs(const ImageBuffer& x, const ImageBuffer& y, const SsimConfig& cfg) {
  cfg.validate();
  require_same_shape(x, y, "ssim");
  if (std::min(x.height(), x.width()) < cfg.window) {
    throw Error(ErrorCode::ImageTooSmall,
                "ssim needs at least " + std::to_string(cfg.window) + "x" +
                    std::to_string(cfg.window) + " pixels, got " + std::to_string(x.height()) +
                    "x" + std::to_string(x.width()));
  }
}

}  // namespace

std::vector<double> ssim_window_taps(const SsimConfig& cfg) {
  cfg.validate();
  const int radius = cfg.window / 2;
  std::vector<double> taps(static_cast<std::size_t>(cfg.window));
  double total = 0.0;
  for (int i = 0; i < cfg.window; ++i) {
    const double d = i - radius;
    taps[i] = std::exp(-d * d / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

double psnr(const ImageBuffer& x, const ImageBuffer& y) {
  require_same_shape(x, y, "psnr");
  const double max2 = x.max_value() * x.max_value();
  const double mse = mean_squared_error(x, y);
  if (mse < max2 * kMseFloorFactor) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max2 / mse));
}

ImageBuffer psnr_gradient(const ImageBuffer& x, const ImageBuffer& y) {
  require_same_shape(x, y, "psnr");
  ImageBuffer grad(y.height(), y.width(), y.channels(), y.max_value(), 0.0);
  const double max2 = x.max_value() * x.max_value();
  const double mse = mean_squared_error(x, y);
  if (mse < max2 * kMseFloorFactor || 10.0 * std::log10(max2 / mse) >= kPsnrCap) return grad;
  // psnr = 10 log10(M^2) - 10 log10(mse);  d mse / d y_i = 2 (y_i - x_i) / N.
  const double k = -10.0 / (std::numbers::ln10 * mse) * 2.0 / static_cast<double>(y.size());
  auto a = x.data();
  auto b = y.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = k * (b[i] - a[i]);
  return grad;
}

double ssim(const ImageBuffer& x, const ImageBuffer& y, const SsimConfig& cfg) {
  check_ssim_inputs(x, y, cfg);
  const auto taps = ssim_window_taps(cfg);
  const auto gx = detail::luminance_plane(x);
  const auto gy = detail::luminance_plane(y);
  const auto m = ssim_moments(gx, gy, taps);

  const double c1 = (cfg.k1 * x.max_value()) * (cfg.k1 * x.max_value());
  const double c2 = (cfg.k2 * x.max_value()) * (cfg.k2 * x.max_value());
  double total = 0.0;
  for (std::size_t p = 0; p < m.mu_x.v.size(); ++p) {
    const double mx = m.mu_x.v[p];
    const double my = m.mu_y.v[p];
    const double vx = m.e_xx.v[p] - mx * mx;
    const double vy = m.e_yy.v[p] - my * my;
    const double cxy = m.e_xy.v[p] - mx * my;
    total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(m.mu_x.v.size());
}

ImageBuffer ssim_gradient(const ImageBuffer& x, const ImageBuffer& y, const SsimConfig& cfg) {
  check_ssim_inputs(x, y, cfg);
  const auto taps = ssim_window_taps(cfg);
  const auto gx = detail::luminance_plane(x);
  const auto gy = detail::luminance_plane(y);
  const auto m = ssim_moments(gx, gy, taps);

  const double c1 = (cfg.k1 * x.max_value()) * (cfg.k1 * x.max_value());
  const double c2 = (cfg.k2 * x.max_value()) * (cfg.k2 * x.max_value());
  const double inv_count = 1.0 / static_cast<double>(m.mu_x.v.size());

  // Partials of the mean SSIM w.r.t. the y-side moments mu_y, E[y^2], E[xy].
  detail::Plane d_mu(m.mu_x.height, m.mu_x.width);
  detail::Plane d_eyy(m.mu_x.height, m.mu_x.width);
  detail::Plane d_exy(m.mu_x.height, m.mu_x.width);
  for (std::size_t p = 0; p < m.mu_x.v.size(); ++p) {
    const double mx = m.mu_x.v[p];
    const double my = m.mu_y.v[p];
    const double vx = m.e_xx.v[p] - mx * mx;
    const double vy = m.e_yy.v[p] - my * my;
    const double cxy = m.e_xy.v[p] - mx * my;
    const double a1 = 2 * mx * my + c1;
    const double a2 = 2 * cxy + c2;
    const double b1 = mx * mx + my * my + c1;
    const double b2 = vx + vy + c2;
    const double s = (a1 * a2) / (b1 * b2);
    const double ds_dvy = -s / b2;
    const double ds_dcxy = 2.0 * a1 / (b1 * b2);
    const double ds_dmy_direct = 2.0 * mx * a2 / (b1 * b2) - s * 2.0 * my / b1;
    d_mu.v[p] = inv_count * (ds_dmy_direct - 2.0 * my * ds_dvy - mx * ds_dcxy);
    d_eyy.v[p] = inv_count * ds_dvy;
    d_exy.v[p] = inv_count * ds_dcxy;
  }

  const auto back_mu = filter_valid_adjoint(d_mu, taps, gy.height, gy.width);
  const auto back_eyy = filter_valid_adjoint(d_eyy, taps, gy.height, gy.width);
  const auto back_exy = filter_valid_adjoint(d_exy, taps, gy.height, gy.width);
  detail::Plane grad_luma(gy.height, gy.width);
  for (std::size_t i = 0; i < grad_luma.v.size(); ++i) {
    grad_luma.v[i] = back_mu.v[i] + 2.0 * gy.v[i] * back_eyy.v[i] + gx.v[i] * back_exy.v[i];
  }
  return detail::luminance_adjoint(grad_luma, y);
}

}  // namespace aidx
