#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "aindex/error.hpp"
#include "aindex/inverters.hpp"

namespace aidx {

ImageBuffer Inverter::vjp(const ImageBuffer&, const ImageBuffer&) const {
  throw Error(ErrorCode::NonDifferentiableInverter, descriptor());
}

void ReferenceInverterConfig::validate() const {
  if (!(blur_sigma >= 0.0) || !(noise_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "reference inverter sigmas must be non-negative");
  }
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "reference inverter fidelity must be in [0, 1]");
  }
}

namespace {

std::vector<double> blur_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[i + radius];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Replicated-border separable correlation. With transpose = true, applies the
// adjoint (scatter instead of gather).
ImageBuffer separable_filter(const ImageBuffer& img, const std::vector<double>& taps,
                             bool transpose) {
  const int radius = static_cast<int>(taps.size() / 2);
  const int h = img.height();
  const int w = img.width();
  const int ch = img.channels();
  ImageBuffer tmp(h, w, ch, img.max_value(), 0.0);
  ImageBuffer out(h, w, ch, img.max_value(), 0.0);

  auto pass = [&](const ImageBuffer& src, ImageBuffer& dst, bool horizontal) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int k = -radius; k <= radius; ++k) {
          const int rr = horizontal ? r : std::clamp(r + k, 0, h - 1);
          const int cc = horizontal ? std::clamp(c + k, 0, w - 1) : c;
          const double t = taps[k + radius];
          for (int z = 0; z < ch; ++z) {
            if (transpose) {
              dst.at(rr, cc, z) += t * src.at(r, c, z);
            } else {
              dst.at(r, c, z) += t * src.at(rr, cc, z);
            }
          }
        }
      }
    }
  };
  if (transpose) {
    pass(img, tmp, false);
    pass(tmp, out, true);
  } else {
    pass(img, tmp, true);
    pass(tmp, out, false);
  }
  return out;
}

std::vector<double> noise_field(const ImageBuffer& like, const ReferenceInverterConfig& cfg) {
  std::vector<double> noise(like.size(), 0.0);
  if (cfg.noise_sigma <= 0.0) return noise;
  std::mt19937_64 rng(cfg.noise_seed);
  std::normal_distribution<double> n(0.0, cfg.noise_sigma * like.max_value());
  for (double& v : noise) v = n(rng);
  return noise;
}

// Pre-clamp output.
ImageBuffer degrade_blend(const ImageBuffer& x, const ReferenceInverterConfig& cfg) {
  ImageBuffer out = x;
  if (cfg.fidelity >= 1.0) return out;
  const ImageBuffer blurred = gaussian_blur(x, cfg.blur_sigma);
  const auto noise = noise_field(x, cfg);
  auto src = x.data();
  auto blr = blurred.data();
  auto dst = out.data();
  const double f = cfg.fidelity;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = f * src[i] + (1.0 - f) * (blr[i] + noise[i]);
  }
  return out;
}

}  // namespace

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  if (sigma <= 0.0) return img;
  return separable_filter(img, blur_taps(sigma), false);
}

ImageBuffer reference_invert(const ImageBuffer& x, const ReferenceInverterConfig& cfg) {
  cfg.validate();
  ImageBuffer out = degrade_blend(x, cfg);
  out.clamp_to_range();
  return out;
}

ReferenceInverter::ReferenceInverter(ReferenceInverterConfig cfg) : cfg_(cfg) { cfg_.validate(); }

ImageBuffer ReferenceInverter::invert(const ImageBuffer& x) const { return reference_invert(x, cfg_); }

std::string ReferenceInverter::descriptor() const {
  std::ostringstream os;
  os << "reference-inverter/1(fidelity=" << cfg_.fidelity << ",blur_sigma=" << cfg_.blur_sigma
     << ",noise_sigma=" << cfg_.noise_sigma << ",noise_seed=" << cfg_.noise_seed << ")";
  return os.str();
}

ImageBuffer ReferenceInverter::vjp(const ImageBuffer& x, const ImageBuffer& cotangent) const {
  if (!x.same_shape(cotangent)) {
    throw Error(ErrorCode::DimensionMismatch, "inverter cotangent shape differs from input");
  }
  // Zero subgradient where the clamp is active.
  const ImageBuffer pre = degrade_blend(x, cfg_);
  ImageBuffer masked = cotangent;
  auto p = pre.data();
  auto m = masked.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (p[i] < 0.0 || p[i] > x.max_value()) m[i] = 0.0;
  }
  if (cfg_.fidelity >= 1.0) return masked;

  ImageBuffer out = masked;
  const double f = cfg_.fidelity;
  const ImageBuffer back = cfg_.blur_sigma > 0.0
                               ? separable_filter(masked, blur_taps(cfg_.blur_sigma), true)
                               : masked;
  auto o = out.data();
  auto b = back.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f * m[i] + (1.0 - f) * b[i];
  return out;
}

}  // namespace aidx
