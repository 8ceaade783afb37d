#include <cmath>

#include "aindex/error.hpp"
#include "aindex/metrics.hpp"
#include "metrics/planes.hpp"

namespace aidx {

using detail::Plane;

ImageBuffer PerceptualProvider::distance_gradient(const ImageBuffer&, const ImageBuffer&) const {
  throw Error(ErrorCode::NonDifferentiableProvider, name() + " has no gradient");
}

namespace {

struct PyramidLevel {
  Plane lum;     // level input on [0, 1]
  Plane mean;    // box3(lum)
  Plane resid;   // lum - mean
  Plane denom;   // sqrt(local variance + floor)
  Plane norm;    // resid / denom
};

std::vector<PyramidLevel> build_pyramid(const ImageBuffer& img) {
  Plane lum = detail::luminance_plane(img);
  for (double& v : lum.v) v /= img.max_value();

  std::vector<PyramidLevel> levels;
  levels.reserve(ReferencePyramidDistance::kLevels);
  for (int l = 0; l < ReferencePyramidDistance::kLevels; ++l) {
    PyramidLevel level;
    level.mean = detail::box3(lum);
    Plane sq = lum;
    for (double& v : sq.v) v *= v;
    const Plane mean_sq = detail::box3(sq);
    level.resid = Plane(lum.height, lum.width);
    level.denom = Plane(lum.height, lum.width);
    level.norm = Plane(lum.height, lum.width);
    for (std::size_t i = 0; i < lum.v.size(); ++i) {
      const double m = level.mean.v[i];
      const double var = mean_sq.v[i] - m * m;
      level.resid.v[i] = lum.v[i] - m;
      level.denom.v[i] = std::sqrt(var + ReferencePyramidDistance::kContrastFloor);
      level.norm.v[i] = level.resid.v[i] / level.denom.v[i];
    }
    Plane next = detail::down2(lum);
    level.lum = std::move(lum);
    levels.push_back(std::move(level));
    lum = std::move(next);
  }
  return levels;
}

void require_match(const ImageBuffer& x, const ImageBuffer& y) {
  if (!x.same_shape(y)) {
    throw Error(ErrorCode::DimensionMismatch, "perceptual distance inputs differ in shape");
  }
}

}  // namespace

double ReferencePyramidDistance::distance(const ImageBuffer& x, const ImageBuffer& y) const {
  require_match(x, y);
  const auto px = build_pyramid(x);
  const auto py = build_pyramid(y);
  double total = 0.0;
  for (int l = 0; l < kLevels; ++l) {
    double structure = 0.0;
    double luminance = 0.0;
    const std::size_t n = px[l].lum.v.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double dn = px[l].norm.v[i] - py[l].norm.v[i];
      const double dm = px[l].mean.v[i] - py[l].mean.v[i];
      structure += dn * dn;
      luminance += dm * dm;
    }
    total += kLevelWeights[l] * (kStructureGain * structure + kLuminanceGain * luminance) /
             static_cast<double>(n);
  }
  return total;
}

std::vector<double> ReferencePyramidDistance::features(const ImageBuffer& img) const {
  const auto pyramid = build_pyramid(img);
  std::vector<double> out;
  for (int l = 0; l < kLevels; ++l) {
    const double n = static_cast<double>(pyramid[l].lum.v.size());
    const double ks = std::sqrt(kLevelWeights[l] * kStructureGain / n);
    const double km = std::sqrt(kLevelWeights[l] * kLuminanceGain / n);
    for (double v : pyramid[l].norm.v) out.push_back(ks * v);
    for (double v : pyramid[l].mean.v) out.push_back(km * v);
  }
  return out;
}

ImageBuffer ReferencePyramidDistance::distance_gradient(const ImageBuffer& x,
                                                        const ImageBuffer& y) const {
  require_match(x, y);
  const auto px = build_pyramid(x);
  const auto py = build_pyramid(y);

  // Walk from the coarsest level up, folding each level's gradient into the
  // one above through the downsample adjoint.
  Plane carry;
  for (int l = kLevels - 1; l >= 0; --l) {
    const auto& a = px[l];
    const auto& b = py[l];
    const int h = b.lum.height;
    const int w = b.lum.width;
    const double n = static_cast<double>(b.lum.v.size());
    const double gs = kLevelWeights[l] * kStructureGain * 2.0 / n;
    const double gl = kLevelWeights[l] * kLuminanceGain * 2.0 / n;

    Plane g_lum(h, w);
    Plane g_mean(h, w);
    Plane g_mean_sq(h, w);
    for (std::size_t i = 0; i < b.lum.v.size(); ++i) {
      const double g_norm = gs * (b.norm.v[i] - a.norm.v[i]);
      const double den = b.denom.v[i];
      const double g_resid = g_norm / den;
      const double g_var = -g_norm * b.resid.v[i] / (2.0 * den * den * den);
      g_lum.v[i] += g_resid;
      g_mean.v[i] += -g_resid + gl * (b.mean.v[i] - a.mean.v[i]) - 2.0 * b.mean.v[i] * g_var;
      g_mean_sq.v[i] = g_var;
    }
    const Plane back_mean = detail::box3_adjoint(g_mean);
    const Plane back_sq = detail::box3_adjoint(g_mean_sq);
    for (std::size_t i = 0; i < g_lum.v.size(); ++i) {
      g_lum.v[i] += back_mean.v[i] + 2.0 * b.lum.v[i] * back_sq.v[i];
    }
    if (l + 1 < kLevels) {
      const Plane up = detail::down2_adjoint(carry, h, w);
      for (std::size_t i = 0; i < g_lum.v.size(); ++i) g_lum.v[i] += up.v[i];
    }
    carry = std::move(g_lum);
  }
  for (double& v : carry.v) v /= y.max_value();
  return detail::luminance_adjoint(carry, y);
}

void PrecomputedPerceptual::insert(const ImageBuffer& x, const ImageBuffer& y, double value) {
  if (!(value >= 0.0)) throw Error(ErrorCode::InvalidArgument, "perceptual distance must be >= 0");
  table_[{fingerprint(x), fingerprint(y)}] = value;
}

double PrecomputedPerceptual::distance(const ImageBuffer& x, const ImageBuffer& y) const {
  if (auto it = table_.find({fingerprint(x), fingerprint(y)}); it != table_.end()) return it->second;
  if (auto it = table_.find({fingerprint(y), fingerprint(x)}); it != table_.end()) return it->second;
  if (x == y) return 0.0;
  throw Error(ErrorCode::ProviderUnavailable, "no precomputed perceptual distance for pair");
}

double perceptual_distance(const ImageBuffer& x, const ImageBuffer& y,
                           const PerceptualProvider* provider) {
  if (provider == nullptr) throw Error(ErrorCode::ProviderUnavailable, "no perceptual provider");
  return provider->distance(x, y);
}

}  // namespace aidx
