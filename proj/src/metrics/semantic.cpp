#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "aindex/error.hpp"
#include "aindex/metrics.hpp"
#include "metrics/planes.hpp"

namespace aidx {

using detail::Plane;

ImageBuffer SemanticProvider::embed_vjp(const ImageBuffer&, std::span<const double>) const {
  throw Error(ErrorCode::NonDifferentiableProvider, name() + " has no gradient");
}

namespace {

constexpr int kGrid = ReferenceSemanticEmbedding::kGrid;
constexpr int kBins = ReferenceSemanticEmbedding::kOrientations;
constexpr int kGridDims = kGrid * kGrid;
constexpr int kColorOffset = kGridDims;
constexpr int kHistOffset = kGridDims + 3;
constexpr int kDim = ReferenceSemanticEmbedding::kDimension;

struct CellRange {
  int begin, end;
};

CellRange cell_range(int i, int n) {
  const int begin = i * n / kGrid;
  return {begin, std::max(begin + 1, (i + 1) * n / kGrid)};
}

double bin_cos(int k) { return std::cos(2.0 * std::numbers::pi * k / kBins); }
double bin_sin(int k) { return std::sin(2.0 * std::numbers::pi * k / kBins); }

struct Gradients {
  Plane gx, gy;
};

Gradients central_gradients(const Plane& g) {
  Gradients out{Plane(g.height, g.width), Plane(g.height, g.width)};
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      out.gx(r, c) = 0.5 * (g(r, std::min(c + 1, g.width - 1)) - g(r, std::max(c - 1, 0)));
      out.gy(r, c) = 0.5 * (g(std::min(r + 1, g.height - 1), c) - g(std::max(r - 1, 0), c));
    }
  }
  return out;
}

struct Forward {
  Plane lum;               // luminance on [0, 1]
  Gradients grads;
  std::vector<double> raw;  // unnormalized blocks
  std::vector<double> soft; // soft-normalized blocks
  double block_norm[3] = {0, 0, 0};
  double total_norm = 0.0;
  std::vector<double> embedding;
  bool degenerate = false;
};

constexpr int kBlockBegin[3] = {0, kColorOffset, kHistOffset};
constexpr int kBlockEnd[3] = {kColorOffset, kHistOffset, kDim};

Forward run_forward(const ImageBuffer& img) {
  Forward f;
  f.lum = detail::luminance_plane(img);
  for (double& v : f.lum.v) v /= img.max_value();
  const int h = img.height();
  const int w = img.width();
  const double pixels = static_cast<double>(img.pixel_count());
  f.raw.assign(kDim, 0.0);

  for (int i = 0; i < kGrid; ++i) {
    const auto rows = cell_range(i, h);
    for (int j = 0; j < kGrid; ++j) {
      const auto cols = cell_range(j, w);
      double acc = 0.0;
      for (int r = rows.begin; r < rows.end; ++r) {
        for (int c = cols.begin; c < cols.end; ++c) acc += f.lum(r, c);
      }
      f.raw[i * kGrid + j] = acc / ((rows.end - rows.begin) * (cols.end - cols.begin));
    }
  }

  if (img.channels() == 3) {
    auto src = img.data();
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
      for (int ch = 0; ch < 3; ++ch) f.raw[kColorOffset + ch] += src[3 * p + ch];
    }
    for (int ch = 0; ch < 3; ++ch) f.raw[kColorOffset + ch] /= pixels * img.max_value();
  } else {
    const double mean = std::accumulate(f.lum.v.begin(), f.lum.v.end(), 0.0) / pixels;
    for (int ch = 0; ch < 3; ++ch) f.raw[kColorOffset + ch] = mean;
  }

  f.grads = central_gradients(f.lum);
  for (int k = 0; k < kBins; ++k) {
    const double ck = bin_cos(k);
    const double sk = bin_sin(k);
    double acc = 0.0;
    for (std::size_t p = 0; p < f.lum.v.size(); ++p) {
      const double proj = std::max(0.0, ck * f.grads.gx.v[p] + sk * f.grads.gy.v[p]);
      acc += proj * proj;
    }
    f.raw[kHistOffset + k] = acc / pixels;
  }

  f.soft = f.raw;
  constexpr double eps2 =
      ReferenceSemanticEmbedding::kBlockEpsilon * ReferenceSemanticEmbedding::kBlockEpsilon;
  for (int b = 0; b < 3; ++b) {
    double sq = 0.0;
    for (int i = kBlockBegin[b]; i < kBlockEnd[b]; ++i) sq += f.raw[i] * f.raw[i];
    f.block_norm[b] = std::sqrt(sq + eps2);
    for (int i = kBlockBegin[b]; i < kBlockEnd[b]; ++i) f.soft[i] = f.raw[i] / f.block_norm[b];
  }

  double sq = 0.0;
  for (double v : f.soft) sq += v * v;
  f.total_norm = std::sqrt(sq);
  f.embedding.assign(kDim, 0.0);
  if (f.total_norm < 1e-150) {
    f.degenerate = true;
    std::fill(f.embedding.begin(), f.embedding.end(), 1.0 / std::sqrt(static_cast<double>(kDim)));
  } else {
    for (int i = 0; i < kDim; ++i) f.embedding[i] = f.soft[i] / f.total_norm;
  }
  return f;
}

std::vector<double> unit(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "embedding must be non-zero");
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

std::vector<double> ReferenceSemanticEmbedding::embed(const ImageBuffer& img) const {
  return run_forward(img).embedding;
}

ImageBuffer ReferenceSemanticEmbedding::embed_vjp(const ImageBuffer& img,
                                                  std::span<const double> cotangent) const {
  if (cotangent.size() != static_cast<std::size_t>(kDim)) {
    throw Error(ErrorCode::DimensionMismatch, "embedding cotangent has wrong dimension");
  }
  const Forward f = run_forward(img);
  ImageBuffer out(img.height(), img.width(), img.channels(), img.max_value(), 0.0);
  if (f.degenerate) return out;

  // Final l2 normalization.
  double dot = 0.0;
  for (int i = 0; i < kDim; ++i) dot += f.embedding[i] * cotangent[i];
  std::vector<double> g_soft(kDim);
  for (int i = 0; i < kDim; ++i) {
    g_soft[i] = (cotangent[i] - f.embedding[i] * dot) / f.total_norm;
  }

  // Per-block soft normalization.
  std::vector<double> g_raw(kDim);
  for (int b = 0; b < 3; ++b) {
    const double n = f.block_norm[b];
    double bdot = 0.0;
    for (int i = kBlockBegin[b]; i < kBlockEnd[b]; ++i) bdot += f.raw[i] * g_soft[i];
    for (int i = kBlockBegin[b]; i < kBlockEnd[b]; ++i) {
      g_raw[i] = g_soft[i] / n - f.raw[i] * bdot / (n * n * n);
    }
  }

  const int h = img.height();
  const int w = img.width();
  const double pixels = static_cast<double>(img.pixel_count());
  Plane g_lum(h, w);

  for (int i = 0; i < kGrid; ++i) {
    const auto rows = cell_range(i, h);
    for (int j = 0; j < kGrid; ++j) {
      const auto cols = cell_range(j, w);
      const double share =
          g_raw[i * kGrid + j] / ((rows.end - rows.begin) * (cols.end - cols.begin));
      for (int r = rows.begin; r < rows.end; ++r) {
        for (int c = cols.begin; c < cols.end; ++c) g_lum(r, c) += share;
      }
    }
  }

  if (img.channels() == 1) {
    const double share =
        (g_raw[kColorOffset] + g_raw[kColorOffset + 1] + g_raw[kColorOffset + 2]) / pixels;
    for (double& v : g_lum.v) v += share;
  }

  Plane g_gx(h, w);
  Plane g_gy(h, w);
  for (int k = 0; k < kBins; ++k) {
    const double ck = bin_cos(k);
    const double sk = bin_sin(k);
    const double scale = 2.0 * g_raw[kHistOffset + k] / pixels;
    for (std::size_t p = 0; p < g_lum.v.size(); ++p) {
      const double proj = std::max(0.0, ck * f.grads.gx.v[p] + sk * f.grads.gy.v[p]);
      g_gx.v[p] += scale * proj * ck;
      g_gy.v[p] += scale * proj * sk;
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double gxv = 0.5 * g_gx(r, c);
      g_lum(r, std::min(c + 1, w - 1)) += gxv;
      g_lum(r, std::max(c - 1, 0)) -= gxv;
      const double gyv = 0.5 * g_gy(r, c);
      g_lum(std::min(r + 1, h - 1), c) += gyv;
      g_lum(std::max(r - 1, 0), c) -= gyv;
    }
  }

  for (double& v : g_lum.v) v /= img.max_value();
  out = detail::luminance_adjoint(g_lum, img);
  if (img.channels() == 3) {
    auto dst = out.data();
    for (int ch = 0; ch < 3; ++ch) {
      const double share = g_raw[kColorOffset + ch] / (pixels * img.max_value());
      for (std::size_t p = 0; p < img.pixel_count(); ++p) dst[3 * p + ch] += share;
    }
  }
  return out;
}

void PrecomputedEmbeddings::insert(const ImageBuffer& img, std::vector<double> embedding) {
  table_[fingerprint(img)] = unit(std::move(embedding));
}

std::vector<double> PrecomputedEmbeddings::embed(const ImageBuffer& img) const {
  if (auto it = table_.find(fingerprint(img)); it != table_.end()) return it->second;
  throw Error(ErrorCode::ProviderUnavailable, "no precomputed embedding for image");
}

double semantic_similarity(const ImageBuffer& x, const ImageBuffer& y,
                           const SemanticProvider* provider) {
  if (provider == nullptr) throw Error(ErrorCode::ProviderUnavailable, "no semantic provider");
  const auto ex = provider->embed(x);
  const auto ey = provider->embed(y);
  if (ex.size() != ey.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding dimensions differ");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) dot += ex[i] * ey[i];
  return std::clamp(dot, -1.0, 1.0);
}

}  // namespace aidx
