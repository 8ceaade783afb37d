#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aindex/image.hpp"

namespace aidx {

inline constexpr double kPsnrCap = 100.0;
// MSE below max_value^2 * kMseFloorFactor reports kPsnrCap.
inline constexpr double kMseFloorFactor = 1e-10;

struct MetricVector {
  double psnr = 0.0;
  double ssim = 0.0;
  double lpips = 0.0;
  double clip_sim = 0.0;

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

// Per-channel overrides carried by a manifest record. A present channel wins
// over the computed value.
struct PartialMetrics {
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> lpips;
  std::optional<double> clip;

  bool complete() const { return psnr && ssim && lpips && clip; }
  bool any() const { return psnr || ssim || lpips || clip; }
  friend bool operator==(const PartialMetrics&, const PartialMetrics&) = default;
};

struct SsimConfig {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;

  void validate() const;
};

double psnr(const ImageBuffer& x, const ImageBuffer& y);

// Mean SSIM over all valid window positions, on luminance (RGB inputs are
// converted first).
double ssim(const ImageBuffer& x, const ImageBuffer& y, const SsimConfig& cfg = {});

// Normalized separable Gaussian taps of length cfg.window.
std::vector<double> ssim_window_taps(const SsimConfig& cfg);

// d psnr(x, y) / d y, shaped like y. Zero when the PSNR cap is active.
ImageBuffer psnr_gradient(const ImageBuffer& x, const ImageBuffer& y);

// d ssim(x, y) / d y, shaped like y (chained through luminance for RGB).
ImageBuffer ssim_gradient(const ImageBuffer& x, const ImageBuffer& y, const SsimConfig& cfg = {});

// --- Perceptual channel -----------------------------------------------------

class PerceptualProvider {
 public:
  virtual ~PerceptualProvider() = default;
  virtual std::string name() const = 0;
  virtual double distance(const ImageBuffer& x, const ImageBuffer& y) const = 0;
  virtual bool differentiable() const { return false; }
  // d distance(x, y) / d y. Throws NonDifferentiableProvider unless overridden.
  virtual ImageBuffer distance_gradient(const ImageBuffer& x, const ImageBuffer& y) const;
};

// Deterministic stand-in for a learned perceptual distance: a three-level
// 2x2-average pyramid of the luminance image; at every level the image is
// split into a 3x3 local mean and a locally contrast-normalized residual, and
// both are compared by weighted mean squared difference.
class ReferencePyramidDistance final : public PerceptualProvider {
 public:
  static constexpr int kLevels = 3;
  static constexpr double kLevelWeights[kLevels] = {0.5, 0.3, 0.2};
  static constexpr double kStructureGain = 0.25;
  static constexpr double kLuminanceGain = 1.0;
  static constexpr double kContrastFloor = 1e-4;

  std::string name() const override { return "reference-pyramid/1"; }
  double distance(const ImageBuffer& x, const ImageBuffer& y) const override;
  bool differentiable() const override { return true; }
  ImageBuffer distance_gradient(const ImageBuffer& x, const ImageBuffer& y) const override;

  // Feature stack scaled so that the squared l2 distance between two stacks
  // equals distance().
  std::vector<double> features(const ImageBuffer& img) const;
};

// Distances supplied from outside (typically a manifest produced by the
// learned-network adapter), keyed by image content.
class PrecomputedPerceptual final : public PerceptualProvider {
 public:
  std::string name() const override { return "precomputed"; }
  void insert(const ImageBuffer& x, const ImageBuffer& y, double value);
  double distance(const ImageBuffer& x, const ImageBuffer& y) const override;

 private:
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> table_;
};

// --- Semantic channel -------------------------------------------------------

class SemanticProvider {
 public:
  virtual ~SemanticProvider() = default;
  virtual std::string name() const = 0;
  // Unit-norm embedding of fixed dimension.
  virtual std::vector<double> embed(const ImageBuffer& img) const = 0;
  virtual bool differentiable() const { return false; }
  // Vector-Jacobian product: sum_k cotangent[k] * d embed(img)[k] / d img.
  virtual ImageBuffer embed_vjp(const ImageBuffer& img, std::span<const double> cotangent) const;
};

// Deterministic stand-in for an image encoder. Blocks: 8x8 area-averaged
// luminance grid (64), per-channel mean color (3), 8-bin oriented gradient
// energy (8). Each block is soft-normalized, then the concatenation is
// l2-normalized. A featureless black image maps to the uniform unit vector.
class ReferenceSemanticEmbedding final : public SemanticProvider {
 public:
  static constexpr int kGrid = 8;
  static constexpr int kOrientations = 8;
  static constexpr int kDimension = kGrid * kGrid + 3 + kOrientations;
  static constexpr double kBlockEpsilon = 1e-6;

  std::string name() const override { return "reference-embedding/1"; }
  std::vector<double> embed(const ImageBuffer& img) const override;
  bool differentiable() const override { return true; }
  ImageBuffer embed_vjp(const ImageBuffer& img, std::span<const double> cotangent) const override;
};

class PrecomputedEmbeddings final : public SemanticProvider {
 public:
  std::string name() const override { return "precomputed"; }
  // Stored normalized.
  void insert(const ImageBuffer& img, std::vector<double> embedding);
  std::vector<double> embed(const ImageBuffer& img) const override;

 private:
  std::map<std::uint64_t, std::vector<double>> table_;
};

// --- Composition ------------------------------------------------------------

struct MetricProviders {
  SsimConfig ssim;
  std::shared_ptr<const PerceptualProvider> perceptual;
  std::shared_ptr<const SemanticProvider> semantic;

  static MetricProviders reference(SsimConfig cfg = {});
};

double perceptual_distance(const ImageBuffer& x, const ImageBuffer& y,
                           const PerceptualProvider* provider);

double semantic_similarity(const ImageBuffer& x, const ImageBuffer& y,
                           const SemanticProvider* provider);

// All four channels for (x, x_inv). x_inv is brought to x's shape first.
// Channels present in overrides are taken verbatim and never computed.
MetricVector metric_vector(const ImageBuffer& x, const ImageBuffer& x_inv,
                           const MetricProviders& providers, const PartialMetrics& overrides = {});

}  // namespace aidx
