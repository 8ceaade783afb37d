#pragma once

#include <cstdint>
#include <string>

#include "aindex/image.hpp"

namespace aidx {

// The resynthesis seam: maps an image to its inversion. Output has the
// input's shape and max_value and lies in [0, max_value].
class Inverter {
 public:
  virtual ~Inverter() = default;
  virtual ImageBuffer invert(const ImageBuffer& x) const = 0;
  // Name, version and parameters; echoed into reports.
  virtual std::string descriptor() const = 0;
  virtual bool differentiable() const { return false; }
  // Callers must serialize invocations when false.
  virtual bool thread_safe() const { return true; }
  // Vector-Jacobian product at input x. Throws NonDifferentiableInverter
  // unless overridden.
  virtual ImageBuffer vjp(const ImageBuffer& x, const ImageBuffer& cotangent) const;
};

struct ReferenceInverterConfig {
  double blur_sigma = 1.5;   // pixels
  double noise_sigma = 0.0;  // fraction of max_value
  std::uint64_t noise_seed = 0;
  double fidelity = 0.6;     // 1 = identity

  void validate() const;
};

// clamp(f x + (1 - f) (blur(x) + noise)). The noise field depends only on
// (shape, seed), so repeated calls on perturbed inputs see the same noise.
ImageBuffer reference_invert(const ImageBuffer& x, const ReferenceInverterConfig& cfg);

class ReferenceInverter final : public Inverter {
 public:
  explicit ReferenceInverter(ReferenceInverterConfig cfg);

  ImageBuffer invert(const ImageBuffer& x) const override;
  std::string descriptor() const override;
  bool differentiable() const override { return true; }
  ImageBuffer vjp(const ImageBuffer& x, const ImageBuffer& cotangent) const override;

  const ReferenceInverterConfig& config() const noexcept { return cfg_; }

 private:
  ReferenceInverterConfig cfg_;
};

// Separable Gaussian blur with replicated borders (radius ceil(3 sigma)),
// per channel. sigma = 0 returns the input.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

enum class FeatureExtractor { FourierMagnitude, Pyramid };

// || Psi(x) - Psi(x_inv) ||_2 with x_inv brought to x's shape first.
// FourierMagnitude: |DFT2(luminance)| on the image's own scale.
// Pyramid: the reference perceptual feature stack.
double feature_discrepancy(const ImageBuffer& x, const ImageBuffer& x_inv,
                           FeatureExtractor extractor);

// Magnitude spectrum of the 2-D DFT of the luminance, row-major H x W.
std::vector<double> fourier_magnitude(const ImageBuffer& img);

}  // namespace aidx
