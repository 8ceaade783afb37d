#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "aindex/metrics.hpp"

namespace aidx {

// Weights of the composite score and the sigmoid scale.
struct WeightVector {
  double alpha1 = 0.0;  // PSNR, per dB
  double alpha2 = 0.0;  // SSIM
  double alpha3 = 0.0;  // 1 - LPIPS
  double alpha4 = 0.0;  // CLIP cosine
  double sigma = 0.9;

  static constexpr double kBound = 10.0;

  // Published calibration: (-0.0181, 1.380, -4.058, 8.066), sigma 0.9.
  static WeightVector published();

  // Throws InvalidArgument if an alpha is outside [-10, 10] or sigma <= 0.
  void validate() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

enum class Label { Real, Fake };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

struct ScoreSample {
  std::string record_id;
  Label label = Label::Real;
  std::string generator;
  MetricVector metrics;
  double composite = 0.0;
  double a_index = 0.5;
};

// alpha1 psnr + alpha2 ssim + alpha3 (1 - lpips) + alpha4 clip.
double composite_score(const MetricVector& m, const WeightVector& w);

// 1 / (1 + exp(sigma s)), evaluated without overflow for any finite s.
double a_index(double s, const WeightVector& w);
double a_index(double s, double sigma);

// d a_index / d s = -sigma A (1 - A).
double a_index_derivative(double s, double sigma);

// d composite / d metrics.
MetricVector composite_gradient(const WeightVector& w);

ScoreSample make_score_sample(std::string record_id, Label label, std::string generator,
                              const MetricVector& m, const WeightVector& w);

}  // namespace aidx
