#include "aindex/index.hpp"

#include <cmath>
#include <string>

#include "aindex/error.hpp"

namespace aidx {

WeightVector WeightVector::published() { return {-0.0181, 1.380, -4.058, 8.066, 0.9}; }

void WeightVector::validate() const {
  for (double a : {alpha1, alpha2, alpha3, alpha4}) {
    if (!std::isfinite(a) || a < -kBound || a > kBound) {
      throw Error(ErrorCode::InvalidArgument,
                  "weight " + std::to_string(a) + " outside [-10, 10]");
    }
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  }
}

std::string_view to_string(Label label) { return label == Label::Real ? "real" : "fake"; }

Label parse_label(std::string_view text) {
  if (text == "real") return Label::Real;
  if (text == "fake") return Label::Fake;
  throw Error(ErrorCode::SchemaError, "label must be \"real\" or \"fake\", got \"" +
                                          std::string(text) + "\"");
}

double composite_score(const MetricVector& m, const WeightVector& w) {
  return w.alpha1 * m.psnr + w.alpha2 * m.ssim + w.alpha3 * (1.0 - m.lpips) + w.alpha4 * m.clip_sim;
}

double a_index(double s, double sigma) {
  const double z = sigma * s;
  // Logistic of -z, branch chosen so exp never overflows.
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double a_index(double s, const WeightVector& w) { return a_index(s, w.sigma); }

double a_index_derivative(double s, double sigma) {
  const double a = a_index(s, sigma);
  return -sigma * a * (1.0 - a);
}

MetricVector composite_gradient(const WeightVector& w) {
  return {w.alpha1, w.alpha2, -w.alpha3, w.alpha4};
}

ScoreSample make_score_sample(std::string record_id, Label label, std::string generator,
                              const MetricVector& m, const WeightVector& w) {
  ScoreSample s;
  s.record_id = std::move(record_id);
  s.label = label;
  s.generator = std::move(generator);
  s.metrics = m;
  s.composite = composite_score(m, w);
  s.a_index = a_index(s.composite, w);
  return s;
}

}  // namespace aidx
