#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include "aindex/error.hpp"
#include "aindex/inverters.hpp"
#include "aindex/metrics.hpp"

namespace aidx {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<double> fourier_magnitude(const ImageBuffer& img) {
  const int h = img.height();
  const int w = img.width();
  const ImageBuffer gray = to_grayscale(img);
  const std::size_t n = gray.size();

  auto* buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (buffer == nullptr) throw Error(ErrorCode::InvalidArgument, "fftw_malloc failed");
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(h, w, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  auto src = gray.data();
  for (std::size_t i = 0; i < n; ++i) {
    buffer[i][0] = src[i];
    buffer[i][1] = 0.0;
  }
  fftw_execute(plan);
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::hypot(buffer[i][0], buffer[i][1]);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buffer);
  return mag;
}

double feature_discrepancy(const ImageBuffer& x, const ImageBuffer& x_inv,
                           FeatureExtractor extractor) {
  const ImageBuffer y = match_dimensions(x_inv, x);
  std::vector<double> fx;
  std::vector<double> fy;
  if (extractor == FeatureExtractor::FourierMagnitude) {
    fx = fourier_magnitude(x);
    fy = fourier_magnitude(y);
  } else {
    const ReferencePyramidDistance pyramid;
    fx = pyramid.features(x);
    fy = pyramid.features(y);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    const double d = fx[i] - fy[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace aidx
