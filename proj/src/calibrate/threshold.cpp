#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "aindex/calibrate.hpp"
#include "aindex/error.hpp"

namespace aidx {

double calibrate_threshold(std::span<const double> fake_scores, double fpr_target) {
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fpr_target must be in (0, 1)");
  }
  const std::size_t n = fake_scores.size();
  // A quantile at rate q is only meaningful with at least 1/q samples.
  const auto needed = static_cast<std::size_t>(std::ceil(1.0 / fpr_target - 1e-9));
  if (n == 0 || n < needed) {
    throw Error(ErrorCode::InsufficientSamples,
                "threshold at FPR " + std::to_string(fpr_target) + " needs >= " +
                    std::to_string(needed) + " fake scores, got " + std::to_string(n));
  }
  std::vector<double> sorted(fake_scores.begin(), fake_scores.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite score");
  }
  std::sort(sorted.begin(), sorted.end());

  // Allowed count strictly above tau; integer comparison avoids rounding in
  // count / n <= fpr.
  const auto allowed = static_cast<std::size_t>(
      std::floor(fpr_target * static_cast<double>(n) + 1e-9 * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    const auto above = static_cast<std::size_t>(
        sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), sorted[i]));
    if (above <= allowed) return sorted[i];
  }
  return std::nextafter(sorted.back(), std::numeric_limits<double>::infinity());
}

double calibrate_security_threshold(std::span<const double> attacked_fake_scores,
                                    double fpr_target) {
  return calibrate_threshold(attacked_fake_scores, fpr_target);
}

double false_positive_rate(std::span<const double> fake_scores, double tau) {
  if (fake_scores.empty()) return 0.0;
  const auto above = std::count_if(fake_scores.begin(), fake_scores.end(),
                                   [tau](double s) { return s > tau; });
  return static_cast<double>(above) / static_cast<double>(fake_scores.size());
}

std::string_view to_string(Decision d) {
  return d == Decision::Authentic ? "authentic" : "plausibly_deniable";
}

Decision classify(double a_index, double tau) {
  return a_index >= tau ? Decision::Authentic : Decision::PlausiblyDeniable;
}

std::vector<double> a_indices(std::span<const ScoreSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.a_index);
  return out;
}

}  // namespace aidx
