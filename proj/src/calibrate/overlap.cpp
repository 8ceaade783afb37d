#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "aindex/calibrate.hpp"
#include "aindex/error.hpp"

namespace aidx {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Gaussian KDE on the grid; kernels are cut at 8 bandwidths (< 1e-14 relative).
std::vector<double> kde_on_grid(const std::vector<double>& sorted, double bandwidth, double lo,
                                double step, int points) {
  std::vector<double> density(static_cast<std::size_t>(points), 0.0);
  const double norm =
      1.0 / (static_cast<double>(sorted.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  const double cutoff = 8.0 * bandwidth;
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (int g = 0; g < points; ++g) {
    const double s = lo + step * g;
    auto first = std::lower_bound(sorted.begin(), sorted.end(), s - cutoff);
    auto last = std::upper_bound(first, sorted.end(), s + cutoff);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double d = s - *it;
      acc += std::exp(-d * d * inv2h2);
    }
    density[static_cast<std::size_t>(g)] = acc * norm;
  }
  return density;
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double overlap_estimate(std::span<const double> scores_a, std::span<const double> scores_b) {
  if (scores_a.size() < KdeSettings::kMinSamples || scores_b.size() < KdeSettings::kMinSamples) {
    throw Error(ErrorCode::InsufficientSamples,
                "overlap_estimate needs >= 10 samples per set, got " +
                    std::to_string(scores_a.size()) + " and " + std::to_string(scores_b.size()));
  }
  std::vector<double> a(scores_a.begin(), scores_a.end());
  std::vector<double> b(scores_b.begin(), scores_b.end());
  for (double v : a) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite score");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite score");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  constexpr int points = KdeSettings::kGridPoints;
  const double data_lo = std::min(a.front(), b.front());
  const double data_hi = std::max(a.back(), b.back());
  const double scale = std::max({1.0, std::abs(data_lo), std::abs(data_hi)});
  const double floor_bw = std::max((data_hi - data_lo) / (points - 1), 1e-9 * scale);
  const double ha = std::max(silverman_bandwidth(a), floor_bw);
  const double hb = std::max(silverman_bandwidth(b), floor_bw);
  const double pooled = std::sqrt(0.5 * (ha * ha + hb * hb));

  const double lo = data_lo - KdeSettings::kPaddingBandwidths * pooled;
  const double hi = data_hi + KdeSettings::kPaddingBandwidths * pooled;
  const double step = (hi - lo) / (points - 1);

  const auto pa = kde_on_grid(a, ha, lo, step, points);
  const auto pb = kde_on_grid(b, hb, lo, step, points);
  double integral = 0.0;
  for (int g = 0; g + 1 < points; ++g) {
    const double m0 = std::min(pa[g], pb[g]);
    const double m1 = std::min(pa[g + 1], pb[g + 1]);
    integral += 0.5 * (m0 + m1) * step;
  }
  return std::clamp(integral, 0.0, 1.0);
}

}  // namespace aidx
