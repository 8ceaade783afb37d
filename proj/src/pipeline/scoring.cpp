#include <algorithm>
#include <atomic>
#include <thread>

#include "aindex/error.hpp"
#include "aindex/image.hpp"
#include "aindex/pipeline.hpp"

namespace aidx {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

MetricVector record_metrics(const PairRecord& rec, const ScoringSetup& setup,
                            std::vector<std::string>* warnings) {
  if (rec.precomputed.complete()) {
    return {*rec.precomputed.psnr, *rec.precomputed.ssim, *rec.precomputed.lpips,
            *rec.precomputed.clip};
  }
  const ImageBuffer x = load_image(rec.original_path());
  ImageBuffer x_inv;
  if (auto inv_path = rec.inverted_path()) {
    x_inv = load_image(*inv_path);
    if (setup.inverter && warnings) {
      warnings->push_back(rec.record_id + ": inverted file used instead of the live inverter");
    }
    if (!x_inv.same_shape(x) && warnings) {
      warnings->push_back(rec.record_id + ": inverted image resampled to the original's shape");
    }
  } else if (setup.inverter) {
    x_inv = setup.inverter->invert(x);
  } else {
    throw Error(ErrorCode::ProviderUnavailable,
                "record \"" + rec.record_id + "\" has no inverted image and no live inverter");
  }
  return metric_vector(x, x_inv, setup.providers, rec.precomputed);
}

ScoreSample score_record(const PairRecord& rec, const ScoringSetup& setup,
                         std::vector<std::string>* warnings) {
  return make_score_sample(rec.record_id, rec.label, rec.generator,
                           record_metrics(rec, setup, warnings), setup.weights);
}

}  // namespace aidx
