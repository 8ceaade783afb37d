#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aindex/index.hpp"
#include "aindex/json.hpp"

namespace aidx {

inline constexpr int kFrameInterval = 30;
inline constexpr int kDefaultFrameSamples = 8;

struct FramePlan {
  int total_frames = 0;
  int sample_count = kDefaultFrameSamples;
  std::vector<int> indices;
};

// One frame every 30 when the video is long enough (total >= 30 * count);
// otherwise round(i (total - 1) / (count - 1)) for i = 0..count-1, deduplicated.
FramePlan plan_frames(int total_frames, int sample_count = kDefaultFrameSamples);

// Arithmetic mean of the per-frame A-index values.
double video_a_index(std::span<const double> frame_scores);

// Pre-extracted frames of one video. inverted_frames, when present, parallels
// frames and supplies external inversions.
struct VideoRecord {
  std::string video_id;
  std::vector<std::string> frames;
  std::optional<std::vector<std::string>> inverted_frames;
  Label label = Label::Real;
  ordered_json extra = ordered_json::object();
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
};

// JSON-Lines: {"id", "frames": [...], "label", "inverted_frames"?: [...]}.
std::vector<VideoRecord> load_video_manifest(const std::filesystem::path& path);

}  // namespace aidx
