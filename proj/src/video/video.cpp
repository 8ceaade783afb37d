#include "aindex/video.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "aindex/error.hpp"

namespace aidx {

FramePlan plan_frames(int total_frames, int sample_count) {
  if (total_frames < 1) throw Error(ErrorCode::InvalidArgument, "total_frames must be >= 1");
  if (sample_count < 1) throw Error(ErrorCode::InvalidArgument, "sample_count must be >= 1");
  FramePlan plan;
  plan.total_frames = total_frames;
  plan.sample_count = sample_count;
  if (static_cast<long long>(total_frames) >= static_cast<long long>(kFrameInterval) * sample_count) {
    for (int i = 0; i < sample_count; ++i) plan.indices.push_back(kFrameInterval * i);
    return plan;
  }
  if (sample_count == 1) {
    plan.indices.push_back(0);
    return plan;
  }
  for (int i = 0; i < sample_count; ++i) {
    const int idx = static_cast<int>(
        std::lround(static_cast<double>(i) * (total_frames - 1) / (sample_count - 1)));
    if (plan.indices.empty() || plan.indices.back() != idx) plan.indices.push_back(idx);
  }
  return plan;
}

double video_a_index(std::span<const double> frame_scores) {
  if (frame_scores.empty()) throw Error(ErrorCode::EmptyInput, "video has no frame scores");
  return std::accumulate(frame_scores.begin(), frame_scores.end(), 0.0) /
         static_cast<double>(frame_scores.size());
}

std::filesystem::path VideoRecord::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

namespace {

std::vector<std::string> string_list(const ordered_json& obj, const char* key,
                                     const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw Error(ErrorCode::SchemaError, where + ": field \"" + key + "\" must be an array of paths");
  }
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw Error(ErrorCode::SchemaError, where + ": field \"" + key + "\" must hold strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<VideoRecord> load_video_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<VideoRecord> out;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line);
    ordered_json obj;
    try {
      obj = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::ParseError, where + ": expected a JSON object");
    if (obj.contains("_header")) continue;

    VideoRecord rec;
    rec.base_dir = path.parent_path();
    auto id = obj.find("id");
    if (id == obj.end() || !id->is_string()) {
      throw Error(ErrorCode::SchemaError, where + ": field \"id\" is missing");
    }
    rec.video_id = id->get<std::string>();
    rec.frames = string_list(obj, "frames", where);
    if (rec.frames.empty()) throw Error(ErrorCode::SchemaError, where + ": \"frames\" is empty");
    if (obj.contains("inverted_frames")) {
      rec.inverted_frames = string_list(obj, "inverted_frames", where);
      if (rec.inverted_frames->size() != rec.frames.size()) {
        throw Error(ErrorCode::SchemaError,
                    where + ": \"inverted_frames\" must parallel \"frames\"");
      }
    }
    auto label = obj.find("label");
    if (label == obj.end() || !label->is_string()) {
      throw Error(ErrorCode::SchemaError, where + ": field \"label\" is missing");
    }
    rec.label = parse_label(label->get<std::string>());
    for (const auto& [key, value] : obj.items()) {
      if (key != "id" && key != "frames" && key != "inverted_frames" && key != "label") {
        rec.extra[key] = value;
      }
    }
    if (!seen.insert(rec.video_id).second) {
      throw Error(ErrorCode::DuplicateId, where + ": id \"" + rec.video_id + "\" already used");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace aidx
