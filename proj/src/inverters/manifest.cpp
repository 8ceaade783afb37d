#include "aindex/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "aindex/error.hpp"

namespace aidx {

std::filesystem::path PairRecord::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

namespace {

constexpr const char* kPrecomputedKeys[] = {"psnr", "ssim", "lpips", "clip"};

[[noreturn]] void schema_error(const std::string& source, std::size_t line, const std::string& field,
                               const std::string& what) {
  throw Error(ErrorCode::SchemaError,
              source + ":" + std::to_string(line) + ": field \"" + field + "\" " + what);
}

std::string required_string(const ordered_json& obj, const char* key, const std::string& source,
                            std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(source, line, key, "is missing");
  if (!it->is_string()) schema_error(source, line, key, "must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const ordered_json& obj, const char* key,
                                           const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(source, line, key, "must be a string");
  return it->get<std::string>();
}

PartialMetrics parse_precomputed(const ordered_json& obj, const std::string& source,
                                 std::size_t line) {
  PartialMetrics m;
  if (!obj.is_object()) schema_error(source, line, "precomputed", "must be an object");
  for (const auto& [key, value] : obj.items()) {
    std::optional<double>* slot = nullptr;
    if (key == "psnr") slot = &m.psnr;
    if (key == "ssim") slot = &m.ssim;
    if (key == "lpips") slot = &m.lpips;
    if (key == "clip") slot = &m.clip;
    if (slot == nullptr) schema_error(source, line, "precomputed." + key, "is not a known channel");
    if (value.is_null()) continue;
    if (!value.is_number()) schema_error(source, line, "precomputed." + key, "must be a number");
    *slot = value.get<double>();
  }
  if (m.lpips && *m.lpips < 0.0) schema_error(source, line, "precomputed.lpips", "must be >= 0");
  if (m.clip && (*m.clip < -1.0 || *m.clip > 1.0)) {
    schema_error(source, line, "precomputed.clip", "must be in [-1, 1]");
  }
  return m;
}

PairRecord parse_record(const ordered_json& obj, const std::filesystem::path& base_dir,
                        const std::string& source, std::size_t line) {
  PairRecord rec;
  rec.base_dir = base_dir;
  rec.record_id = required_string(obj, "id", source, line);
  rec.original = required_string(obj, "original", source, line);
  rec.inverted = optional_string(obj, "inverted", source, line);
  const std::string label = required_string(obj, "label", source, line);
  if (label != "real" && label != "fake") schema_error(source, line, "label", "must be real|fake");
  rec.label = parse_label(label);
  rec.generator = required_string(obj, "generator", source, line);
  rec.caption = optional_string(obj, "caption", source, line);
  if (auto it = obj.find("precomputed"); it != obj.end() && !it->is_null()) {
    rec.precomputed = parse_precomputed(*it, source, line);
  }
  static const std::set<std::string> known = {"id",        "original", "inverted",   "label",
                                              "generator", "caption",  "precomputed"};
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) rec.extra[key] = value;
  }
  return rec;
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                        const std::string& source_name) {
  Manifest manifest;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError,
                  source_name + ":" + std::to_string(line) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::ParseError, source_name + ":" + std::to_string(line) +
                                             ": each line must be a JSON object");
    }
    if (obj.contains("_header")) {
      if (!manifest.records.empty() || manifest.header) {
        schema_error(source_name, line, "_header", "must be the first line");
      }
      manifest.header = obj;
      continue;
    }
    PairRecord rec = parse_record(obj, base_dir, source_name, line);
    if (!seen.insert(rec.record_id).second) {
      throw Error(ErrorCode::DuplicateId, source_name + ":" + std::to_string(line) + ": id \"" +
                                              rec.record_id + "\" already used");
    }
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return parse_manifest(in, path.parent_path(), path.string());
}

ordered_json record_to_json(const PairRecord& rec) {
  ordered_json obj = ordered_json::object();
  obj["id"] = rec.record_id;
  obj["original"] = rec.original;
  if (rec.inverted) obj["inverted"] = *rec.inverted;
  obj["label"] = std::string(to_string(rec.label));
  obj["generator"] = rec.generator;
  if (rec.caption) obj["caption"] = *rec.caption;
  if (rec.precomputed.any()) {
    ordered_json pre = ordered_json::object();
    const std::optional<double>* slots[] = {&rec.precomputed.psnr, &rec.precomputed.ssim,
                                            &rec.precomputed.lpips, &rec.precomputed.clip};
    for (int i = 0; i < 4; ++i) {
      if (*slots[i]) pre[kPrecomputedKeys[i]] = **slots[i];
    }
    obj["precomputed"] = std::move(pre);
  }
  for (const auto& [key, value] : rec.extra.items()) obj[key] = value;
  return obj;
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
  if (manifest.header) out << manifest.header->dump() << '\n';
  for (const auto& rec : manifest.records) out << record_to_json(rec).dump() << '\n';
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, path.string());
  write_manifest(manifest, out);
}

}  // namespace aidx
