#include <fstream>

#include "aindex/error.hpp"
#include "aindex/pipeline.hpp"

namespace aidx {

namespace {

constexpr const char* kWeightsSchema = "aindex.weights";
constexpr const char* kThresholdsSchema = "aindex.thresholds";
constexpr const char* kCalibrationSchema = "aindex.calibration";

ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const ordered_json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

double number_field(const ordered_json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::SchemaError, where + ": field \"" + key + "\" must be a number");
  }
  return it->get<double>();
}

std::string schema_of(const ordered_json& j) {
  auto it = j.find("schema");
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

ordered_json samples_to_json(const std::vector<ScoreSample>& samples) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : samples) {
    ordered_json j;
    j["id"] = s.record_id;
    j["label"] = std::string(to_string(s.label));
    j["generator"] = s.generator;
    j["metrics"] = {s.metrics.psnr, s.metrics.ssim, s.metrics.lpips, s.metrics.clip_sim};
    j["composite"] = s.composite;
    j["a_index"] = s.a_index;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ScoreSample> samples_from_json(const ordered_json& arr, const std::string& where) {
  std::vector<ScoreSample> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) throw Error(ErrorCode::SchemaError, where + ": expected an array");
  for (const auto& j : arr) {
    ScoreSample s;
    s.record_id = j.at("id").get<std::string>();
    s.label = parse_label(j.at("label").get<std::string>());
    s.generator = j.value("generator", std::string());
    const auto& m = j.at("metrics");
    if (!m.is_array() || m.size() != 4) {
      throw Error(ErrorCode::SchemaError, where + ": \"metrics\" needs 4 numbers");
    }
    s.metrics = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>(), m[3].get<double>()};
    s.composite = j.at("composite").get<double>();
    s.a_index = j.at("a_index").get<double>();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ordered_json weights_to_json(const WeightVector& w) {
  ordered_json j;
  j["schema"] = kWeightsSchema;
  j["version"] = 1;
  j["alpha1"] = w.alpha1;
  j["alpha2"] = w.alpha2;
  j["alpha3"] = w.alpha3;
  j["alpha4"] = w.alpha4;
  j["sigma"] = w.sigma;
  return j;
}

WeightVector weights_from_json(const ordered_json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "weights: expected an object");
  const ordered_json* src = &j;
  if (schema_of(j) == kCalibrationSchema) {
    auto it = j.find("weights");
    if (it == j.end()) throw Error(ErrorCode::SchemaError, "calibration: \"weights\" is missing");
    src = &*it;
  }
  WeightVector w;
  w.alpha1 = number_field(*src, "alpha1", "weights");
  w.alpha2 = number_field(*src, "alpha2", "weights");
  w.alpha3 = number_field(*src, "alpha3", "weights");
  w.alpha4 = number_field(*src, "alpha4", "weights");
  w.sigma = number_field(*src, "sigma", "weights");
  w.validate();
  return w;
}

WeightVector load_weights(const std::filesystem::path& path) {
  try {
    return weights_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

ThresholdRegistry load_thresholds(const std::filesystem::path& path) {
  const ordered_json j = read_json_file(path);
  const std::string where = path.string();
  ThresholdRegistry reg;
  if (schema_of(j) == kCalibrationSchema) {
    ThresholdEntry e;
    e.tau_safety = number_field(j, "tau_safety", where);
    if (j.contains("tau_security") && !j["tau_security"].is_null()) {
      e.tau_security = number_field(j, "tau_security", where);
    }
    reg[j.value("generator", std::string())] = e;
    return reg;
  }
  if (schema_of(j) != kThresholdsSchema) {
    throw Error(ErrorCode::SchemaError, where + ": not a threshold registry or calibration file");
  }
  auto entries = j.find("entries");
  if (entries == j.end() || !entries->is_object()) {
    throw Error(ErrorCode::SchemaError, where + ": \"entries\" must be an object");
  }
  for (const auto& [tag, value] : entries->items()) {
    const std::string at = where + ": entry \"" + tag + "\"";
    ThresholdEntry e;
    e.tau_safety = number_field(value, "tau_safety", at);
    if (value.contains("tau_security") && !value["tau_security"].is_null()) {
      e.tau_security = number_field(value, "tau_security", at);
    }
    reg[tag] = e;
  }
  return reg;
}

ordered_json thresholds_to_json(const ThresholdRegistry& registry) {
  ordered_json j;
  j["schema"] = kThresholdsSchema;
  j["version"] = 1;
  ordered_json entries = ordered_json::object();
  for (const auto& [tag, e] : registry) {
    ordered_json ej;
    ej["tau_safety"] = e.tau_safety;
    ej["tau_security"] = e.tau_security ? ordered_json(*e.tau_security) : ordered_json(nullptr);
    entries[tag] = std::move(ej);
  }
  j["entries"] = std::move(entries);
  return j;
}

void save_thresholds(const ThresholdRegistry& registry, const std::filesystem::path& path) {
  write_json_file(thresholds_to_json(registry), path);
}

ThresholdEntry select_threshold(const ThresholdRegistry& registry, const std::string& tag) {
  if (tag.empty()) {
    if (registry.size() != 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "threshold registry has " + std::to_string(registry.size()) +
                      " entries; name a generator tag");
    }
    return registry.begin()->second;
  }
  auto it = registry.find(tag);
  if (it == registry.end()) {
    throw Error(ErrorCode::InvalidArgument, "no threshold for generator \"" + tag + "\"");
  }
  return it->second;
}

ordered_json calibration_to_json(const CalibrationResult& r) {
  ordered_json j;
  j["schema"] = kCalibrationSchema;
  j["version"] = 1;
  j["generator"] = r.generator_tag;
  ordered_json w = weights_to_json(r.weights);
  w.erase("schema");
  w.erase("version");
  j["weights"] = std::move(w);
  j["overlap"] = r.overlap;
  j["fpr_target"] = r.fpr_target;
  j["tau_safety"] = r.tau_safety;
  j["tau_security"] = r.tau_security ? ordered_json(*r.tau_security) : ordered_json(nullptr);
  ordered_json de;
  de["population"] = r.de_config.population;
  de["mutation_f"] = r.de_config.mutation_f;
  de["crossover_cr"] = r.de_config.crossover_cr;
  de["max_iterations"] = r.de_config.max_iterations;
  de["bounds"] = r.de_config.bounds;
  de["tolerance"] = r.de_config.tolerance;
  de["rng_seed"] = r.de_config.rng_seed;
  j["de"] = std::move(de);
  j["de_generations"] = r.de_generations;
  ordered_json scores;
  scores["real"] = samples_to_json(r.real_scores);
  scores["fake"] = samples_to_json(r.fake_scores);
  scores["attacked_fake"] = samples_to_json(r.attacked_fake_scores);
  j["scores"] = std::move(scores);
  return j;
}

CalibrationResult calibration_from_json(const ordered_json& j) {
  if (schema_of(j) != kCalibrationSchema) {
    throw Error(ErrorCode::SchemaError, "not a calibration document");
  }
  try {
    CalibrationResult r;
    r.generator_tag = j.value("generator", std::string());
    r.weights = weights_from_json(j);
    r.overlap = j.at("overlap").get<double>();
    r.fpr_target = j.at("fpr_target").get<double>();
    r.tau_safety = j.at("tau_safety").get<double>();
    if (!j.at("tau_security").is_null()) r.tau_security = j["tau_security"].get<double>();
    const auto& de = j.at("de");
    r.de_config.population = de.at("population").get<int>();
    r.de_config.mutation_f = de.at("mutation_f").get<double>();
    r.de_config.crossover_cr = de.at("crossover_cr").get<double>();
    r.de_config.max_iterations = de.at("max_iterations").get<int>();
    r.de_config.bounds = de.at("bounds").get<decltype(r.de_config.bounds)>();
    r.de_config.tolerance = de.at("tolerance").get<double>();
    r.de_config.rng_seed = de.at("rng_seed").get<std::uint64_t>();
    r.de_generations = j.at("de_generations").get<int>();
    const auto& scores = j.at("scores");
    r.real_scores = samples_from_json(scores.value("real", ordered_json()), "scores.real");
    r.fake_scores = samples_from_json(scores.value("fake", ordered_json()), "scores.fake");
    r.attacked_fake_scores =
        samples_from_json(scores.value("attacked_fake", ordered_json()), "scores.attacked_fake");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("calibration: ") + e.what());
  }
}

}  // namespace aidx
