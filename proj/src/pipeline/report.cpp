#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aindex/error.hpp"
#include "aindex/pipeline.hpp"

namespace aidx {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

double auc_rank_sum(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) {
    throw Error(ErrorCode::InsufficientSamples, "AUC needs at least one score per class");
  }
  // Average ranks over the pooled sample, ties share their mean rank.
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(real_scores.size() + fake_scores.size());
  for (double s : real_scores) pooled.emplace_back(s, 1);
  for (double s : fake_scores) pooled.emplace_back(s, 0);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_real = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 1) rank_sum_real += mean_rank;
    }
    i = j;
  }
  const double n_real = static_cast<double>(real_scores.size());
  const double n_fake = static_cast<double>(fake_scores.size());
  return (rank_sum_real - n_real * (n_real + 1.0) / 2.0) / (n_real * n_fake);
}

Summary summarize(std::span<const ScoreSample> samples, std::optional<double> tau) {
  Summary s;
  s.tau = tau;
  std::vector<double> real, fake;
  for (const auto& sample : samples) {
    const bool is_real = sample.label == Label::Real;
    ClassCounts& counts = is_real ? s.real : s.fake;
    ++counts.total;
    (is_real ? real : fake).push_back(sample.a_index);
    if (tau) {
      if (classify(sample.a_index, *tau) == Decision::Authentic) {
        ++counts.authentic;
      } else {
        ++counts.plausibly_deniable;
      }
    }
  }
  if (!real.empty() && !fake.empty()) s.auc = auc_rank_sum(real, fake);
  if (!tau) return s;

  const std::size_t total = s.real.total + s.fake.total;
  if (total > 0) s.accuracy = ratio(s.real.authentic + s.fake.plausibly_deniable, total);
  const std::size_t predicted_real = s.real.authentic + s.fake.authentic;
  if (predicted_real > 0) s.precision = ratio(s.real.authentic, predicted_real);
  if (s.real.total > 0) s.recall = ratio(s.real.authentic, s.real.total);
  if (s.precision && s.recall) {
    const double denom = *s.precision + *s.recall;
    s.f1 = denom > 0.0 ? 2.0 * *s.precision * *s.recall / denom : 0.0;
  }
  return s;
}

Histogram histogram(std::span<const ScoreSample> samples) {
  Histogram h;
  for (const auto& sample : samples) {
    const double a = std::clamp(sample.a_index, 0.0, 1.0);
    const int bin = std::min(Histogram::kBins - 1, static_cast<int>(a * Histogram::kBins));
    ++(sample.label == Label::Real ? h.real : h.fake)[static_cast<std::size_t>(bin)];
  }
  return h;
}

std::optional<double> AttackTally::success_rate() const {
  if (correct_before == 0) return std::nullopt;
  return ratio(flipped, correct_before);
}

void finalize_report(RunReport& report) {
  std::sort(report.scores.begin(), report.scores.end(),
            [](const ScoreSample& a, const ScoreSample& b) { return a.record_id < b.record_id; });
  std::sort(report.errors.begin(), report.errors.end(),
            [](const RecordError& a, const RecordError& b) { return a.record_id < b.record_id; });
  report.summary = summarize(report.scores, report.tau);
  report.hist = histogram(report.scores);
  report.run_id = hex64(fnv1a(report.command + "\n" + report.config.dump()));
}

ordered_json summary_to_json(const Summary& s) {
  auto counts = [](const ClassCounts& c) {
    ordered_json j;
    j["total"] = c.total;
    j["authentic"] = c.authentic;
    j["plausibly_deniable"] = c.plausibly_deniable;
    return j;
  };
  ordered_json j;
  j["tau"] = optional_number(s.tau);
  j["real"] = counts(s.real);
  j["fake"] = counts(s.fake);
  j["accuracy"] = optional_number(s.accuracy);
  j["precision"] = optional_number(s.precision);
  j["recall"] = optional_number(s.recall);
  j["f1"] = optional_number(s.f1);
  j["auc"] = optional_number(s.auc);
  return j;
}

ordered_json attack_summary_to_json(const AttackSummary& s) {
  auto tally = [](const AttackTally& t) {
    ordered_json j;
    j["total"] = t.total;
    j["correct_before"] = t.correct_before;
    j["correct_after"] = t.correct_after;
    j["flipped"] = t.flipped;
    j["success_rate"] = optional_number(t.success_rate());
    return j;
  };
  ordered_json j;
  j["real"] = tally(s.real);
  j["fake"] = tally(s.fake);
  j["accuracy_before"] = optional_number(s.accuracy_before);
  j["accuracy_after"] = optional_number(s.accuracy_after);
  return j;
}

namespace {

ordered_json sample_to_json(const ScoreSample& s, std::optional<double> tau) {
  ordered_json j;
  j["id"] = s.record_id;
  j["label"] = std::string(to_string(s.label));
  j["generator"] = s.generator;
  j["psnr"] = s.metrics.psnr;
  j["ssim"] = s.metrics.ssim;
  j["lpips"] = s.metrics.lpips;
  j["clip"] = s.metrics.clip_sim;
  j["composite"] = s.composite;
  j["a_index"] = s.a_index;
  j["decision"] = tau ? ordered_json(std::string(to_string(classify(s.a_index, *tau))))
                      : ordered_json(nullptr);
  return j;
}

}  // namespace

ordered_json report_to_json(const RunReport& report) {
  ordered_json j;
  j["schema"] = "aindex.run_report";
  j["version"] = 1;
  j["run_id"] = report.run_id;
  j["command"] = report.command;
  j["config"] = report.config;
  j["metadata"] = report.metadata;
  j["summary"] = summary_to_json(report.summary);
  ordered_json hist;
  hist["bins"] = Histogram::kBins;
  hist["range"] = {0.0, 1.0};
  hist["real"] = report.hist.real;
  hist["fake"] = report.hist.fake;
  j["histogram"] = std::move(hist);
  ordered_json rows = ordered_json::array();
  for (const auto& s : report.scores) rows.push_back(sample_to_json(s, report.tau));
  j["records"] = std::move(rows);
  ordered_json errors = ordered_json::array();
  for (const auto& e : report.errors) {
    ordered_json ej;
    ej["id"] = e.record_id;
    ej["code"] = std::string(to_string(e.code));
    ej["message"] = e.message;
    errors.push_back(std::move(ej));
  }
  j["errors"] = std::move(errors);
  j["warnings"] = report.warnings;
  j["details"] = report.details;
  return j;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << report_to_json(report).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

// --- CSV ----------------------------------------------------------------------

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr const char* kCsvHeader = "id,label,generator,psnr,ssim,lpips,clip,composite,a_index,decision";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, where + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, where + ": not a number: \"" + text + "\"");
  }
  return v;
}

}  // namespace

void write_score_table(std::span<const ScoreSample> samples, std::optional<double> tau,
                       std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& s : samples) {
    out << csv_field(s.record_id) << ',' << to_string(s.label) << ',' << csv_field(s.generator)
        << ',' << format_number(s.metrics.psnr) << ',' << format_number(s.metrics.ssim) << ','
        << format_number(s.metrics.lpips) << ',' << format_number(s.metrics.clip_sim) << ','
        << format_number(s.composite) << ',' << format_number(s.a_index) << ',';
    if (tau) out << to_string(classify(s.a_index, *tau));
    out << '\n';
  }
}

void write_score_table(std::span<const ScoreSample> samples, std::optional<double> tau,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_score_table(samples, tau, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<ScoreSample> read_score_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw Error(ErrorCode::SchemaError, path.string() + ":1: unexpected header");
  }
  std::vector<ScoreSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line, where);
    if (f.size() != 10) throw Error(ErrorCode::SchemaError, where + ": expected 10 fields");
    ScoreSample s;
    s.record_id = f[0];
    s.label = parse_label(f[1]);
    s.generator = f[2];
    s.metrics = {parse_number(f[3], where), parse_number(f[4], where), parse_number(f[5], where),
                 parse_number(f[6], where)};
    s.composite = parse_number(f[7], where);
    s.a_index = parse_number(f[8], where);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace aidx
