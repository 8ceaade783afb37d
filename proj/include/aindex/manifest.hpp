#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aindex/index.hpp"
#include "aindex/json.hpp"
#include "aindex/metrics.hpp"

namespace aidx {

// One (original, inverted) pair. Paths are kept as written; resolve() joins
// them with the manifest directory.
struct PairRecord {
  std::string record_id;
  std::string original;
  std::optional<std::string> inverted;
  Label label = Label::Real;
  std::string generator;
  std::optional<std::string> caption;
  PartialMetrics precomputed;
  // Fields outside schema v1, kept in input order for round-trip.
  ordered_json extra = ordered_json::object();
  std::filesystem::path base_dir;

  std::filesystem::path original_path() const { return resolve(original); }
  std::optional<std::filesystem::path> inverted_path() const {
    if (!inverted) return std::nullopt;
    return resolve(*inverted);
  }
  std::filesystem::path resolve(const std::string& p) const;
};

struct Manifest {
  // The adapter's {"_header": {...}} line, if any.
  std::optional<ordered_json> header;
  std::vector<PairRecord> records;
};

// JSON-Lines, schema v1. Blank lines are skipped.
// Errors: ParseError / SchemaError (with line number), DuplicateId.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                        const std::string& source_name);

// Canonical form: compact JSON, schema keys in fixed order, extras after.
ordered_json record_to_json(const PairRecord& rec);
void write_manifest(const Manifest& manifest, std::ostream& out);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace aidx
