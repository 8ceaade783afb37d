#pragma once

// Vendored nlohmann/json; ordered_json keeps key order for byte-stable output.
#include <json.hpp>

namespace aidx {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

}  // namespace aidx
