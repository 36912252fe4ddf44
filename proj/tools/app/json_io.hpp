#pragma once

#include <nlohmann/json.hpp>

#include "flim/metrics.hpp"
#include "flim/tsne.hpp"

namespace flim::app {

using Json = nlohmann::ordered_json;

Json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const Json& j);
Json macro_to_json(const MacroMetrics& m);

/// Parses a request or file body; throws ValidationError on malformed JSON.
Json parse_json(std::string_view text, std::string_view what);

/// Reads a required field of the given JSON type or throws ValidationError.
const Json& require(const Json& j, const char* key);

}  // namespace flim::app
