#include "app/json_io.hpp"

#include "flim/errors.hpp"

namespace flim::app {

Json metrics_to_json(const Metrics& m) {
  return Json{{"precision", m.precision},
              {"recall", m.recall},
              {"f_score", m.f_score},
              {"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn},
              {"tn", m.tn},
              {"precision_undefined", m.precision_undefined},
              {"recall_undefined", m.recall_undefined},
              {"f_score_undefined", m.f_score_undefined}};
}

Metrics metrics_from_json(const Json& j) {
  Metrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f_score = j.at("f_score").get<double>();
  m.tp = j.at("tp").get<std::size_t>();
  m.fp = j.at("fp").get<std::size_t>();
  m.fn = j.at("fn").get<std::size_t>();
  m.tn = j.at("tn").get<std::size_t>();
  m.precision_undefined = j.at("precision_undefined").get<bool>();
  m.recall_undefined = j.at("recall_undefined").get<bool>();
  m.f_score_undefined = j.at("f_score_undefined").get<bool>();
  return m;
}

Json macro_to_json(const MacroMetrics& m) {
  return Json{{"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score}, {"accuracy", m.accuracy}};
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace flim::app
