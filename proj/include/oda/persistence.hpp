#pragma once

#include <filesystem>
#include <variant>

#include "json.hpp"
#include "oda/annealing.hpp"
#include "oda/baselines.hpp"

namespace oda {

// Model documents are JSON objects with a `format_version` field and a
// `model_type` of "oda" or "baseline". Doubles are written in shortest
// round-trip form, so save/load is value-exact.

nlohmann::json config_to_json(const OdaConfig& config);
/// Reads a complete config document (every field present).
OdaConfig config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const OdaModel& model);
OdaModel oda_model_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const BaselineModel& model);
BaselineModel baseline_model_from_json(const nlohmann::json& j);

using AnyModel = std::variant<OdaModel, BaselineModel>;

AnyModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const OdaModel& model);
void save_model(const std::filesystem::path& path, const BaselineModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace oda
