#pragma once

#include <string>

#include <json.hpp>

#include "hazard/models.hpp"
#include "hazard/step_function.hpp"

namespace hazard {

inline constexpr int kModelSchemaVersion = 1;

// Lossless JSON persistence: numbers round-trip bit-exactly, so a reloaded
// model scores identically to the fitted one.
nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& j);

void save_model(const AnyModel& model, const std::string& path);
AnyModel load_model(const std::string& path);

nlohmann::json step_to_json(const StepFunction& f);
StepFunction step_from_json(const nlohmann::json& j);

}  // namespace hazard
