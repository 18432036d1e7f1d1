#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "lfdx/explainer.hpp"
#include "lfdx/metrics.hpp"
#include "lfdx/protocol.hpp"
#include "lfdx/simteacher.hpp"

namespace lfdx {

using nlohmann::json;

/// Version stamped on every persisted or served document.
inline constexpr int kSchemaVersion = 1;

/// Malformed document: wrong types, unknown names, missing fields.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cells are [row, col] pairs; enums are their names.
void to_json(json& j, const Cell& c);
void from_json(const json& j, Cell& c);
void to_json(json& j, const GridSpec& g);
void from_json(const json& j, GridSpec& g);
void to_json(json& j, const SessionConfig& c);
void from_json(const json& j, SessionConfig& c);
void to_json(json& j, const IrlConfig& c);
void from_json(const json& j, IrlConfig& c);
void to_json(json& j, const PlannerConfig& c);
void from_json(const json& j, PlannerConfig& c);
void to_json(json& j, const SessionSetup& s);
void from_json(const json& j, SessionSetup& s);
void to_json(json& j, const Demonstration& d);
void to_json(json& j, const ExplanatoryTrajectory& t);
void to_json(json& j, const ExplanationSample& s);
void to_json(json& j, const PredictionRecord& r);
void to_json(json& j, const SurveyResponse& s);
void from_json(const json& j, SurveyResponse& s);
void to_json(json& j, const PredictionSummary& s);
void to_json(json& j, const MetricsReport& r);

json action_json(Action a);
json prediction_json(const PredictionValue& v);
/// Parses "Up".."Right" for action probes and "Preferred" / "NonPreferred" /
/// "NoGoal" for goal probes.
PredictionValue parse_prediction(PredictionKind kind, const json& j);

/// Events carry a "type" discriminator: demo_reset, demo_step, set_complete,
/// explanation_ack, prediction_submitted, survey_submitted (see event_name).
json event_json(const Event& e);
Event parse_event(const json& j);

/// Headless experiment description. Every field is optional in the file;
/// absent ones keep the library defaults.
struct ExperimentConfig {
  SessionSetup setup;
  std::optional<TeacherStrategy> strategy;
  std::optional<int> seeds;
  int threads = 0;
};

ExperimentConfig parse_experiment_config(const json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Reads a whole text file; throws std::runtime_error when unreadable.
std::string read_file(const std::filesystem::path& path);

}  // namespace lfdx
