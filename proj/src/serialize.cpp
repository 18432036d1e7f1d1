#include "lfdx/serialize.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace lfdx {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw SchemaError(std::string(what) + ": expected an object");
}

/// Config objects reject unknown keys so that typos do not silently fall back
/// to defaults.
void check_keys(const json& j, const char* what, std::initializer_list<std::string_view> allowed) {
  require_object(j, what);
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw SchemaError(std::string(what) + ": unknown field \"" + key + "\"");
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("field \"") + key + "\": " + e.what());
  }
}

template <class T>
T read_req(const json& j, const char* key) {
  require_object(j, key);
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("field \"") + key + "\": " + e.what());
  }
}

std::string read_name(const json& j, const char* key) { return read_req<std::string>(j, key); }

template <class F>
auto parse_or_schema(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace

void to_json(json& j, const Cell& c) { j = json::array({c.row, c.col}); }

void from_json(const json& j, Cell& c) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw SchemaError("cell: expected [row, col]");
  c = Cell{j[0].get<int>(), j[1].get<int>()};
}

void to_json(json& j, const GridSpec& g) {
  j = json{{"width", g.width},
           {"height", g.height},
           {"obstacles", g.obstacles},
           {"preferred_goal", g.preferred_goal},
           {"noise_prob", g.noise_prob}};
  j["non_preferred_goal"] = g.non_preferred_goal ? json(*g.non_preferred_goal) : json(nullptr);
}

void from_json(const json& j, GridSpec& g) {
  check_keys(j, "grid",
             {"width", "height", "obstacles", "preferred_goal", "non_preferred_goal", "noise_prob"});
  read_opt(j, "width", g.width);
  read_opt(j, "height", g.height);
  read_opt(j, "obstacles", g.obstacles);
  read_opt(j, "preferred_goal", g.preferred_goal);
  if (auto it = j.find("non_preferred_goal"); it != j.end()) {
    if (it->is_null())
      g.non_preferred_goal.reset();
    else
      g.non_preferred_goal = it->get<Cell>();
  }
  read_opt(j, "noise_prob", g.noise_prob);
  parse_or_schema([&] {
    g.validate();
    return 0;
  });
}

void to_json(json& j, const SessionConfig& c) {
  j = json{{"condition", to_string(c.condition)},
           {"demos_per_set", c.demos_per_set},
           {"k_explanations", c.k_explanations},
           {"predictions_per_subtask", c.predictions_per_subtask},
           {"performance_threshold", c.performance_threshold},
           {"max_demo_sets", c.max_demo_sets},
           {"budget_delta_range", json::array({c.budget_delta_min, c.budget_delta_max})},
           {"strict_budget", c.strict_budget},
           {"attempt_limit_factor", c.attempt_limit_factor},
           {"seed", c.seed}};
}

void from_json(const json& j, SessionConfig& c) {
  check_keys(j, "session",
             {"condition", "demos_per_set", "k_explanations", "predictions_per_subtask",
              "performance_threshold", "max_demo_sets", "budget_delta_range", "strict_budget",
              "attempt_limit_factor", "seed"});
  if (j.contains("condition"))
    c.condition = parse_or_schema([&] { return parse_condition(read_name(j, "condition")); });
  read_opt(j, "demos_per_set", c.demos_per_set);
  read_opt(j, "k_explanations", c.k_explanations);
  read_opt(j, "predictions_per_subtask", c.predictions_per_subtask);
  read_opt(j, "performance_threshold", c.performance_threshold);
  read_opt(j, "max_demo_sets", c.max_demo_sets);
  if (auto it = j.find("budget_delta_range"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw SchemaError("budget_delta_range: expected [min, max]");
    c.budget_delta_min = (*it)[0].get<int>();
    c.budget_delta_max = (*it)[1].get<int>();
  }
  read_opt(j, "strict_budget", c.strict_budget);
  read_opt(j, "attempt_limit_factor", c.attempt_limit_factor);
  read_opt(j, "seed", c.seed);
  parse_or_schema([&] {
    c.validate();
    return 0;
  });
}

void to_json(json& j, const IrlConfig& c) {
  j = json{{"method", c.method == IrlMethod::Lbfgs ? "lbfgs" : "gradient_ascent"},
           {"learning_rate", c.learning_rate},
           {"memory", c.memory},
           {"max_iters", c.max_iters},
           {"grad_tol", c.grad_tol},
           {"horizon", c.horizon},
           {"l2", c.l2}};
}

void from_json(const json& j, IrlConfig& c) {
  check_keys(j, "irl", {"method", "learning_rate", "memory", "max_iters", "grad_tol", "horizon", "l2"});
  if (j.contains("method")) {
    const std::string m = read_name(j, "method");
    if (m == "lbfgs")
      c.method = IrlMethod::Lbfgs;
    else if (m == "gradient_ascent")
      c.method = IrlMethod::GradientAscent;
    else
      throw SchemaError("irl.method: expected lbfgs or gradient_ascent");
  }
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "memory", c.memory);
  read_opt(j, "max_iters", c.max_iters);
  read_opt(j, "grad_tol", c.grad_tol);
  read_opt(j, "horizon", c.horizon);
  read_opt(j, "l2", c.l2);
  parse_or_schema([&] {
    c.validate();
    return 0;
  });
}

void to_json(json& j, const PlannerConfig& c) {
  j = json{{"gamma", c.gamma}, {"tol", c.tol}, {"max_sweeps", c.max_sweeps}};
}

void from_json(const json& j, PlannerConfig& c) {
  check_keys(j, "planner", {"gamma", "tol", "max_sweeps"});
  read_opt(j, "gamma", c.gamma);
  read_opt(j, "tol", c.tol);
  read_opt(j, "max_sweeps", c.max_sweeps);
  parse_or_schema([&] {
    c.validate();
    return 0;
  });
}

void to_json(json& j, const SessionSetup& s) {
  j = json{{"grid", s.grid}, {"session", s.session}, {"irl", s.irl}, {"planner", s.planner}};
}

void from_json(const json& j, SessionSetup& s) {
  check_keys(j, "setup", {"grid", "session", "irl", "planner"});
  read_opt(j, "grid", s.grid);
  read_opt(j, "session", s.session);
  read_opt(j, "irl", s.irl);
  read_opt(j, "planner", s.planner);
}

json action_json(Action a) { return std::string(to_string(a)); }

void to_json(json& j, const Demonstration& d) {
  j = json{{"states", d.states}, {"valid", d.valid}};
  j["actions"] = json::array();
  for (Action a : d.actions) j["actions"].push_back(action_json(a));
}

void to_json(json& j, const ExplanatoryTrajectory& t) {
  j = json{{"start", t.start}, {"states", t.states}, {"category", to_string(t.category)}};
  j["actions"] = json::array();
  for (Action a : t.actions) j["actions"].push_back(action_json(a));
  j["terminal"] = t.terminal ? json(*t.terminal) : json(nullptr);
  j["failure_reason"] = t.failure_reason ? json(to_string(*t.failure_reason)) : json(nullptr);
}

void to_json(json& j, const ExplanationSample& s) {
  j = json{{"trajectories", s.trajectories}, {"n_success", s.n_success}, {"n_failure", s.n_failure}};
}

json prediction_json(const PredictionValue& v) { return to_string(v); }

PredictionValue parse_prediction(PredictionKind kind, const json& j) {
  if (!j.is_string()) throw SchemaError("predicted: expected a string");
  const auto s = j.get<std::string>();
  return parse_or_schema([&]() -> PredictionValue {
    if (kind == PredictionKind::Action) return parse_action(s);
    return parse_goal_label(s);
  });
}

void to_json(json& j, const PredictionRecord& r) {
  j = json{{"kind", to_string(r.kind)},
           {"stage", to_string(r.stage)},
           {"probe", r.probe},
           {"predicted", prediction_json(r.predicted)},
           {"actual", prediction_json(r.actual)},
           {"correct", r.correct},
           {"certainty", r.certainty},
           {"elapsed", r.elapsed}};
}

void to_json(json& j, const SurveyResponse& s) { j = json{{"answers", s.answers}}; }

void from_json(const json& j, SurveyResponse& s) {
  check_keys(j, "survey", {"answers"});
  const auto answers = read_req<std::vector<int>>(j, "answers");
  if (answers.size() != s.answers.size()) throw SchemaError("survey: expected 4 answers");
  std::copy(answers.begin(), answers.end(), s.answers.begin());
  parse_or_schema([&] {
    s.validate();
    return 0;
  });
}

void to_json(json& j, const PredictionSummary& s) {
  j = json{{"correct", s.correct},
           {"count", s.count},
           {"mean_certainty", s.mean_certainty},
           {"total_time", s.total_time}};
}

void to_json(json& j, const MetricsReport& r) {
  j = json{{"schema_version", kSchemaVersion},
           {"seed", r.seed},
           {"condition", to_string(r.condition)},
           {"final_performance", r.final_performance},
           {"num_demonstrations", r.num_demonstrations},
           {"demo_sets", r.demo_sets},
           {"teaching_efficiency", r.teaching_efficiency},
           {"early_stage_efficiency", r.early_stage_efficiency},
           {"early_stage_truncated", r.early_stage_truncated},
           {"task_complete", r.task_complete},
           {"action_initial", r.action_initial},
           {"action_final", r.action_final},
           {"goal_initial", r.goal_initial},
           {"goal_final", r.goal_final},
           {"action_time_total", r.action_time_total},
           {"goal_time_total", r.goal_time_total},
           {"survey", r.survey}};
}

json event_json(const Event& e) {
  return std::visit(
      Overloaded{
          [](const DemoReset& r) { return json{{"type", "demo_reset"}, {"start", r.start}}; },
          [](const DemoStep& s) { return json{{"type", "demo_step"}, {"action", action_json(s.action)}}; },
          [](const SetComplete&) { return json{{"type", "set_complete"}}; },
          [](const ExplanationAck&) { return json{{"type", "explanation_ack"}}; },
          [](const PredictionSubmitted& p) {
            return json{{"type", "prediction_submitted"},
                        {"probe_index", p.probe_index},
                        {"predicted", prediction_json(p.predicted)},
                        {"certainty", p.certainty},
                        {"elapsed", p.elapsed}};
          },
          [](const SurveySubmitted& s) { return json{{"type", "survey_submitted"}, {"response", s.response}}; },
      },
      e);
}

Event parse_event(const json& j) {
  require_object(j, "event");
  const std::string type = read_name(j, "type");
  if (type == "demo_reset") return DemoReset{read_req<Cell>(j, "start")};
  if (type == "demo_step")
    return DemoStep{parse_or_schema([&] { return parse_action(read_name(j, "action")); })};
  if (type == "set_complete") return SetComplete{};
  if (type == "explanation_ack") return ExplanationAck{};
  if (type == "prediction_submitted") {
    PredictionSubmitted p;
    p.probe_index = read_req<int>(j, "probe_index");
    const auto predicted = read_name(j, "predicted");
    // The label sets are disjoint, so the value itself determines the kind.
    p.predicted = parse_or_schema([&]() -> PredictionValue {
      for (Action a : kActions) {
        if (predicted == to_string(a)) return a;
      }
      return parse_goal_label(predicted);
    });
    p.certainty = read_req<int>(j, "certainty");
    p.elapsed = read_req<double>(j, "elapsed");
    return p;
  }
  if (type == "survey_submitted") return SurveySubmitted{read_req<SurveyResponse>(j, "response")};
  throw SchemaError("unknown event type \"" + type + "\"");
}

ExperimentConfig parse_experiment_config(const json& j) {
  check_keys(j, "config",
             {"schema_version", "grid", "session", "irl", "planner", "strategy", "seeds", "threads"});
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion)
    throw SchemaError("config: unsupported schema_version");
  ExperimentConfig cfg;
  read_opt(j, "grid", cfg.setup.grid);
  read_opt(j, "session", cfg.setup.session);
  read_opt(j, "irl", cfg.setup.irl);
  read_opt(j, "planner", cfg.setup.planner);
  if (j.contains("strategy"))
    cfg.strategy = parse_or_schema([&] { return parse_strategy(read_name(j, "strategy")); });
  if (j.contains("seeds")) cfg.seeds = read_req<int>(j, "seeds");
  read_opt(j, "threads", cfg.threads);
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return parse_experiment_config(j);
}

}  // namespace lfdx
