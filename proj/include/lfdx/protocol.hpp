#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lfdx/demonstration.hpp"
#include "lfdx/explainer.hpp"
#include "lfdx/gridworld.hpp"
#include "lfdx/irl.hpp"
#include "lfdx/planner.hpp"
#include "lfdx/rng.hpp"

namespace lfdx {

enum class Condition { EF, NF };
enum class Phase { Practice, Demonstrating, Explaining, ActionPredicting, GoalPredicting, Survey, Done };
enum class Stage { Initial, Final };
enum class PredictionKind { Action, Goal };
enum class GoalLabel { Preferred, NonPreferred, NoGoal };

std::string_view to_string(Condition c);
std::string_view to_string(Phase p);
std::string_view to_string(Stage s);
std::string_view to_string(PredictionKind k);
std::string_view to_string(GoalLabel g);
Condition parse_condition(std::string_view s);
Phase parse_phase(std::string_view s);
Stage parse_stage(std::string_view s);
PredictionKind parse_prediction_kind(std::string_view s);
GoalLabel parse_goal_label(std::string_view s);

struct SessionConfig {
  Condition condition = Condition::EF;
  int demos_per_set = 5;
  int k_explanations = 5;
  int predictions_per_subtask = 5;
  double performance_threshold = 0.95;
  int max_demo_sets = 10;
  int budget_delta_min = -3;
  int budget_delta_max = 3;
  /// Hard-stop a demonstration once the budget is spent. Otherwise the budget
  /// is advisory and an attempt is only abandoned after
  /// attempt_limit_factor * budget actions.
  bool strict_budget = false;
  int attempt_limit_factor = 4;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SessionConfig&) const = default;
};

/// Everything that determines a session besides its event stream.
struct SessionSetup {
  GridSpec grid = default_study_grid();
  SessionConfig session;
  IrlConfig irl;
  PlannerConfig planner;
};

using PredictionValue = std::variant<Action, GoalLabel>;

std::string to_string(const PredictionValue& v);

struct PredictionRecord {
  PredictionKind kind = PredictionKind::Action;
  Cell probe;
  PredictionValue predicted;
  PredictionValue actual;
  bool correct = false;
  int certainty = 4;
  double elapsed = 0.0;
  Stage stage = Stage::Initial;

  bool operator==(const PredictionRecord&) const = default;
};

/// Post-task questionnaire, 1-7 each: robot satisfaction, understanding
/// perception, teaching perception, mental demand (reverse scaled).
struct SurveyResponse {
  std::array<int, 4> answers{4, 4, 4, 4};

  void validate() const;
  bool operator==(const SurveyResponse&) const = default;
};

/// Output of the learn / plan / explain pipeline for one demonstration corpus.
struct LearnedArtifacts {
  RewardParams reward;
  PolicyArtifacts policy;
  TerminalSet terminals;
  std::vector<ExplanatoryTrajectory> population;
  double performance = 0.0;
  int fit_iterations = 0;
  double fit_residual = 0.0;
};

LearnedArtifacts learn(const std::vector<Demonstration>& demos, const StateSpace& space,
                       const IrlConfig& irl, const PlannerConfig& planner);

/// Stable FNV-1a digest over the learnt reward and greedy policy.
std::string artifact_digest(const LearnedArtifacts& artifacts);

/// Fixed artifacts for the practice round: learnt from noise-free shortest
/// paths to the preferred goal from every left-half start.
LearnedArtifacts practice_artifacts(const StateSpace& space, const IrlConfig& irl,
                                    const PlannerConfig& planner);

/// Per-demonstration action budget:
/// max(dist(start, preferred) + delta, dist(start, nearest goal)),
/// delta uniform in [delta_min, delta_max]. Distances are shortest noise-free
/// path lengths, which equal Manhattan distance on obstacle-free grids.
int action_budget(const StateSpace& space, Cell start, Rng& rng, int delta_min = -3,
                  int delta_max = 3);
int action_budget_for_delta(const StateSpace& space, Cell start, int delta);

struct Grade {
  bool correct = false;
  PredictionValue actual;
};

/// Correct iff `predicted` is among the optimal (tied) actions at `probe`.
Grade grade_action_prediction(const PolicyArtifacts& policy, const StateSpace& space, Cell probe,
                              Action predicted);

/// Goal the noise-free rollout from `probe` ends in.
GoalLabel rollout_goal_label(const PolicyArtifacts& policy, const StateSpace& space,
                             const TerminalSet& tu, Cell probe);
Grade grade_goal_prediction(const PolicyArtifacts& policy, const StateSpace& space,
                            const TerminalSet& tu, Cell probe, GoalLabel predicted);

// Events --------------------------------------------------------------------

struct DemoReset {
  Cell start;
};
struct DemoStep {
  Action action;
};
struct SetComplete {};
struct ExplanationAck {};
struct PredictionSubmitted {
  int probe_index = 0;
  PredictionValue predicted;
  int certainty = 4;
  double elapsed = 0.0;
};
struct SurveySubmitted {
  SurveyResponse response;
};

using Event =
    std::variant<DemoReset, DemoStep, SetComplete, ExplanationAck, PredictionSubmitted, SurveySubmitted>;

std::string_view event_name(const Event& e);

/// Event not allowed in the current phase. The state is left unchanged.
class ProtocolError : public std::logic_error {
 public:
  ProtocolError(Phase phase, const std::string& what)
      : std::logic_error(what + " (phase " + std::string(to_string(phase)) + ")"), phase_(phase) {}
  Phase phase() const { return phase_; }

 private:
  Phase phase_;
};

/// Event carrying out-of-range values (bad cell, certainty, probe index...).
class InvalidEventError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Session state ---------------------------------------------------------------

struct ActiveDemo {
  Cell start;
  int budget = 0;
  std::vector<Cell> states;
  std::vector<Action> actions;

  Cell position() const { return states.back(); }
  int budget_remaining() const { return budget - static_cast<int>(actions.size()); }
};

enum class DemoStatus { InProgress, Completed, Discarded };
std::string_view to_string(DemoStatus s);

struct DemoStepOutcome {
  Cell realized;
  DemoStatus status = DemoStatus::InProgress;
};

enum class ExplanationContext { Practice, AfterSet, Final };

struct ProbeSet {
  PredictionKind kind = PredictionKind::Action;
  Stage stage = Stage::Initial;
  std::vector<Cell> probes;
  std::vector<char> answered;

  bool complete() const;
};

struct AgendaItem {
  Phase phase;
  Stage stage = Stage::Initial;
  ExplanationContext context = ExplanationContext::AfterSet;
};

struct SessionState {
  std::shared_ptr<const SessionSetup> setup;
  std::shared_ptr<const StateSpace> space;
  Rng rng;

  Phase phase = Phase::Practice;
  int demo_sets_completed = 0;
  int demos_in_set = 0;
  int discarded_attempts = 0;
  std::vector<Demonstration> demos;
  std::optional<ActiveDemo> active_demo;
  std::optional<DemoStepOutcome> last_step;

  std::shared_ptr<const LearnedArtifacts> practice;
  std::shared_ptr<const LearnedArtifacts> artifacts;
  std::vector<double> performance_history;

  std::optional<ExplanationSample> explanation;
  ExplanationContext explanation_context = ExplanationContext::Practice;
  std::vector<ExplanationSample> explanations_shown;

  std::optional<ProbeSet> probes;
  std::vector<PredictionRecord> predictions;
  std::optional<SurveyResponse> survey;
  bool task_complete = false;

  std::deque<AgendaItem> agenda;

  const SessionConfig& config() const { return setup->session; }
  int total_demonstrations() const { return static_cast<int>(demos.size()); }
};

/// Fresh session in the Practice phase with the practice explanation drawn.
SessionState create_session(const SessionSetup& setup);

/// Applies one event. Throws ProtocolError for events illegal in the current
/// phase and InvalidEventError for malformed ones; the input is not modified.
SessionState advance(const SessionState& state, const Event& event);

/// Free, non-goal cells: the legal demonstration starts and prediction probes.
std::vector<Cell> probe_candidates(const StateSpace& space);

}  // namespace lfdx
