#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "lfdx/event_log.hpp"
#include "lfdx/serialize.hpp"
#include "support.hpp"

using namespace lfdx;

namespace {

SessionSetup small_setup(std::uint64_t seed) {
  SessionSetup s;
  s.grid = fixtures::grid(5, 5, {1, 4}, Cell{4, 0}, 0.2);
  s.session.seed = seed;
  s.session.max_demo_sets = 3;
  return s;
}

std::uint64_t divergence(const std::vector<std::string>& lines) {
  try {
    replay(parse_log(fixtures::joined(lines)));
  } catch (const IntegrityError& e) {
    return e.seq();
  }
  return 0;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("lfdx-persist-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("setup round-trips through JSON") {
  SessionSetup s;
  s.grid = fixtures::grid(6, 5, {0, 5}, Cell{4, 0}, 0.15);
  s.grid.obstacles = {{2, 2}, {3, 1}};
  s.session.condition = Condition::NF;
  s.session.seed = 1234567890123ull;
  s.session.strict_budget = true;
  s.session.budget_delta_min = -1;
  s.irl.method = IrlMethod::Lbfgs;
  s.irl.l2 = 0.25;
  s.irl.horizon = 17;
  s.planner.gamma = 0.8;
  const json j = s;
  const auto back = j.get<SessionSetup>();
  CHECK(back.grid == s.grid);
  CHECK(back.session == s.session);
  CHECK(json(back) == j);

  s.grid.non_preferred_goal.reset();
  CHECK(json(s).get<SessionSetup>().grid == s.grid);
}

TEST_CASE("events round-trip through JSON") {
  const std::vector<Event> events{DemoReset{{2, 3}},
                                  DemoStep{Action::Left},
                                  SetComplete{},
                                  ExplanationAck{},
                                  PredictionSubmitted{3, Action::Down, 6, 2.25},
                                  PredictionSubmitted{0, GoalLabel::NonPreferred, 1, 0.0},
                                  SurveySubmitted{{{1, 2, 6, 7}}}};
  for (const auto& e : events) {
    const json j = event_json(e);
    CHECK(j.at("type") == std::string(event_name(e)));
    CHECK(event_json(parse_event(j)) == j);
  }
  CHECK_THROWS_AS(parse_event(json{{"type", "teleport"}}), SchemaError);
  CHECK_THROWS(parse_event(json{{"type", "demo_step"}, {"action", "Sideways"}}));
}

TEST_CASE("experiment config parsing") {
  const auto cfg = parse_experiment_config(json::parse(R"({
    "grid": {"width": 4, "height": 4, "preferred_goal": [0, 3], "non_preferred_goal": [3, 0]},
    "session": {"condition": "NF", "max_demo_sets": 4},
    "irl": {"method": "lbfgs"},
    "strategy": "coverage",
    "seeds": 3
  })"));
  CHECK(cfg.setup.grid.width == 4);
  CHECK(cfg.setup.session.condition == Condition::NF);
  CHECK(cfg.setup.session.max_demo_sets == 4);
  CHECK(cfg.setup.session.demos_per_set == 5);
  CHECK(cfg.setup.irl.method == IrlMethod::Lbfgs);
  CHECK(cfg.strategy == TeacherStrategy::CoverageStart);
  CHECK(cfg.seeds == 3);
  CHECK_THROWS_AS(parse_experiment_config(json::parse(R"({"gird": {}})")), SchemaError);
  CHECK_THROWS_AS(parse_experiment_config(json::parse(R"({"session": {"condition": "XF"}})")), SchemaError);
}

TEST_CASE("bundled study config loads") {
  const auto cfg = load_experiment_config(std::filesystem::path(LFDX_SOURCE_DIR) / "configs/study_default.json");
  CHECK(cfg.setup.grid == default_study_grid());
  CHECK(cfg.setup.session == SessionConfig{});
  CHECK(cfg.strategy == TeacherStrategy::FeedbackResponsive);
  CHECK(cfg.seeds == 30);
}

TEST_CASE("log records are sequence checked") {
  EventLog log;
  log.append(LogRecord{"a", 1, 0.0, "session_created", json::object()});
  CHECK_THROWS_AS(log.append(LogRecord{"a", 3, 0.0, "demo_step", json::object()}), IntegrityError);
  CHECK(log.last_seq() == 1);
  const auto r = parse_record(json::parse(log.lines().front()));
  CHECK(r.session_id == "a");
  CHECK(r.kind == "session_created");
  CHECK(json::parse(log.lines().front()).at("schema_version") == kSchemaVersion);
}

TEST_CASE("recorded sessions replay to the live result") {
  for (auto [cond, strat] : {std::pair{Condition::EF, TeacherStrategy::FeedbackResponsive},
                             std::pair{Condition::NF, TeacherStrategy::RandomStart}}) {
    auto setup = small_setup(5);
    setup.session.condition = cond;
    EventLog log;
    const auto run = fixtures::record_session(setup, strat, log);
    const auto result = replay(parse_log(fixtures::joined(log.lines())));
    REQUIRE(result.report.has_value());
    CHECK(*result.report == run.report);
    CHECK(json(*result.report).dump() == json(run.report).dump());
    CHECK(result.state.performance_history == run.final_state.performance_history);
    CHECK(result.state.predictions == run.final_state.predictions);
    CHECK(result.last_seq == log.last_seq());
    CHECK(result.token == "tok");
  }
}

TEST_CASE("tampering is located at the first divergent record") {
  EventLog log;
  fixtures::record_session(small_setup(9), TeacherStrategy::FeedbackResponsive, log);
  const auto lines = log.lines();
  CHECK(divergence(lines) == 0);

  // Forge the realised cell of the first demo step.
  std::size_t step = 0;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (json::parse(lines[i]).at("kind") == "demo_step") {
      step = i;
      break;
    }
  REQUIRE(step > 0);
  auto forged = lines;
  auto rec = json::parse(forged[step]);
  auto& realized = rec["payload"]["observation"]["realized"];
  realized = json::array({realized[0].get<int>() == 0 ? 1 : 0, realized[1]});
  forged[step] = rec.dump();
  CHECK(divergence(forged) == step + 1);

  // A different action replays differently from that record on.
  auto swapped = lines;
  rec = json::parse(swapped[step]);
  rec["payload"]["event"]["action"] = rec["payload"]["event"]["action"] == "Up" ? "Down" : "Up";
  swapped[step] = rec.dump();
  CHECK(divergence(swapped) >= step + 1);

  // Forged grading.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rec = json::parse(lines[i]);
    if (rec.at("kind") != "prediction_submitted") continue;
    auto& correct = rec["payload"]["observation"]["record"]["correct"];
    correct = !correct.get<bool>();
    auto graded = lines;
    graded[i] = rec.dump();
    CHECK(divergence(graded) == i + 1);
    break;
  }

  // A different seed in the header.
  auto reseeded = lines;
  rec = json::parse(reseeded[0]);
  rec["payload"]["setup"]["session"]["seed"] = 10;
  reseeded[0] = rec.dump();
  CHECK(divergence(reseeded) == 1);

  // Missing and mangled lines.
  auto gap = lines;
  gap.erase(gap.begin() + 4);
  CHECK(divergence(gap) == 5);
  auto mangled = lines;
  mangled[6] = "{not json";
  CHECK(divergence(mangled) == 7);
}

TEST_CASE("log files are appended and read back") {
  const auto dir = scratch_dir();
  const auto path = dir / "session.jsonl";
  std::filesystem::remove(path);
  SessionRun run;
  {
    EventLog log(path);
    run = fixtures::record_session(small_setup(2), TeacherStrategy::CoverageStart, log);
  }
  const auto result = replay(read_log(path));
  REQUIRE(result.report.has_value());
  CHECK(*result.report == run.report);
  std::filesystem::remove_all(dir);
}
