#include "lfdx/server.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "httplib.h"
#include "lfdx/metrics.hpp"
#include "lfdx/simteacher.hpp"

namespace lfdx {

struct Api::Hosted {
  std::mutex mutex;
  std::string id;
  std::string token;
  SessionState state;
  EventLog log;
  double created_at = 0.0;
  bool frozen = false;
};

namespace {

std::string random_hex(std::size_t n) {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(n, '0');
  for (auto& c : s) c = digits[gen() % 16];
  return s;
}

double wall_clock() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

ApiResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

ApiResponse error(int status, const std::string& message, std::optional<Phase> phase = std::nullopt) {
  json body{{"error", message}};
  if (phase) body["phase"] = to_string(*phase);
  return json_response(status, body);
}

std::vector<std::string> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

std::optional<std::string> header(const Headers& headers, std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (std::equal(k.begin(), k.end(), name.begin(), name.end(),
                   [](char a, char b) { return std::tolower(a) == std::tolower(b); }))
      return v;
  }
  return std::nullopt;
}

json parse_body(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  json j = json::parse(body);  // json::parse_error is mapped to 400 by the caller
  if (!j.is_object()) throw SchemaError("request body must be a JSON object");
  return j;
}

std::string_view context_name(ExplanationContext c) {
  switch (c) {
    case ExplanationContext::Practice: return "practice";
    case ExplanationContext::AfterSet: return "after_set";
    case ExplanationContext::Final: return "final";
  }
  return "?";
}

bool ends_session_route(const std::vector<std::string>& p, std::initializer_list<std::string_view> tail) {
  if (p.size() != 2 + tail.size()) return false;
  std::size_t i = 2;
  for (auto t : tail) {
    if (p[i++] != t) return false;
  }
  return true;
}

}  // namespace

json session_view(const std::string& id, const SessionState& st, std::uint64_t seq) {
  const auto& cfg = st.config();
  const auto& space = *st.space;
  json v{{"schema_version", kSchemaVersion},
         {"session_id", id},
         {"seq", seq},
         {"condition", to_string(cfg.condition)},
         {"phase", to_string(st.phase)},
         {"grid", space.spec()},
         {"demos_per_set", cfg.demos_per_set},
         {"max_demo_sets", cfg.max_demo_sets},
         {"demo_sets_completed", st.demo_sets_completed},
         {"demos_in_set", st.demos_in_set},
         {"total_demonstrations", st.total_demonstrations()},
         {"discarded_attempts", st.discarded_attempts},
         {"performance_history", st.performance_history},
         {"predictions_made", st.predictions.size()},
         {"survey_submitted", st.survey.has_value()},
         {"task_complete", st.task_complete}};
  if (st.active_demo) {
    const auto& d = *st.active_demo;
    const Cell target = teacher_target(space, d.start, d.budget);
    v["active_demo"] = {{"start", d.start},
                        {"position", d.position()},
                        {"states", d.states},
                        {"budget", d.budget},
                        {"budget_remaining", d.budget_remaining()},
                        {"target_hint", target == space.spec().preferred_goal ? "Preferred" : "NonPreferred"}};
  } else {
    v["active_demo"] = nullptr;
  }
  if (st.last_step) {
    v["last_step"] = {{"realized", st.last_step->realized}, {"status", to_string(st.last_step->status)}};
  } else {
    v["last_step"] = nullptr;
  }
  if (st.explanation && (st.phase == Phase::Explaining || st.phase == Phase::Practice)) {
    v["explanation"] = {{"context", context_name(st.explanation_context)}, {"sample", *st.explanation}};
  } else {
    v["explanation"] = nullptr;
  }
  if (st.probes) {
    json probes = json::array();
    for (std::size_t i = 0; i < st.probes->probes.size(); ++i) {
      probes.push_back(
          {{"index", i}, {"cell", st.probes->probes[i]}, {"answered", st.probes->answered[i] != 0}});
    }
    v["pending_probes"] = {
        {"kind", to_string(st.probes->kind)}, {"stage", to_string(st.probes->stage)}, {"probes", probes}};
  } else {
    v["pending_probes"] = nullptr;
  }
  return v;
}

Api::Api(ApiOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = wall_clock;
  if (!options_.new_session_id) options_.new_session_id = [] { return random_hex(16); };
  if (!options_.new_token) options_.new_token = [] { return random_hex(32); };
  if (!options_.data_dir) return;

  std::filesystem::create_directories(*options_.data_dir);
  for (const auto& entry : std::filesystem::directory_iterator(*options_.data_dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    try {
      const std::string text = read_file(entry.path());
      const auto records = parse_log(text);
      auto result = replay(records);
      auto h = std::make_shared<Hosted>();
      h->id = result.session_id;
      h->token = result.token;
      h->state = std::move(result.state);
      h->created_at = records.front().timestamp;
      h->log = EventLog(entry.path());
      std::vector<std::string> lines;
      for (const auto& r : records) lines.push_back(record_json(r).dump());
      h->log.adopt(std::move(lines), result.last_seq);
      sessions_[h->id] = std::move(h);
    } catch (const std::exception& e) {
      std::cerr << "skipping " << entry.path().string() << ": " << e.what() << "\n";
    }
  }
}

Api::~Api() = default;

std::size_t Api::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<Api::Hosted> Api::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse Api::create(std::string_view body) {
  const json req = parse_body(body);
  SessionSetup setup = options_.defaults;
  for (const auto& [key, value] : req.items()) {
    if (key == "grid") {
      setup.grid = value.get<GridSpec>();
    } else if (key == "session") {
      setup.session = value.get<SessionConfig>();
    } else if (key == "irl") {
      setup.irl = value.get<IrlConfig>();
    } else if (key == "planner") {
      setup.planner = value.get<PlannerConfig>();
    } else if (key != "condition" && key != "seed") {
      throw SchemaError("unknown field \"" + key + "\"");
    }
  }
  // Top-level condition and seed win over a nested session object.
  if (req.contains("condition")) {
    try {
      setup.session.condition = parse_condition(req["condition"].get<std::string>());
    } catch (const std::exception&) {
      throw SchemaError("condition must be EF or NF");
    }
  }
  if (req.contains("seed")) setup.session.seed = req["seed"].get<std::uint64_t>();

  auto h = std::make_shared<Hosted>();
  h->state = create_session(setup);
  h->token = options_.new_token();
  h->created_at = options_.clock();
  {
    std::unique_lock lock(sessions_mutex_);
    do {
      h->id = options_.new_session_id();
    } while (sessions_.contains(h->id));
    if (options_.data_dir) h->log = EventLog(*options_.data_dir / (h->id + ".jsonl"));
    h->log.append(LogRecord{h->id, 1, h->created_at, "session_created",
                            creation_payload(setup, h->token, h->state)});
    sessions_[h->id] = h;
  }
  return json_response(201, {{"session_id", h->id},
                             {"token", h->token},
                             {"view", session_view(h->id, h->state, h->log.last_seq())}});
}

ApiResponse Api::apply(Hosted& h, const Event& event) {
  if (h.frozen) return error(503, "session is frozen after a log failure");
  SessionState next;
  try {
    next = lfdx::advance(h.state, event);
  } catch (const ProtocolError& e) {
    return error(409, e.what(), e.phase());
  } catch (const InvalidEventError& e) {
    return error(400, e.what(), h.state.phase);
  }
  json obs = observe(h.state, event, next);
  const LogRecord record{h.id, h.log.last_seq() + 1, options_.clock(), std::string(event_name(event)),
                         json{{"event", event_json(event)}, {"observation", obs}}};
  try {
    h.log.append(record);
  } catch (const std::exception& e) {
    h.frozen = true;
    return error(500, std::string("event log failure, session frozen: ") + e.what());
  }
  h.state = std::move(next);
  obs["seq"] = record.seq;
  obs["view"] = session_view(h.id, h.state, record.seq);
  return json_response(200, obs);
}

ApiResponse Api::handle(std::string_view method, std::string_view path, std::string_view body,
                        const Headers& headers) {
  const auto parts = split_path(path);
  try {
    if (parts.empty() || parts[0] != "sessions") return error(404, "no such route");
    if (parts.size() == 1) {
      if (method != "POST") return error(405, "use POST to create a session");
      return create(body);
    }

    auto h = find(parts[1]);
    if (!h) return error(404, "unknown session " + parts[1]);
    const auto token = header(headers, kTokenHeader);
    if (!token || *token != h->token) return error(401, "missing or wrong session token");

    std::lock_guard lock(h->mutex);
    const bool get = method == "GET";
    const bool post = method == "POST";

    if (parts.size() == 2) {
      if (!get) return error(405, "use GET");
      return json_response(200, session_view(h->id, h->state, h->log.last_seq()));
    }
    if (ends_session_route(parts, {"report"})) {
      if (!get) return error(405, "use GET");
      if (h->state.phase != Phase::Done) return error(409, "report is available once the session is done", h->state.phase);
      return json_response(200, compute_report(h->state));
    }
    if (ends_session_route(parts, {"log"})) {
      if (!get) return error(405, "use GET");
      std::string text;
      for (const auto& line : h->log.lines()) text += line + "\n";
      return {200, std::move(text), "application/x-ndjson"};
    }

    if (!post) {
      const bool known = ends_session_route(parts, {"demo", "reset"}) ||
                         ends_session_route(parts, {"demo", "step"}) ||
                         ends_session_route(parts, {"set", "complete"}) ||
                         ends_session_route(parts, {"explanation", "ack"}) ||
                         ends_session_route(parts, {"prediction"}) || ends_session_route(parts, {"survey"});
      return known ? error(405, "use POST") : error(404, "no such route");
    }
    const json req = parse_body(body);
    if (ends_session_route(parts, {"demo", "reset"})) {
      if (!req.contains("start")) throw SchemaError("missing field \"start\"");
      return apply(*h, DemoReset{req["start"].get<Cell>()});
    }
    if (ends_session_route(parts, {"demo", "step"})) {
      if (!req.contains("action") || !req["action"].is_string()) throw SchemaError("missing field \"action\"");
      Action a;
      try {
        a = parse_action(req["action"].get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
      }
      return apply(*h, DemoStep{a});
    }
    if (ends_session_route(parts, {"set", "complete"})) return apply(*h, SetComplete{});
    if (ends_session_route(parts, {"explanation", "ack"})) return apply(*h, ExplanationAck{});
    if (ends_session_route(parts, {"prediction"})) {
      const auto& st = h->state;
      if (!st.probes)
        return error(409, "predictions are only accepted during prediction sub-tasks", st.phase);
      PredictionKind kind;
      try {
        kind = parse_prediction_kind(req.at("kind").get<std::string>());
      } catch (const std::exception&) {
        throw SchemaError("kind must be Action or Goal");
      }
      if (kind != st.probes->kind)
        return error(409, "current sub-task expects " + std::string(to_string(st.probes->kind)) + " predictions",
                     st.phase);
      PredictionSubmitted p;
      p.probe_index = req.at("probe_index").get<int>();
      p.predicted = parse_prediction(kind, req.at("predicted"));
      p.certainty = req.at("certainty").get<int>();
      const double elapsed = req.at("elapsed").get<double>();
      if (!std::isfinite(elapsed)) throw SchemaError("elapsed must be finite");
      const double session_time = std::max(0.0, options_.clock() - h->created_at);
      p.elapsed = std::clamp(elapsed, 0.0, session_time);
      return apply(*h, p);
    }
    if (ends_session_route(parts, {"survey"})) {
      SurveyResponse s;
      try {
        s = req.get<SurveyResponse>();
      } catch (const SchemaError& e) {
        return error(400, e.what(), h->state.phase);
      }
      return apply(*h, SurveySubmitted{s});
    }
    return error(404, "no such route");
  } catch (const json::exception& e) {
    return error(400, std::string("malformed request: ") + e.what());
  } catch (const SchemaError& e) {
    return error(400, e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

bool serve(Api& api, const std::string& host, int port) {
  httplib::Server server;
  auto dispatch = [&api](const httplib::Request& req, httplib::Response& res) {
    Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    const ApiResponse out = api.handle(req.method, req.path, req.body, headers);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);
  server.Put(R"(/.*)", dispatch);
  server.Delete(R"(/.*)", dispatch);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", std::string("Content-Type, ") + kTokenHeader}});
  std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), port);
  return server.listen(host, port);
}

}  // namespace lfdx
