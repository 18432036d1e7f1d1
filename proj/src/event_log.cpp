#include "lfdx/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

namespace lfdx {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string_view context_name(ExplanationContext c) {
  switch (c) {
    case ExplanationContext::Practice: return "practice";
    case ExplanationContext::AfterSet: return "after_set";
    case ExplanationContext::Final: return "final";
  }
  return "?";
}

json probes_json(const ProbeSet& p) {
  return json{{"kind", to_string(p.kind)}, {"stage", to_string(p.stage)}, {"probes", p.probes}};
}

/// Name of the first differing top-level field, for divergence messages.
std::string first_difference(const json& expected, const json& actual) {
  if (!expected.is_object() || !actual.is_object()) return "observation";
  for (const auto& [key, value] : expected.items()) {
    if (!actual.contains(key) || actual[key] != value) return key;
  }
  for (const auto& [key, value] : actual.items()) {
    if (!expected.contains(key)) return key;
  }
  return "observation";
}

}  // namespace

json record_json(const LogRecord& r) {
  return json{{"schema_version", kSchemaVersion}, {"session_id", r.session_id}, {"seq", r.seq},
              {"timestamp", r.timestamp},         {"kind", r.kind},             {"payload", r.payload}};
}

LogRecord parse_record(const json& j) {
  if (!j.is_object()) throw SchemaError("log record: expected an object");
  if (j.value("schema_version", -1) != kSchemaVersion)
    throw SchemaError("log record: unsupported schema_version");
  try {
    LogRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.seq = j.at("seq").get<std::uint64_t>();
    r.timestamp = j.at("timestamp").get<double>();
    r.kind = j.at("kind").get<std::string>();
    r.payload = j.at("payload");
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("log record: ") + e.what());
  }
}

json observe(const SessionState& before, const Event& event, const SessionState& after) {
  json obs{{"phase", to_string(after.phase)}};
  std::visit(Overloaded{
                 [&](const DemoReset&) {
                   obs["start"] = after.active_demo->start;
                   obs["budget"] = after.active_demo->budget;
                 },
                 [&](const DemoStep&) {
                   const auto& step = *after.last_step;
                   obs["realized"] = step.realized;
                   obs["status"] = to_string(step.status);
                   obs["budget_remaining"] = before.active_demo->budget_remaining() - 1;
                 },
                 [&](const SetComplete&) {
                   obs["performance"] = after.performance_history.back();
                   obs["demo_sets_completed"] = after.demo_sets_completed;
                   obs["task_complete"] = after.task_complete;
                   obs["artifact_digest"] = artifact_digest(*after.artifacts);
                 },
                 [&](const ExplanationAck&) {},
                 [&](const PredictionSubmitted&) { obs["record"] = after.predictions.back(); },
                 [&](const SurveySubmitted&) {},
             },
             event);
  if (after.explanations_shown.size() > before.explanations_shown.size()) {
    obs["explanation"] = {{"context", context_name(after.explanation_context)},
                          {"sample", *after.explanation}};
  }
  if (after.probes && (!before.probes || before.phase != after.phase))
    obs["probes"] = probes_json(*after.probes);
  if (after.phase == Phase::Done) obs["report"] = compute_report(after);
  return obs;
}

json creation_payload(const SessionSetup& setup, const std::string& token, const SessionState& initial) {
  return json{{"setup", setup},
              {"token", token},
              {"practice_digest", artifact_digest(*initial.practice)},
              {"practice_explanation", *initial.explanation}};
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  fd_ = ::open(path_->c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0)
    throw std::runtime_error("cannot open log " + path_->string() + ": " + std::strerror(errno));
}

EventLog::EventLog(EventLog&& other) noexcept
    : path_(std::move(other.path_)),
      fd_(std::exchange(other.fd_, -1)),
      last_seq_(other.last_seq_),
      lines_(std::move(other.lines_)) {}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = std::exchange(other.fd_, -1);
    last_seq_ = other.last_seq_;
    lines_ = std::move(other.lines_);
  }
  return *this;
}

EventLog::~EventLog() {
  if (fd_ >= 0) ::close(fd_);
}

void EventLog::append(const LogRecord& record) {
  if (record.seq != last_seq_ + 1)
    throw IntegrityError(record.seq, "expected sequence number " + std::to_string(last_seq_ + 1));
  std::string line = record_json(record).dump() + "\n";
  if (fd_ >= 0) {
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      const ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error("log write failed: " + std::string(std::strerror(errno)));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0)
      throw std::runtime_error("log fsync failed: " + std::string(std::strerror(errno)));
  }
  line.pop_back();
  lines_.push_back(std::move(line));
  last_seq_ = record.seq;
}

void EventLog::adopt(std::vector<std::string> lines, std::uint64_t last_seq) {
  lines_ = std::move(lines);
  last_seq_ = last_seq;
}

std::vector<LogRecord> parse_log(const std::string& text) {
  std::vector<LogRecord> records;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::uint64_t expected = records.size() + 1;
    LogRecord r;
    try {
      r = parse_record(json::parse(line));
    } catch (const std::exception& e) {
      throw IntegrityError(expected, e.what());
    }
    if (r.seq != expected)
      throw IntegrityError(expected, "found sequence number " + std::to_string(r.seq));
    if (!records.empty() && r.session_id != records.front().session_id)
      throw IntegrityError(r.seq, "record belongs to session " + r.session_id);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw IntegrityError(1, "log is empty");
  return records;
}

std::vector<LogRecord> read_log(const std::filesystem::path& path) { return parse_log(read_file(path)); }

ReplayResult replay(const std::vector<LogRecord>& records) {
  if (records.empty()) throw IntegrityError(1, "log is empty");
  const LogRecord& head = records.front();
  if (head.kind != "session_created") throw IntegrityError(head.seq, "first record must be session_created");

  ReplayResult out;
  out.session_id = head.session_id;
  SessionSetup setup;
  try {
    setup = head.payload.at("setup").get<SessionSetup>();
    out.token = head.payload.at("token").get<std::string>();
    out.state = create_session(setup);
  } catch (const std::exception& e) {
    throw IntegrityError(head.seq, std::string("bad session_created payload: ") + e.what());
  }
  const json created = creation_payload(setup, out.token, out.state);
  if (created != head.payload)
    throw IntegrityError(head.seq, "session_created diverges in " + first_difference(head.payload, created));
  out.last_seq = head.seq;

  for (std::size_t i = 1; i < records.size(); ++i) {
    const LogRecord& r = records[i];
    Event event;
    json recorded;
    try {
      event = parse_event(r.payload.at("event"));
      recorded = r.payload.at("observation");
    } catch (const std::exception& e) {
      throw IntegrityError(r.seq, std::string("bad event payload: ") + e.what());
    }
    if (r.kind != event_name(event))
      throw IntegrityError(r.seq, "kind " + r.kind + " does not match event " + std::string(event_name(event)));
    SessionState next;
    try {
      next = lfdx::advance(out.state, event);
    } catch (const std::exception& e) {
      throw IntegrityError(r.seq, std::string("event rejected on replay: ") + e.what());
    }
    const json derived = observe(out.state, event, next);
    if (derived != recorded)
      throw IntegrityError(r.seq, "observation diverges in " + first_difference(recorded, derived));
    out.state = std::move(next);
    out.last_seq = r.seq;
  }
  if (out.state.phase == Phase::Done) out.report = compute_report(out.state);
  return out;
}

}  // namespace lfdx
