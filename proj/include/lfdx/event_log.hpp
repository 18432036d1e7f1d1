#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfdx/metrics.hpp"
#include "lfdx/protocol.hpp"
#include "lfdx/serialize.hpp"

namespace lfdx {

/// Sequence gap, malformed record, or a replay that does not reproduce the
/// recorded observations. `seq` is the first offending sequence number.
class IntegrityError : public std::runtime_error {
 public:
  IntegrityError(std::uint64_t seq, const std::string& what)
      : std::runtime_error("seq " + std::to_string(seq) + ": " + what), seq_(seq) {}
  std::uint64_t seq() const { return seq_; }

 private:
  std::uint64_t seq_;
};

/// One line of a session log:
///   {"schema_version", "session_id", "seq", "timestamp", "kind", "payload"}
/// The first record has kind "session_created" with the setup; every later
/// record carries an input event and the observation it produced.
struct LogRecord {
  std::string session_id;
  std::uint64_t seq = 0;
  double timestamp = 0.0;
  std::string kind;
  json payload;
};

json record_json(const LogRecord& r);
LogRecord parse_record(const json& j);

/// What a client could see change after `event`: the new phase plus the
/// event-specific outcome (realised cell, performance and digest, new
/// explanation or probes, graded prediction, final report). Replay compares
/// these field by field.
json observe(const SessionState& before, const Event& event, const SessionState& after);

/// Payload of the session_created record.
json creation_payload(const SessionSetup& setup, const std::string& token, const SessionState& initial);

/// Append-only, sequence-checked session log. With a path every record is
/// written as one line and fsync'ed before append() returns.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::filesystem::path path);
  EventLog(EventLog&&) noexcept;
  EventLog& operator=(EventLog&&) noexcept;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog();

  /// Throws IntegrityError unless record.seq == last_seq() + 1; throws
  /// std::runtime_error when the write fails.
  void append(const LogRecord& record);

  std::uint64_t last_seq() const { return last_seq_; }
  const std::vector<std::string>& lines() const { return lines_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

  /// Adopts records already on disk (after a restart) without rewriting them.
  void adopt(std::vector<std::string> lines, std::uint64_t last_seq);

 private:
  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
  std::uint64_t last_seq_ = 0;
  std::vector<std::string> lines_;
};

/// Parses JSONL text; blank lines are skipped. Checks schema_version, a single
/// session id and contiguous sequence numbers from 1.
std::vector<LogRecord> parse_log(const std::string& text);
std::vector<LogRecord> read_log(const std::filesystem::path& path);

struct ReplayResult {
  std::string session_id;
  std::string token;
  SessionState state;
  std::optional<MetricsReport> report;
  std::uint64_t last_seq = 0;
};

/// Re-derives the session from the setup and the recorded events, checking
/// every recorded observation. Throws IntegrityError at the first divergence.
ReplayResult replay(const std::vector<LogRecord>& records);

}  // namespace lfdx
