#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "lfdx/event_log.hpp"
#include "lfdx/protocol.hpp"

namespace lfdx {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Header names are matched case-insensitively.
using Headers = std::map<std::string, std::string>;

inline constexpr const char* kTokenHeader = "X-Session-Token";

struct ApiOptions {
  /// One <session id>.jsonl per session. Without it logs stay in memory.
  std::optional<std::filesystem::path> data_dir;
  /// Seconds; used for log timestamps and to clamp reported prediction times.
  std::function<double()> clock;
  std::function<std::string()> new_session_id;
  std::function<std::string()> new_token;
  /// Base setup that POST /sessions bodies override.
  SessionSetup defaults;
};

/// Transport-independent request handler behind the HTTP server.
///
///   POST /sessions                      create {condition, seed, grid, session, irl, planner}
///   GET  /sessions/{id}                 client view
///   POST /sessions/{id}/demo/reset      {start: [row, col]}
///   POST /sessions/{id}/demo/step       {action}
///   POST /sessions/{id}/set/complete
///   POST /sessions/{id}/explanation/ack
///   POST /sessions/{id}/prediction      {kind, probe_index, predicted, certainty, elapsed}
///   POST /sessions/{id}/survey          {answers: [4 x 1..7]}
///   GET  /sessions/{id}/report
///   GET  /sessions/{id}/log             JSON lines
///
/// Every /sessions/{id} route needs the token returned at creation in the
/// X-Session-Token header. Errors: 400 malformed, 401 bad token, 404 unknown,
/// 405 wrong method, 409 illegal in the current phase, 503 frozen session.
class Api {
 public:
  explicit Api(ApiOptions options = {});
  ~Api();
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body,
                     const Headers& headers = {});

  std::size_t session_count() const;

 private:
  struct Hosted;
  std::shared_ptr<Hosted> find(const std::string& id) const;
  ApiResponse create(std::string_view body);
  ApiResponse apply(Hosted& h, const Event& event);

  ApiOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Hosted>> sessions_;
};

/// Client view of a session (GET /sessions/{id}).
json session_view(const std::string& id, const SessionState& st, std::uint64_t seq);

/// Serves `api` over HTTP until the process is stopped. Returns false when the
/// port cannot be bound.
bool serve(Api& api, const std::string& host, int port);

}  // namespace lfdx
