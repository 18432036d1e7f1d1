// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any line fails. An optional argument restricts the run to criteria
// whose name contains it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "lfdx/event_log.hpp"
#include "lfdx/explainer.hpp"
#include "lfdx/irl.hpp"
#include "lfdx/metrics.hpp"
#include "lfdx/planner.hpp"
#include "lfdx/server.hpp"
#include "lfdx/simteacher.hpp"
#include "support.hpp"

using namespace lfdx;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_s = 0.0;  // 0: no runtime limit
  std::function<Verdict()> check;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Verdict gradient_check() {
  const GridSpec g = fixtures::four_by_four();
  StateSpace sp(g);
  Rng rng(1001);
  const double eps = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto demos = fixtures::synthetic_demos(sp, 10 + trial, 500 + static_cast<std::uint64_t>(trial));
    const auto r = fixtures::random_reward(sp, rng, 1.0);
    const int h = effective_horizon(IrlConfig{}, sp, demos);
    const auto grad = log_likelihood_gradient(r, demos, sp, h);
    double diff2 = 0.0, fd2 = 0.0, an2 = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
      auto hi = r, lo = r;
      hi.theta[i] += eps;
      lo.theta[i] -= eps;
      const double fd = (log_likelihood(hi, demos, sp, h) - log_likelihood(lo, demos, sp, h)) / (2 * eps);
      diff2 += (fd - grad[i]) * (fd - grad[i]);
      fd2 += fd * fd;
      an2 += grad[i] * grad[i];
    }
    worst = std::max(worst, std::sqrt(diff2) / std::max({std::sqrt(fd2), std::sqrt(an2), 1e-12}));
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 10 random 4x4 instances", worst)};
}

Verdict feature_matching() {
  const GridSpec g = fixtures::four_by_four();
  StateSpace sp(g);
  const auto demos = fixtures::synthetic_demos(sp, 50, 7);
  IrlConfig cfg;
  cfg.method = IrlMethod::Lbfgs;
  cfg.max_iters = 2000;
  cfg.grad_tol = 1e-6;
  const auto result = fit(demos, sp, cfg);
  const int h = effective_horizon(cfg, sp, demos);
  const auto emp = empirical_feature_counts(sp, demos, h);
  std::vector<double> p0(sp.size(), 0.0);
  for (const auto& d : demos) p0[sp.index(d.start())] += 1.0 / static_cast<double>(demos.size());
  const TerminalSet tu = terminal_set(demos);
  const auto svf = expected_svf(soft_policy(result.reward, sp, tu, h), sp, p0, tu, h);
  double worst = 0.0;
  for (std::size_t s = 0; s < sp.size(); ++s) worst = std::max(worst, std::abs(svf[s] - emp[s]));
  return {worst < 1e-2, fmt("max |expected - empirical| = %.2e after %d iterations", worst, result.iterations)};
}

Verdict value_iteration_oracle() {
  Rng rng(66);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    GridSpec g = fixtures::grid(6, 6, {0, 5}, Cell{5, 0}, 0.2);
    for (int i = 0; i < 4; ++i) {
      const Cell c{static_cast<int>(rng.below(6)), static_cast<int>(rng.below(6))};
      if (!g.is_goal(c)) g.obstacles.insert(c);
    }
    StateSpace sp(g);
    const auto r = fixtures::random_reward(sp, rng);
    const auto v = value_iteration(r, sp, {0.9, 1e-10, 10000});
    std::vector<double> o(sp.size(), 0.0), next(sp.size());
    for (int sweep = 0; sweep < 50000; ++sweep) {
      for (std::size_t s = 0; s < sp.size(); ++s) {
        const Cell c = sp.cell(s);
        double best = -INFINITY;
        for (Cell m : {Cell{c.row - 1, c.col}, Cell{c.row + 1, c.col}, Cell{c.row, c.col - 1}, Cell{c.row, c.col + 1}}) {
          if (g.is_goal(c) || !g.is_free(m)) m = c;
          best = std::max(best, o[*sp.find(m)]);
        }
        next[s] = r.theta[s] + 0.9 * best;
      }
      o.swap(next);
    }
    for (std::size_t s = 0; s < sp.size(); ++s) worst = std::max(worst, std::abs(v[s] - o[s]));
  }
  StateSpace chain(fixtures::chain3());
  const auto v = value_iteration(RewardParams{{0.0, 0.0, 1.0}}, chain, {0.9, 1e-12, 10000});
  const double chain_err = std::max({std::abs(v[0] - 8.1), std::abs(v[1] - 9.0), std::abs(v[2] - 10.0)});
  return {worst < 1e-5 && chain_err < 1e-9,
          fmt("6x6 max deviation %.2e; chain (%.9f, %.9f, %.9f)", worst, v[0], v[1], v[2])};
}

Verdict rollout_termination() {
  const GridSpec g = fixtures::grid(3, 3, {0, 2}, Cell{2, 0});
  StateSpace sp(g);
  Rng rng(3);
  long rollouts = 0, bad = 0, cap_failures = 0;
  for (int table = 0; table < 10000; ++table) {
    std::vector<Action> greedy(sp.size());
    for (auto& a : greedy) a = kActions[rng.below(4)];
    const TerminalSet tu = table % 2 ? TerminalSet{{{0, 2}}} : TerminalSet{{{0, 2}, {2, 0}}};
    for (const auto& t : generate_population(greedy, sp, tu)) {
      ++rollouts;
      const bool categorized = t.success() ? !t.failure_reason.has_value() : t.failure_reason.has_value();
      if (t.actions.size() > sp.size() || !categorized) ++bad;
    }
  }
  for (int trial = 0; trial < 10000; ++trial) {
    const auto r = fixtures::random_reward(sp, rng, 2.0);
    const auto pol = greedy_policy(value_iteration(r, sp), sp);
    for (const auto& t : generate_population(pol, sp, TerminalSet{{{0, 2}, {2, 0}}}))
      if (t.failure_reason == FailureReason::StepCap) ++cap_failures;
  }
  return {bad == 0 && cap_failures == 0,
          fmt("%ld rollouts of 10000 random tables, %ld unbounded or uncategorized; "
              "%ld step-cap failures over 10000 converged greedy policies",
              rollouts, bad, cap_failures)};
}

Verdict sampling_rule() {
  Rng rng(5);
  long cases = 0, bad = 0, exact_ratio = 0;
  for (int n = 1; n <= 100; ++n) {
    for (int f = 0; f <= n; ++f) {
      std::vector<ExplanatoryTrajectory> pop(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        auto& t = pop[static_cast<std::size_t>(i)];
        t.start = {i / 10, i % 10};
        t.category = i < f ? Outcome::Failure : Outcome::Success;
        if (i < f) t.failure_reason = FailureReason::Cycle;
      }
      for (int k = 1; k <= std::min(10, n); ++k) {
        ++cases;
        // Smallest m with m >= k * f / n, by search.
        int want = 0;
        while (want * n < k * f) ++want;
        if ((k * f) % n == 0) ++exact_ratio;
        const int expect = std::min({k, f, want});
        const auto counts = sample_counts(n, f, k);
        const auto sample = sample_explanations(pop, k, rng);
        int drawn_fail = 0;
        for (const auto& t : sample.trajectories) drawn_fail += t.success() ? 0 : 1;
        if (counts.n_failure != expect || counts.n_success + counts.n_failure != k ||
            sample.n_failure != expect || drawn_fail != expect ||
            static_cast<int>(sample.trajectories.size()) != k)
          ++bad;
      }
    }
  }
  return {bad == 0, fmt("%ld (N, F, k) cases, %ld with an exact-integer ratio, %ld mismatches", cases, exact_ratio, bad)};
}

Verdict noise_marginal() {
  const GridSpec g = fixtures::grid(5, 5, {0, 0}, std::nullopt, 0.2);
  Rng rng(20240);
  int perpendicular = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Action a = kActions[static_cast<std::size_t>(i) % 4];
    const Cell intended = apply_action(g, {2, 2}, a);
    if (step_noisy(g, {2, 2}, a, rng) != intended) ++perpendicular;
  }
  const double freq = static_cast<double>(perpendicular) / n;
  return {freq >= 0.19 && freq <= 0.21, fmt("perpendicular frequency %.4f over 1e5 steps", freq)};
}

std::vector<MetricsReport> ef_runs, nf_runs;

Verdict h1() {
  const SessionSetup setup;
  ef_runs = run_experiment(Condition::EF, TeacherStrategy::FeedbackResponsive, setup, 30);
  int hits = 0;
  for (const auto& r : ef_runs)
    if (r.final_performance == 1.0 && r.demo_sets < setup.session.max_demo_sets) ++hits;
  return {hits >= 28, fmt("%d/30 EF + FeedbackResponsive seeds reach performance 1.0 before the cap", hits)};
}

Verdict h2() {
  const SessionSetup setup;
  nf_runs = run_experiment(Condition::NF, TeacherStrategy::RandomStart, setup, 30);
  std::vector<double> ef, nf;
  for (const auto& r : ef_runs) ef.push_back(r.num_demonstrations);
  for (const auto& r : nf_runs) nf.push_back(r.num_demonstrations);
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto mw = mann_whitney_u(ef, nf);
  const auto check = mann_whitney_u({1, 2, 3}, {4, 5, 6});
  const bool mw_ok = check.u == 0.0 && std::abs(check.p - 0.1) < 1e-12 && check.exact;
  const bool direction = mean(ef) < mean(nf) && mw.p < 0.05;
  return {direction && mw_ok && ef.size() == 30 && nf.size() == 30,
          fmt("demos EF %.2f vs NF %.2f, U = %.1f, p = %.4f (%s); reference U = %.0f, p = %.3f",
              mean(ef), mean(nf), mw.u, mw.p, mw.exact ? "exact" : "normal", check.u, check.p)};
}

Verdict replay_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("lfdx-accept-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  int sessions = 0, identical = 0;
  const std::pair<Condition, TeacherStrategy> plans[] = {{Condition::EF, TeacherStrategy::FeedbackResponsive},
                                                         {Condition::NF, TeacherStrategy::RandomStart},
                                                         {Condition::EF, TeacherStrategy::CoverageStart},
                                                         {Condition::NF, TeacherStrategy::FeedbackResponsive}};
  std::uint64_t seed = 100;
  for (const auto& [cond, strat] : plans) {
    SessionSetup setup;
    setup.session.condition = cond;
    setup.session.seed = seed++;
    const auto path = dir / ("s" + std::to_string(sessions) + ".jsonl");
    SessionRun run;
    {
      EventLog log(path);
      run = fixtures::record_session(setup, strat, log, "s" + std::to_string(sessions));
    }
    ++sessions;
    const auto result = replay(read_log(path));
    if (result.report && *result.report == run.report &&
        json(*result.report).dump() == json(run.report).dump())
      ++identical;
  }

  // A session driven through the request handler, replayed from its served log.
  {
    Api api;
    const auto created = json::parse(api.handle("POST", "/sessions", R"({"seed": 7, "condition": "NF"})").body);
    const std::string id = created.at("session_id"), token = created.at("token");
    const Headers auth{{kTokenHeader, token}};
    const auto post = [&](const std::string& route, const json& body) {
      return api.handle("POST", "/sessions/" + id + route, body.dump(), auth);
    };
    // Replays the events of a simulated session through the API.
    SessionSetup setup;
    setup.session.condition = Condition::NF;
    setup.session.seed = 7;
    const auto run = run_session(setup, TeacherStrategy::RandomStart);
    bool accepted = true;
    for (const auto& e : run.events) {
      const json j = event_json(e);
      const std::string type = j.at("type");
      ApiResponse r;
      if (type == "demo_reset") r = post("/demo/reset", j);
      else if (type == "demo_step") r = post("/demo/step", j);
      else if (type == "set_complete") r = post("/set/complete", json::object());
      else if (type == "explanation_ack") r = post("/explanation/ack", json::object());
      else if (type == "survey_submitted") r = post("/survey", j.at("response"));
      else {
        json p = j;
        p["kind"] = json::parse(api.handle("GET", "/sessions/" + id, "", auth).body)["pending_probes"]["kind"];
        r = post("/prediction", p);
      }
      accepted = accepted && r.status == 200;
    }
    const auto served = api.handle("GET", "/sessions/" + id + "/report", "", auth);
    const auto log = api.handle("GET", "/sessions/" + id + "/log", "", auth);
    ++sessions;
    if (accepted && served.status == 200) {
      const auto result = replay(parse_log(log.body));
      if (result.report && json(*result.report).dump() == served.body) ++identical;
    }
  }
  std::filesystem::remove_all(dir);
  return {identical == sessions, fmt("%d/%d recorded sessions replay to identical reports", identical, sessions)};
}

Verdict ef_terminates() {
  int early = 0;
  for (const auto& r : ef_runs) early += r.task_complete ? 1 : 0;
  return {early == 30 && ef_runs.size() == 30, fmt("%d/30 EF + FeedbackResponsive seeds stop before the cap", early)};
}

Verdict nf_hits_cap() {
  int capped = 0;
  for (const auto& r : nf_runs) capped += r.task_complete ? 0 : 1;
  return {capped > 0, fmt("%d/30 NF + RandomStart seeds hit the 10-set cap", capped)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  const std::vector<Criterion> criteria{
      {"IRL gradient check", 30, gradient_check},
      {"Feature matching", 60, feature_matching},
      {"Value iteration oracle", 0, value_iteration_oracle},
      {"Rollout termination", 0, rollout_termination},
      {"Sampling rule", 0, sampling_rule},
      {"Noise marginal", 0, noise_marginal},
      {"H1 directional", 300, h1},
      {"H2 directional", 0, h2},
      {"Replay determinism", 0, replay_determinism},
      {"Supplementary: EF sessions stop early", 0, ef_terminates},
      {"Supplementary: NF sessions reach the cap", 0, nf_hits_cap},
  };
  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double t = seconds_since(t0);
    const bool in_time = c.limit_s <= 0 || t < c.limit_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::string timing = fmt("%.1f s", t);
    if (c.limit_s > 0) timing += fmt(", limit %.0f s", c.limit_s);
    std::printf("[%s] %s: %s (%s)\n", pass ? "PASS" : "FAIL", c.name.c_str(), v.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d checks, %d failed\n", ran, failed);
  return failed == 0 ? 0 : 1;
}
