#include <cmath>

#include "doctest.h"
#include "lfdx/metrics.hpp"
#include "support.hpp"

using namespace lfdx;

namespace {

// U by pair counting: each (a, b) pair scores 1 when a wins and 1/2 on a tie.
double pair_count_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

// Two-sided permutation p-value over every split of the pooled sample.
double enumerated_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), m = a.size();
  const double centre = static_cast<double>(a.size() * b.size()) / 2.0;
  const double observed = std::abs(pair_count_u(a, b) - centre);
  long extreme = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) (mask >> i & 1u ? x : y).push_back(pooled[i]);
    ++total;
    if (std::abs(pair_count_u(x, y) - centre) >= observed - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

SessionState finished(int sets, int per_set, std::vector<double> history) {
  SessionSetup setup;
  setup.session.demos_per_set = per_set;
  setup.session.seed = 77;
  SessionState st;
  st.setup = std::make_shared<const SessionSetup>(setup);
  st.phase = Phase::Done;
  st.demo_sets_completed = sets;
  st.demos.resize(static_cast<std::size_t>(sets * per_set));
  st.performance_history = std::move(history);
  st.task_complete = st.performance_history.back() > 0.95;
  return st;
}

PredictionRecord record(PredictionKind kind, Stage stage, bool correct, int certainty, double elapsed) {
  PredictionRecord r;
  r.kind = kind;
  r.stage = stage;
  r.correct = correct;
  r.certainty = certainty;
  r.elapsed = elapsed;
  return r;
}

}  // namespace

TEST_CASE("efficiency figures") {
  auto st = finished(5, 5, {0.2, 0.5, 0.7, 0.8, 1.0});
  const auto r = compute_report(st);
  CHECK(r.num_demonstrations == 25);
  CHECK(r.final_performance == 1.0);
  CHECK(r.teaching_efficiency == 1.0 / 25);
  CHECK(r.teaching_efficiency == doctest::Approx(0.04));
  CHECK(r.early_stage_efficiency == doctest::Approx(0.04));
  CHECK_FALSE(r.early_stage_truncated);
  CHECK(r.task_complete);
  CHECK(r.seed == 77);

  const auto short_run = compute_report(finished(2, 5, {0.5, 0.96}));
  CHECK(short_run.early_stage_truncated);
  CHECK(short_run.early_stage_efficiency == short_run.teaching_efficiency);
  CHECK(short_run.teaching_efficiency == 0.96 / 10);
}

TEST_CASE("prediction summaries") {
  auto st = finished(1, 5, {1.0});
  for (int i = 0; i < 5; ++i) {
    st.predictions.push_back(record(PredictionKind::Action, Stage::Initial, true, 2 + i, 1.5));
    st.predictions.push_back(record(PredictionKind::Goal, Stage::Initial, i < 2, 7, 3.0));
    st.predictions.push_back(record(PredictionKind::Action, Stage::Final, i == 0, 1, 0.5));
    st.predictions.push_back(record(PredictionKind::Goal, Stage::Final, false, 4, 1.0));
  }
  st.survey = SurveyResponse{{7, 6, 5, 1}};
  const auto r = compute_report(st);
  CHECK(r.action_initial.correct == 5);
  CHECK(r.action_initial.count == 5);
  CHECK(r.action_initial.mean_certainty == 4.0);
  CHECK(r.action_initial.total_time == 7.5);
  CHECK(r.goal_initial.correct == 2);
  CHECK(r.action_final.correct == 1);
  CHECK(r.goal_final.correct == 0);
  CHECK(r.goal_final.mean_certainty == 4.0);
  CHECK(r.action_time_total == 10.0);
  CHECK(r.goal_time_total == 20.0);
  CHECK(r.survey.answers == std::array<int, 4>{7, 6, 5, 1});
}

TEST_CASE("reports need a finished session") {
  auto st = finished(1, 5, {1.0});
  st.phase = Phase::Survey;
  CHECK_THROWS_AS(compute_report(st), std::logic_error);
}

TEST_CASE("Mann-Whitney examples") {
  const auto r = mann_whitney_u({1, 2, 3}, {4, 5, 6});
  CHECK(r.u == 0.0);
  CHECK(r.exact);
  CHECK(r.p == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(mann_whitney_u({1, 2}, {1, 2}).u == 2.0);
  CHECK(mann_whitney_u({1, 2}, {1, 2}).p == doctest::Approx(1.0));
  CHECK(midranks({3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
  CHECK_THROWS(mann_whitney_u({}, {1.0}));
  CHECK_THROWS(mann_whitney_u({NAN}, {1.0}));
}

TEST_CASE("Mann-Whitney statistic and exact p against enumeration") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t na = 1 + rng.below(7), nb = 1 + rng.below(7);
    std::vector<double> a, b;
    // Few distinct values so that ties are common.
    for (std::size_t i = 0; i < na; ++i) a.push_back(static_cast<double>(rng.below(6)));
    for (std::size_t i = 0; i < nb; ++i) b.push_back(static_cast<double>(rng.below(6)));
    const auto r = mann_whitney_u(a, b);
    const auto flipped = mann_whitney_u(b, a);
    CHECK(r.exact);
    CHECK(r.u == pair_count_u(a, b));
    CHECK(r.u + flipped.u == static_cast<double>(na * nb));
    CHECK(r.p == doctest::Approx(enumerated_p(a, b)).epsilon(1e-12));
    CHECK(r.p > 0.0);
    CHECK(r.p <= 1.0);
    CHECK(mann_whitney_u(a, a).u == static_cast<double>(na * na) / 2.0);
  }
}

TEST_CASE("normal approximation tracks the exact p on 8 + 8 samples") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> a, b;
    const double shift = static_cast<double>(trial % 5) * 0.4;
    for (int i = 0; i < 8; ++i) a.push_back(rng.uniform01() * 3.0);
    for (int i = 0; i < 8; ++i) b.push_back(rng.uniform01() * 3.0 + shift);
    const auto exact = mann_whitney_u_exact(a, b);
    const auto approx = mann_whitney_u_normal(a, b);
    CHECK(exact.u == approx.u);
    CHECK(std::abs(exact.p - approx.p) < 0.02);
    CHECK(approx.p > 0.0);
    CHECK(approx.p <= 1.0);
  }
  // Larger samples switch to the approximation.
  std::vector<double> big_a(20), big_b(20);
  for (int i = 0; i < 20; ++i) big_a[static_cast<std::size_t>(i)] = i, big_b[static_cast<std::size_t>(i)] = i + 0.5;
  CHECK_FALSE(mann_whitney_u(big_a, big_b).exact);
}

TEST_CASE("CSV record") {
  auto st = finished(4, 5, {0.1, 0.2, 0.4, 0.98});
  const auto r = compute_report(st);
  const auto header = report_csv_header();
  const auto row = report_csv_row(r);
  CHECK(header.size() == row.size());
  CHECK(header[0] == "seed");
  CHECK(header[1] == "condition");
  CHECK(row[1] == "EF");
  CHECK(std::find(header.begin(), header.end(), "num_demonstrations") != header.end());
  CHECK(report_metric(r, "num_demonstrations") == 20.0);
  CHECK(report_metric(r, "early_stage_efficiency") == doctest::Approx(0.98 / 20));
  CHECK_THROWS(report_metric(r, "nope"));
}
