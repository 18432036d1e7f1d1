#include "lfdx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace lfdx {

namespace {

void accumulate(PredictionSummary& summary, const PredictionRecord& r) {
  summary.correct += r.correct ? 1 : 0;
  ++summary.count;
  summary.mean_certainty += r.certainty;  // normalised below
  summary.total_time += r.elapsed;
}

void finish(PredictionSummary& summary) {
  if (summary.count > 0) summary.mean_certainty /= summary.count;
}

double rank_sum_u(const std::vector<double>& ranks, std::size_t n_a) {
  double r_a = 0.0;
  for (std::size_t i = 0; i < n_a; ++i) r_a += ranks[i];
  const double n = static_cast<double>(n_a);
  return r_a - n * (n + 1.0) / 2.0;
}

std::vector<double> pooled(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  for (double x : all) {
    if (!std::isfinite(x)) throw std::invalid_argument("mann_whitney_u: non-finite value");
  }
  return all;
}

}  // namespace

MetricsReport compute_report(const SessionState& session) {
  if (session.phase != Phase::Done) throw std::logic_error("compute_report: session is not finished");
  if (session.performance_history.empty())
    throw std::logic_error("compute_report: no demonstration set was completed");
  const SessionConfig& cfg = session.config();
  MetricsReport r;
  r.seed = cfg.seed;
  r.condition = cfg.condition;
  r.final_performance = session.performance_history.back();
  r.num_demonstrations = session.total_demonstrations();
  r.demo_sets = session.demo_sets_completed;
  r.task_complete = session.task_complete;
  r.teaching_efficiency = r.final_performance / r.num_demonstrations;
  if (session.demo_sets_completed >= kEarlyStageSets) {
    r.early_stage_efficiency = session.performance_history[kEarlyStageSets - 1] /
                               static_cast<double>(kEarlyStageSets * cfg.demos_per_set);
  } else {
    r.early_stage_efficiency = r.teaching_efficiency;
    r.early_stage_truncated = true;
  }
  for (const auto& p : session.predictions) {
    const bool initial = p.stage == Stage::Initial;
    if (p.kind == PredictionKind::Action) {
      accumulate(initial ? r.action_initial : r.action_final, p);
      r.action_time_total += p.elapsed;
    } else {
      accumulate(initial ? r.goal_initial : r.goal_final, p);
      r.goal_time_total += p.elapsed;
    }
  }
  for (auto* s : {&r.action_initial, &r.action_final, &r.goal_initial, &r.goal_final}) finish(*s);
  if (session.survey) r.survey = *session.survey;
  return r;
}

std::vector<double> midranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
    i = j;
  }
  return ranks;
}

MannWhitneyResult mann_whitney_u_exact(const std::vector<double>& a, const std::vector<double>& b) {
  const auto all = pooled(a, b);
  if (all.size() > 24) throw std::invalid_argument("mann_whitney_u_exact: sample too large to enumerate");
  const auto ranks = midranks(all);
  const std::size_t n = all.size(), n_a = a.size();
  const double u_obs = rank_sum_u(ranks, n_a);
  const double mean = static_cast<double>(n_a * b.size()) / 2.0;
  const double observed = std::abs(u_obs - mean);
  const double offset = static_cast<double>(n_a) * (n_a + 1) / 2.0;

  // Every assignment of n_a pooled ranks to the first sample is equally likely
  // under the null hypothesis.
  long extreme = 0, total = 0;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t next, std::size_t left,
                                                                   double sum) {
    if (left == 0) {
      ++total;
      if (std::abs(sum - offset - mean) >= observed - 1e-9) ++extreme;
      return;
    }
    for (std::size_t i = next; i + left <= n; ++i) walk(i + 1, left - 1, sum + ranks[i]);
  };
  walk(0, n_a, 0.0);
  return {u_obs, static_cast<double>(extreme) / static_cast<double>(total), true};
}

MannWhitneyResult mann_whitney_u_normal(const std::vector<double>& a, const std::vector<double>& b) {
  const auto all = pooled(a, b);
  const auto ranks = midranks(all);
  const double n_a = static_cast<double>(a.size()), n_b = static_cast<double>(b.size());
  const double n = n_a + n_b;
  const double u = rank_sum_u(ranks, a.size());
  const double mean = n_a * n_b / 2.0;

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double variance = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(variance > 0.0)) return {u, 1.0, false};
  const double z = std::max(std::abs(u - mean) - 0.5, 0.0) / std::sqrt(variance);
  return {u, std::min(1.0, std::erfc(z / std::sqrt(2.0))), false};
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() + b.size() <= kExactPooledLimit) return mann_whitney_u_exact(a, b);
  return mann_whitney_u_normal(a, b);
}

namespace {

struct Column {
  const char* name;
  std::function<double(const MetricsReport&)> get;
};

const std::vector<Column>& numeric_columns() {
  static const std::vector<Column> cols = {
      {"final_performance", [](const MetricsReport& r) { return r.final_performance; }},
      {"num_demonstrations", [](const MetricsReport& r) { return double(r.num_demonstrations); }},
      {"demo_sets", [](const MetricsReport& r) { return double(r.demo_sets); }},
      {"teaching_efficiency", [](const MetricsReport& r) { return r.teaching_efficiency; }},
      {"early_stage_efficiency", [](const MetricsReport& r) { return r.early_stage_efficiency; }},
      {"early_stage_truncated", [](const MetricsReport& r) { return r.early_stage_truncated ? 1.0 : 0.0; }},
      {"task_complete", [](const MetricsReport& r) { return r.task_complete ? 1.0 : 0.0; }},
      {"action_accuracy_initial", [](const MetricsReport& r) { return double(r.action_initial.correct); }},
      {"action_accuracy_final", [](const MetricsReport& r) { return double(r.action_final.correct); }},
      {"goal_accuracy_initial", [](const MetricsReport& r) { return double(r.goal_initial.correct); }},
      {"goal_accuracy_final", [](const MetricsReport& r) { return double(r.goal_final.correct); }},
      {"action_certainty_initial", [](const MetricsReport& r) { return r.action_initial.mean_certainty; }},
      {"action_certainty_final", [](const MetricsReport& r) { return r.action_final.mean_certainty; }},
      {"goal_certainty_initial", [](const MetricsReport& r) { return r.goal_initial.mean_certainty; }},
      {"goal_certainty_final", [](const MetricsReport& r) { return r.goal_final.mean_certainty; }},
      {"action_time_total", [](const MetricsReport& r) { return r.action_time_total; }},
      {"goal_time_total", [](const MetricsReport& r) { return r.goal_time_total; }},
      {"survey_q1", [](const MetricsReport& r) { return double(r.survey.answers[0]); }},
      {"survey_q2", [](const MetricsReport& r) { return double(r.survey.answers[1]); }},
      {"survey_q3", [](const MetricsReport& r) { return double(r.survey.answers[2]); }},
      {"survey_q4", [](const MetricsReport& r) { return double(r.survey.answers[3]); }},
  };
  return cols;
}

std::string format_number(double x) {
  if (x == std::floor(x) && std::abs(x) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", x);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::vector<std::string> report_csv_header() {
  std::vector<std::string> h{"seed", "condition"};
  for (const auto& c : numeric_columns()) h.emplace_back(c.name);
  return h;
}

std::vector<std::string> report_csv_row(const MetricsReport& r) {
  std::vector<std::string> row{std::to_string(r.seed), std::string(to_string(r.condition))};
  for (const auto& c : numeric_columns()) row.push_back(format_number(c.get(r)));
  return row;
}

double report_metric(const MetricsReport& r, const std::string& column) {
  if (column == "seed") return static_cast<double>(r.seed);
  for (const auto& c : numeric_columns()) {
    if (column == c.name) return c.get(r);
  }
  throw std::invalid_argument("unknown metric column: " + column);
}

}  // namespace lfdx
