#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lfdx/protocol.hpp"

namespace lfdx {

struct PredictionSummary {
  int correct = 0;
  int count = 0;
  double mean_certainty = 0.0;
  double total_time = 0.0;

  bool operator==(const PredictionSummary&) const = default;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  Condition condition = Condition::EF;
  double final_performance = 0.0;
  int num_demonstrations = 0;
  int demo_sets = 0;
  double teaching_efficiency = 0.0;
  double early_stage_efficiency = 0.0;
  /// Session ended before the early-stage checkpoint; the efficiency above
  /// then falls back to the final teaching efficiency.
  bool early_stage_truncated = false;
  bool task_complete = false;

  PredictionSummary action_initial;
  PredictionSummary action_final;
  PredictionSummary goal_initial;
  PredictionSummary goal_final;
  /// Summed over both stages.
  double action_time_total = 0.0;
  double goal_time_total = 0.0;

  SurveyResponse survey;

  bool operator==(const MetricsReport&) const = default;
};

/// Number of completed sets after which early-stage efficiency is measured.
inline constexpr int kEarlyStageSets = 4;

/// Throws std::logic_error unless the session is Done.
MetricsReport compute_report(const SessionState& session);

struct MannWhitneyResult {
  double u = 0.0;  // statistic of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Largest pooled sample size for which the p-value is computed by exhaustive
/// enumeration; larger samples use the tie- and continuity-corrected normal
/// approximation.
inline constexpr std::size_t kExactPooledLimit = 16;

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);
MannWhitneyResult mann_whitney_u_exact(const std::vector<double>& a, const std::vector<double>& b);
MannWhitneyResult mann_whitney_u_normal(const std::vector<double>& a, const std::vector<double>& b);

/// Midranks (1-based, ties averaged) of `values`.
std::vector<double> midranks(const std::vector<double>& values);

/// Flat record helpers for CSV export.
std::vector<std::string> report_csv_header();
std::vector<std::string> report_csv_row(const MetricsReport& r);
/// Numeric column by header name; throws std::invalid_argument if unknown.
double report_metric(const MetricsReport& r, const std::string& column);

}  // namespace lfdx
