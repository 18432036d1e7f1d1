#include "lfdx/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lfdx/event_log.hpp"
#include "lfdx/metrics.hpp"
#include "lfdx/serialize.hpp"
#include "lfdx/server.hpp"
#include "lfdx/simteacher.hpp"

namespace lfdx::cli {

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string reports_csv(const std::vector<MetricsReport>& reports) {
  std::string text = join(report_csv_header()) + "\n";
  for (const auto& r : reports) text += join(report_csv_row(r)) + "\n";
  return text;
}

struct ExperimentArgs {
  std::string config;
  std::string condition;
  std::string strategy;
  int seeds = 0;
  int threads = -1;
  std::string out;
};

int run_experiment_cmd(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  if (!a.config.empty()) cfg = load_experiment_config(a.config);
  Condition condition = cfg.setup.session.condition;
  if (!a.condition.empty()) {
    std::string upper = a.condition;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    condition = parse_condition(upper);
  }
  std::optional<TeacherStrategy> strategy = cfg.strategy;
  if (!a.strategy.empty()) strategy = parse_strategy(a.strategy);
  if (!strategy) {
    err << "run-experiment: no teacher strategy (use --strategy or set \"strategy\" in the config)\n";
    return kUsage;
  }
  const int seeds = a.seeds > 0 ? a.seeds : cfg.seeds.value_or(0);
  if (seeds < 1) {
    err << "run-experiment: no seed count (use --seeds or set \"seeds\" in the config)\n";
    return kUsage;
  }
  const int threads = a.threads >= 0 ? a.threads : cfg.threads;
  const auto reports = run_experiment(condition, *strategy, cfg.setup, seeds, threads);
  const std::string text = reports_csv(reports);
  if (a.out.empty()) {
    out << text;
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    f << text;
    err << "wrote " << reports.size() << " rows to " << a.out << "\n";
  }
  return kOk;
}

int replay_cmd(const std::string& path, std::ostream& out) {
  const auto result = replay(read_log(path));
  if (result.report) {
    out << json(*result.report).dump(2) << "\n";
  } else {
    out << json{{"session_id", result.session_id},
                {"phase", to_string(result.state.phase)},
                {"records", result.last_seq}}
               .dump(2)
        << "\n";
  }
  return kOk;
}

int report_cmd(const std::string& path, const std::string& format, std::ostream& out, std::ostream& err) {
  const auto result = replay(read_log(path));
  if (!result.report) {
    err << "report: session " << result.session_id << " is not finished (phase "
        << to_string(result.state.phase) << ")\n";
    return kEngine;
  }
  if (format == "json")
    out << json(*result.report).dump(2) << "\n";
  else
    out << reports_csv({*result.report});
  return kOk;
}

int compare_cmd(const std::string& a, const std::string& b, const std::string& metric, std::ostream& out) {
  const auto xs = read_csv_column(read_file(a), metric);
  const auto ys = read_csv_column(read_file(b), metric);
  const auto mw = mann_whitney_u(xs, ys);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  out << "metric " << metric << "\n"
      << "n_a " << xs.size() << " mean_a " << mean(xs) << "\n"
      << "n_b " << ys.size() << " mean_b " << mean(ys) << "\n"
      << "U " << mw.u << "\n"
      << "p " << mw.p << " (" << (mw.exact ? "exact" : "normal approximation") << ")\n";
  return kOk;
}

}  // namespace

std::vector<double> read_csv_column(const std::string& text, const std::string& column) {
  const std::string name = column == "demos" ? "num_demonstrations" : column;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV is empty");
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument("CSV has no column " + name);
  const auto idx = static_cast<std::size_t>(it - header.begin());
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (idx >= cells.size()) throw std::invalid_argument("CSV row is missing column " + name);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cells[idx], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cells[idx].size() || used == 0)
      throw std::invalid_argument("non-numeric value \"" + cells[idx] + "\" in column " + name);
    values.push_back(v);
  }
  return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-from-demonstration workbench with explanatory feedback", "lfdx"};
  app.require_subcommand(1);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "data";
  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Host teaching sessions over HTTP");
  serve_cmd->add_option("--port", port, "TCP port")->capture_default_str();
  serve_cmd->add_option("--data", data_dir, "Directory for session logs")->capture_default_str();
  serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--config", serve_config, "Experiment config whose setup seeds new sessions");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("run-experiment", "Run simulated-teacher sessions and write a CSV");
  exp_cmd->add_option("--config", exp.config, "Experiment config (JSON)");
  exp_cmd->add_option("--condition", exp.condition, "ef or nf")
      ->check(CLI::IsMember({"ef", "nf", "EF", "NF"}));
  exp_cmd->add_option("--strategy", exp.strategy, "random, coverage or responsive")
      ->check(CLI::IsMember({"random", "coverage", "responsive"}));
  exp_cmd->add_option("--seeds", exp.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--threads", exp.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  exp_cmd->add_option("--out", exp.out, "CSV path (default stdout)");

  std::string log_path;
  auto* replay_sub = app.add_subcommand("replay", "Re-derive a session from its log and verify it");
  replay_sub->add_option("--log", log_path, "Session log (JSON lines)")->required();

  std::string report_log;
  std::string format = "json";
  auto* report_sub = app.add_subcommand("report", "Print the metrics report of a finished session log");
  report_sub->add_option("--log", report_log, "Session log (JSON lines)")->required();
  report_sub->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  std::string csv_a, csv_b, metric;
  auto* compare_sub = app.add_subcommand("compare", "Mann-Whitney U test on one CSV column");
  compare_sub->add_option("--a", csv_a, "First CSV")->required();
  compare_sub->add_option("--b", csv_b, "Second CSV")->required();
  compare_sub->add_option("--metric", metric, "Column name")->required();

  std::vector<const char*> argv{"lfdx"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*serve_cmd) {
      ApiOptions options;
      options.data_dir = data_dir;
      if (!serve_config.empty()) options.defaults = load_experiment_config(serve_config).setup;
      Api api(std::move(options));
      err << "loaded " << api.session_count() << " session(s) from " << data_dir << "\n";
      return serve(api, host, port) ? kOk : kEngine;
    }
    if (*exp_cmd) return run_experiment_cmd(exp, out, err);
    if (*replay_sub) return replay_cmd(log_path, out);
    if (*report_sub) return report_cmd(report_log, format, out, err);
    if (*compare_sub) return compare_cmd(csv_a, csv_b, metric, out);
  } catch (const IntegrityError& e) {
    err << "integrity failure: " << e.what() << "\n"
        << "first divergent sequence number: " << e.seq() << "\n";
    return kIntegrity;
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kEngine;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lfdx::cli
