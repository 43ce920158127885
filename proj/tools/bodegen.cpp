// Command-line front end: run, baseline, report.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "bodegen/backend.hpp"
#include "bodegen/bo_loop.hpp"
#include "bodegen/report.hpp"
#include "bodegen/run_log.hpp"
#include "bodegen/task.hpp"

namespace {

using namespace bodegen;

struct Options {
  std::string task_path;
  RunConfig config;
  std::string backend = "sim";
  std::string kernel = "matern52";
  std::string box = "auto";
  int timeout_ms = 5000;
  std::string out;
};

void add_run_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("task", o.task_path, "Task file (JSON)")->required()->check(CLI::ExistingFile);
  cmd.add_option("--backend", o.backend, "Model backend")->check(CLI::IsMember({"sim", "remote"}));
  cmd.add_option("--endpoint", o.config.endpoint, "Bridge URL for the remote backend (BODEGEN_ENDPOINT overrides)");
  cmd.add_option("--seed", o.config.seed, "Run seed");
  cmd.add_option("--m", o.config.m, "Soft-prompt vectors per candidate");
  cmd.add_option("--d", o.config.d, "Embedding dimension");
  cmd.add_option("--k", o.config.k, "Projected dimension per vector");
  cmd.add_option("--n-init", o.config.n_init, "Initial uniform samples");
  cmd.add_option("--t-max", o.config.t_max, "Optimization iterations");
  cmd.add_option("--n-candidates", o.config.n_candidates, "Acquisition candidates per iteration");
  cmd.add_option("--n-code-samples", o.config.n_code_samples, "Programs sampled per prompt");
  cmd.add_option("--kernel", o.kernel, "GP kernel")->check(CLI::IsMember({"matern52", "rbf"}));
  cmd.add_option("--restarts", o.config.restarts, "Hyperparameter fit restarts");
  cmd.add_option("--timeout-per-case", o.timeout_ms, "Wall time per test case, milliseconds");
  cmd.add_option("--workers", o.config.limits.workers, "Test cases run concurrently");
  cmd.add_option("--box", o.box, "Search box: fixed [-1,1], table statistics (mean +- 3 std), or auto")
      ->check(CLI::IsMember({"auto", "fixed", "table-stats"}));
  cmd.add_flag("--per-slot-projection", o.config.per_slot_projection, "Separate projection matrix per slot");
  cmd.add_option("--out", o.out, "Run log path (JSONL)");
}

void finish_config(Options& o) {
  if (const char* env = std::getenv("BODEGEN_ENDPOINT"); env && *env) o.config.endpoint = env;
  o.config.backend = o.backend == "remote" ? BackendKind::Remote : BackendKind::Simulator;
  o.config.kernel = kernel_family_from_string(o.kernel);
  o.config.limits.wall_time_per_case = std::chrono::milliseconds(o.timeout_ms);
  if (o.box == "auto")
    o.config.box_policy = o.config.backend == BackendKind::Remote ? BoxPolicy::TableStats : BoxPolicy::Fixed;
  else
    o.config.box_policy = o.box == "table-stats" ? BoxPolicy::TableStats : BoxPolicy::Fixed;
  o.config.validate();
}

std::unique_ptr<Generator> make_backend(const RunConfig& config, const TaskFile& task) {
  if (config.backend == BackendKind::Remote) {
    RemoteOptions r;
    r.endpoint = config.endpoint;
    r.dim = config.d;
    return std::make_unique<RemoteBackend>(r);
  }
  const SearchBox box = SearchBox::uniform(config.d, config.box_lower, config.box_upper);
  const auto spec = SimulatorSpec::make(config.m, box, derive_seed(config.seed, {stream::kTarget}),
                                        static_cast<int>(task.tests.cases.size()));
  return std::make_unique<SimulatorBackend>(spec, config.instruction);
}

std::string default_out(const RunLog& log) {
  return log.task_name + "." + log.mode + ".seed" + std::to_string(log.config.seed) + ".jsonl";
}

void print_outcome(const RunLog& log, const std::string& path) {
  const auto [prompt, objective] = best_prompt(log);
  const TrialRecord& best = log.trials[static_cast<std::size_t>(log.best_index)];
  std::cout << "best prompt: " << prompt << "\n"
            << "best objective: " << objective << "\n"
            << "pass@1: " << best.pass_at_1 << "\n"
            << "trials: " << log.trials.size() << "\n"
            << "stop reason: " << to_string(log.stop_reason) << "\n"
            << "log: " << path << "\n";
}

int error_exit(const char* type, const std::string& message, int code) {
  const nlohmann::json record = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << record.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization of code-generation prompts in embedding space"};
  app.require_subcommand(1);

  Options run_opts;
  auto* run_cmd = app.add_subcommand("run", "Optimize the prompt of one task");
  add_run_flags(*run_cmd, run_opts);

  Options base_opts;
  std::string mode_name = "initial";
  auto* base_cmd = app.add_subcommand("baseline", "Evaluate a baseline prompt strategy");
  add_run_flags(*base_cmd, base_opts);
  base_cmd->add_option("--mode", mode_name, "Baseline")->check(CLI::IsMember({"initial", "cot", "random"}));

  std::vector<std::string> log_paths;
  std::string csv_path;
  auto* report_cmd = app.add_subcommand("report", "Summarize run logs");
  report_cmd->add_option("logs", log_paths, "Run logs")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--csv", csv_path, "Write incumbent curves as CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd || *base_cmd) {
      Options& o = *run_cmd ? run_opts : base_opts;
      finish_config(o);
      const TaskFile task = load_task(o.task_path);
      auto backend = make_backend(o.config, task);
      RunLog log;
      if (*run_cmd) {
        log = run(o.config, task, *backend);
      } else {
        const BaselineMode mode = mode_name == "cot"      ? BaselineMode::Cot
                                  : mode_name == "random" ? BaselineMode::Random
                                                          : BaselineMode::Initial;
        log = run_baseline(mode, o.config, task, *backend);
      }
      const std::string path = o.out.empty() ? default_out(log) : o.out;
      write_run_log(log, path);
      if (log.trials.empty()) return error_exit("RunError", log.error.empty() ? "no trials" : log.error, 1);
      print_outcome(log, path);
      if (log.stop_reason == StopReason::Error) return error_exit("RunError", log.error, 1);
      return 0;
    }
    std::vector<RunLog> logs;
    for (const auto& p : log_paths) logs.push_back(load_run_log(p));
    std::cout << format_report(build_report(logs));
    if (!csv_path.empty()) {
      std::ofstream csv(csv_path);
      if (!csv) throw InvalidArgument("cannot open " + csv_path + " for writing");
      csv << incumbent_curves_csv(logs);
    }
    return 0;
  } catch (const ValidationError& e) {
    return error_exit("ValidationError", e.what(), 2);
  } catch (const ParseError& e) {
    return error_exit("ParseError", e.what(), 2);
  } catch (const TransportError& e) {
    return error_exit("TransportError", e.what(), 3);
  } catch (const bodegen::Error& e) {
    return error_exit("Error", e.what(), 1);
  } catch (const std::exception& e) {
    return error_exit("InternalError", e.what(), 1);
  }
}
