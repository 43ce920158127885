#include "bodegen/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace bodegen {

std::string_view to_string(DifficultyLabel label) {
  switch (label) {
    case DifficultyLabel::Easy: return "easy";
    case DifficultyLabel::Medium: return "medium";
    case DifficultyLabel::Hard: return "hard";
  }
  return "medium";
}

DifficultyBucket classify(double initial_accuracy) {
  if (!(initial_accuracy >= 0.0 && initial_accuracy <= 1.0))
    throw InvalidArgument("initial accuracy must lie in [0, 1]");
  DifficultyBucket b;
  b.initial_accuracy = initial_accuracy;
  if (initial_accuracy > 0.67) b.label = DifficultyLabel::Easy;
  else if (initial_accuracy < 0.30) b.label = DifficultyLabel::Hard;
  else b.label = DifficultyLabel::Medium;
  return b;
}

LogSummary summarize(const RunLog& log) {
  LogSummary s;
  s.task = log.task_name;
  s.mode = log.mode;
  s.seed = log.config.seed;
  s.trials = log.trials.size();
  s.stop_reason = std::string(to_string(log.stop_reason));
  if (!log.trials.empty()) {
    RunLog copy;
    copy.trials = log.trials;
    copy.update_best();
    const TrialRecord& best = log.trials[static_cast<std::size_t>(copy.best_index)];
    s.best_objective = best.objective;
    s.best_pass_at_1 = best.pass_at_1;
    s.best_prompt = best.prompt_text;
    s.solved = best.objective == 1.0;
  }
  return s;
}

namespace {

struct Accumulator {
  std::size_t runs = 0;
  double objective = 0.0, pass = 0.0, solved = 0.0;

  void add(const LogSummary& s) {
    ++runs;
    objective += s.best_objective;
    pass += s.best_pass_at_1;
    solved += s.solved ? 1.0 : 0.0;
  }
  BucketAggregate finish(DifficultyLabel label, const std::string& mode) const {
    const double n = static_cast<double>(runs);
    return {label, mode, runs, objective / n, pass / n, solved / n};
  }
};

}  // namespace

Report build_report(const std::vector<RunLog>& logs) {
  Report report;
  std::map<std::string, DifficultyBucket> bucket_of;
  for (const RunLog& log : logs) {
    report.runs.push_back(summarize(log));
    if (log.mode == "baseline-initial" && !log.trials.empty() && !bucket_of.count(log.task_name))
      bucket_of.emplace(log.task_name, classify(log.trials.front().objective));
  }

  std::map<std::pair<int, std::string>, Accumulator> by_bucket;
  std::map<std::string, Accumulator> by_mode;
  for (const LogSummary& s : report.runs) {
    by_mode[s.mode].add(s);
    if (auto it = bucket_of.find(s.task); it != bucket_of.end())
      by_bucket[{static_cast<int>(it->second.label), s.mode}].add(s);
  }
  for (const auto& [key, acc] : by_bucket)
    report.buckets.push_back(acc.finish(static_cast<DifficultyLabel>(key.first), key.second));
  for (const auto& [mode, acc] : by_mode) report.totals.push_back(acc.finish(DifficultyLabel::Medium, mode));
  return report;
}

std::string format_report(const Report& report) {
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-20s %-18s %6s %6s %10s %8s %s\n", "task", "mode", "seed", "trials", "best_obj",
                "pass@1", "stop");
  out << line;
  for (const LogSummary& s : report.runs) {
    std::snprintf(line, sizeof line, "%-20s %-18s %6llu %6zu %10.4f %8.4f %s\n", s.task.c_str(), s.mode.c_str(),
                  static_cast<unsigned long long>(s.seed), s.trials, s.best_objective, s.best_pass_at_1,
                  s.stop_reason.c_str());
    out << line;
  }
  if (!report.buckets.empty()) {
    out << "\nby difficulty (initial-prompt accuracy)\n";
    std::snprintf(line, sizeof line, "%-8s %-18s %5s %10s %8s %8s\n", "bucket", "mode", "runs", "mean_obj", "pass@1",
                  "solved");
    out << line;
    for (const BucketAggregate& b : report.buckets) {
      std::snprintf(line, sizeof line, "%-8s %-18s %5zu %10.4f %8.4f %8.4f\n", std::string(to_string(b.label)).c_str(),
                    b.mode.c_str(), b.runs, b.mean_best_objective, b.mean_best_pass_at_1, b.fraction_solved);
      out << line;
    }
  }
  out << "\ntotals\n";
  std::snprintf(line, sizeof line, "%-18s %5s %10s %8s %8s\n", "mode", "runs", "mean_obj", "pass@1", "solved");
  out << line;
  for (const BucketAggregate& b : report.totals) {
    std::snprintf(line, sizeof line, "%-18s %5zu %10.4f %8.4f %8.4f\n", b.mode.c_str(), b.runs, b.mean_best_objective,
                  b.mean_best_pass_at_1, b.fraction_solved);
    out << line;
  }
  return out.str();
}

std::string incumbent_curves_csv(const std::vector<RunLog>& logs) {
  std::ostringstream out;
  out << "mode,task,seed,trial,iteration,objective,incumbent\n";
  char num[64];
  for (const RunLog& log : logs) {
    double incumbent = -INFINITY;
    for (std::size_t i = 0; i < log.trials.size(); ++i) {
      const TrialRecord& t = log.trials[i];
      incumbent = std::max(incumbent, t.objective);
      out << log.mode << ',' << log.task_name << ',' << log.config.seed << ',' << i << ',' << t.iteration << ',';
      std::snprintf(num, sizeof num, "%.17g", t.objective);
      out << num << ',';
      std::snprintf(num, sizeof num, "%.17g", incumbent);
      out << num << '\n';
    }
  }
  return out.str();
}

}  // namespace bodegen
