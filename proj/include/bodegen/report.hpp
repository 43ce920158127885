#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bodegen/bo_loop.hpp"

namespace bodegen {

enum class DifficultyLabel { Easy, Medium, Hard };
std::string_view to_string(DifficultyLabel label);

/// Bucket by the accuracy of the unmodified prompt: easy above 0.67, hard below 0.30,
/// medium on [0.30, 0.67] including both ends.
struct DifficultyBucket {
  DifficultyLabel label = DifficultyLabel::Medium;
  double initial_accuracy = 0.0;
};

/// Throws InvalidArgument outside [0, 1].
DifficultyBucket classify(double initial_accuracy);

/// Summary of one log.
struct LogSummary {
  std::string task;
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  double best_objective = 0.0;
  double best_pass_at_1 = 0.0;
  std::string best_prompt;
  bool solved = false;
  std::string stop_reason;
};

struct BucketAggregate {
  DifficultyLabel label = DifficultyLabel::Medium;
  std::string mode;
  std::size_t runs = 0;
  double mean_best_objective = 0.0;
  double mean_best_pass_at_1 = 0.0;
  /// Runs whose best objective reached 1.0.
  double fraction_solved = 0.0;
};

struct Report {
  std::vector<LogSummary> runs;
  /// Only for tasks that have a baseline-initial log; the first such log sets the bucket.
  std::vector<BucketAggregate> buckets;
  /// Overall totals per mode over all runs.
  std::vector<BucketAggregate> totals;
};

LogSummary summarize(const RunLog& log);
Report build_report(const std::vector<RunLog>& logs);

/// Human-readable table.
std::string format_report(const Report& report);

/// mode,task,seed,trial,iteration,objective,incumbent
std::string incumbent_curves_csv(const std::vector<RunLog>& logs);

}  // namespace bodegen
