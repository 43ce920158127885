#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bodegen/acquisition.hpp"
#include "bodegen/backend.hpp"
#include "bodegen/embedding.hpp"
#include "bodegen/evaluator.hpp"
#include "bodegen/gp.hpp"
#include "bodegen/task.hpp"

namespace bodegen {

/// Rephrasing instruction prepended, as embeddings, to every candidate.
inline constexpr std::string_view kDefaultInstruction =
    "Your task is to rephrase/reformulate the code prompt given below to achieve a higher score on code "
    "generation by a large language model. Please provide the rephrased prompt in one block.";

inline constexpr std::string_view kCotSuffix = " Let's think step by step";

enum class BackendKind { Simulator, Remote };
enum class BoxPolicy { Fixed, TableStats };

struct RunConfig {
  int m = 4;
  int d = 4096;
  int k = 64;
  int n_init = 20;
  int t_max = 50;
  int n_candidates = 10000;
  int n_code_samples = 3;
  std::uint64_t seed = 0;
  KernelFamily kernel = KernelFamily::Matern52;
  int restarts = 5;
  BackendKind backend = BackendKind::Simulator;
  std::string endpoint;
  /// Fixed: [box_lower, box_upper] per coordinate. TableStats: mean +- 3 std from the bridge.
  BoxPolicy box_policy = BoxPolicy::Fixed;
  double box_lower = -1.0;
  double box_upper = 1.0;
  bool per_slot_projection = false;
  std::string instruction{kDefaultInstruction};
  ExecutionLimits limits;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
  /// GP input dimension m * k.
  int search_dim() const { return m * k; }
};

enum class StopReason { PerfectAccuracy, BudgetExhausted, Error };
std::string_view to_string(StopReason reason);
StopReason stop_reason_from_string(std::string_view name);

/// One evaluated prompt. `iteration` is negative for initialization points (-n_init .. -1),
/// 1..t_max for BO steps and 0 for fixed-prompt baselines.
struct TrialRecord {
  int iteration = 0;
  std::optional<EmbeddingBlock> candidate;
  std::optional<SearchPoint> search_point;
  std::string prompt_text;
  std::vector<std::string> code_samples;
  std::vector<double> per_sample_accuracy;
  double objective = 0.0;
  double pass_at_1 = 0.0;
  /// "ok", or a short description of the generation or evaluation failure.
  std::string status = "ok";
  double wall_time_ms = 0.0;
};

struct RunLog {
  RunConfig config;
  /// "bo", "baseline-initial", "baseline-cot" or "baseline-random".
  std::string mode = "bo";
  std::string task_name;
  std::uint64_t projection_seed = 0;
  std::vector<TrialRecord> trials;
  int best_index = -1;
  StopReason stop_reason = StopReason::BudgetExhausted;
  std::string error;

  /// Recomputes best_index: highest objective, earliest on ties.
  void update_best();
};

/// Seed of the projection matrix for a run seed.
std::uint64_t projection_seed_for(std::uint64_t run_seed);

/// Search box the config asks for, querying the backend's table statistics when needed.
SearchBox make_search_box(const RunConfig& config, Generator& backend);

/// Decode -> generate -> test for one prompt. Backend errors reported by the bridge score 0
/// and are noted in `status`; persistent transport failures propagate.
class TrialEvaluator {
 public:
  TrialEvaluator(const RunConfig& config, const TaskFile& task, Generator& backend);

  TrialRecord evaluate_block(const EmbeddingBlock& block, int iteration);
  TrialRecord evaluate_prompt(const std::string& prompt, int iteration);

 private:
  void score_samples(TrialRecord& trial);

  const RunConfig& config_;
  const TaskFile& task_;
  Generator& backend_;
  EmbeddingSequence instruction_;
  EmbeddingSequence initial_prompt_;
};

/// State after the initialization phase.
struct InitState {
  GpDataset dataset;
  RunLog log;
  bool stopped = false;
};

/// Evaluates n_init uniform box samples; stops early on a perfect objective.
InitState initialize(const RunConfig& config, const TaskFile& task, Generator& backend);

/// The full optimization loop: initialization, then up to t_max rounds of fit, select over a
/// fresh candidate set, evaluate, and stop on a perfect objective.
RunLog run(const RunConfig& config, const TaskFile& task, Generator& backend);

/// Prompt and objective of the best trial. Throws InvalidArgument on an empty log.
std::pair<std::string, double> best_prompt(const RunLog& log);

enum class BaselineMode { Initial, Cot, Random };
std::string_view to_string(BaselineMode mode);

/// initial: p0 as-is; cot: p0 + " Let's think step by step"; random: n_init + t_max uniform box
/// samples through the full pipeline, the first n_init identical to run()'s initialization.
RunLog run_baseline(BaselineMode mode, const RunConfig& config, const TaskFile& task, Generator& backend);

}  // namespace bodegen
