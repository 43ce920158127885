#include "bodegen/bo_loop.hpp"

#include <chrono>
#include <map>

namespace bodegen {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void RunConfig::validate() const {
  require(m >= 1, "m must be >= 1");
  require(d >= 1, "d must be >= 1");
  require(k >= 1, "k must be >= 1");
  require(n_init >= 2, "n_init must be >= 2 (the surrogate needs two observations)");
  require(t_max >= 1, "t_max must be >= 1");
  require(n_candidates >= 1, "n_candidates must be >= 1");
  require(n_code_samples >= 1, "n_code_samples must be >= 1");
  require(restarts >= 1, "restarts must be >= 1");
  require(box_lower < box_upper, "box_lower must be < box_upper");
  require(limits.wall_time_per_case.count() > 0, "timeout_per_case must be > 0");
  require(backend != BackendKind::Remote || !endpoint.empty(), "remote backend needs an endpoint");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::PerfectAccuracy: return "perfect_accuracy";
    case StopReason::BudgetExhausted: return "budget_exhausted";
    case StopReason::Error: return "error";
  }
  return "error";
}

StopReason stop_reason_from_string(std::string_view name) {
  if (name == "perfect_accuracy") return StopReason::PerfectAccuracy;
  if (name == "budget_exhausted") return StopReason::BudgetExhausted;
  if (name == "error") return StopReason::Error;
  throw InvalidArgument("unknown stop reason '" + std::string(name) + "'");
}

std::string_view to_string(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::Initial: return "initial";
    case BaselineMode::Cot: return "cot";
    case BaselineMode::Random: return "random";
  }
  return "initial";
}

void RunLog::update_best() {
  best_index = -1;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (best_index < 0 || trials[i].objective > trials[static_cast<std::size_t>(best_index)].objective)
      best_index = static_cast<int>(i);
}

std::uint64_t projection_seed_for(std::uint64_t run_seed) { return derive_seed(run_seed, {stream::kProjection}); }

SearchBox make_search_box(const RunConfig& config, Generator& backend) {
  if (config.box_policy == BoxPolicy::TableStats) {
    const auto stats = backend.stats();
    if (!stats) throw InvalidArgument("backend has no embedding table statistics for the table-stats box policy");
    if (stats->dim != config.d)
      throw DimensionMismatch("embedding table has dimension " + std::to_string(stats->dim) + ", config says " +
                              std::to_string(config.d));
    return SearchBox::from_table_stats(stats->mean, stats->stddev);
  }
  return SearchBox::uniform(config.d, config.box_lower, config.box_upper);
}

TrialEvaluator::TrialEvaluator(const RunConfig& config, const TaskFile& task, Generator& backend)
    : config_(config), task_(task), backend_(backend) {
  if (backend.dim() != config.d)
    throw DimensionMismatch("backend embedding dimension " + std::to_string(backend.dim()) +
                            " does not match d = " + std::to_string(config.d));
  instruction_ = config.instruction.empty() ? EmbeddingSequence(0, config.d) : backend.embed(config.instruction);
  initial_prompt_ = backend.embed(task.initial_prompt);
}

TrialRecord TrialEvaluator::evaluate_block(const EmbeddingBlock& block, int iteration) {
  const auto started = std::chrono::steady_clock::now();
  TrialRecord trial;
  trial.iteration = iteration;
  trial.candidate = block;
  try {
    trial.prompt_text = backend_.generate_prompt(concat_embeddings(instruction_, block, initial_prompt_));
    trial.code_samples = backend_.generate_code(trial.prompt_text, config_.n_code_samples);
  } catch (const BackendError& e) {
    trial.status = std::string("generation_error: ") + e.what();
  } catch (const ProtocolError& e) {
    trial.status = std::string("generation_error: ") + e.what();
  }
  score_samples(trial);
  trial.wall_time_ms = elapsed_ms(started);
  return trial;
}

TrialRecord TrialEvaluator::evaluate_prompt(const std::string& prompt, int iteration) {
  const auto started = std::chrono::steady_clock::now();
  TrialRecord trial;
  trial.iteration = iteration;
  trial.prompt_text = prompt;
  try {
    trial.code_samples = backend_.generate_code(prompt, config_.n_code_samples);
  } catch (const BackendError& e) {
    trial.status = std::string("generation_error: ") + e.what();
  } catch (const ProtocolError& e) {
    trial.status = std::string("generation_error: ") + e.what();
  }
  score_samples(trial);
  trial.wall_time_ms = elapsed_ms(started);
  return trial;
}

void TrialEvaluator::score_samples(TrialRecord& trial) {
  if (trial.status != "ok") {
    trial.per_sample_accuracy.assign(static_cast<std::size_t>(config_.n_code_samples), 0.0);
    trial.objective = 0.0;
    trial.pass_at_1 = 0.0;
    return;
  }
  // Identical samples are evaluated once; verdicts are assumed deterministic.
  std::map<std::string, double> seen;
  int correct = 0;
  for (const std::string& program : trial.code_samples) {
    auto it = seen.find(program);
    if (it == seen.end()) {
      double acc = 0.0;
      try {
        acc = evaluate_code(program, task_.tests, config_.limits);
      } catch (const Error& e) {
        trial.status = std::string("evaluation_error: ") + e.what();
      }
      it = seen.emplace(program, acc).first;
    }
    trial.per_sample_accuracy.push_back(it->second);
    if (it->second == 1.0) ++correct;
  }
  double sum = 0.0;
  for (double a : trial.per_sample_accuracy) sum += a;
  trial.objective = trial.per_sample_accuracy.empty() ? 0.0 : sum / static_cast<double>(trial.per_sample_accuracy.size());
  trial.pass_at_1 = pass_at_1(static_cast<int>(trial.code_samples.size()), correct);
}

namespace {

RunLog new_log(const RunConfig& config, const TaskFile& task, std::string mode) {
  RunLog log;
  log.config = config;
  log.mode = std::move(mode);
  log.task_name = task.name;
  log.projection_seed = projection_seed_for(config.seed);
  return log;
}

}  // namespace

InitState initialize(const RunConfig& config, const TaskFile& task, Generator& backend) {
  config.validate();
  InitState state{GpDataset(), new_log(config, task, "bo"), false};
  const SlotProjections projections(state.log.projection_seed, config.m, config.k, config.d,
                                    config.per_slot_projection);
  const SearchBox box = make_search_box(config, backend);
  TrialEvaluator evaluator(config, task, backend);

  Rng rng(derive_seed(config.seed, {stream::kInit}));
  const auto blocks = sample_candidates(config.n_init, box, config.m, rng);
  try {
    for (int i = 0; i < config.n_init; ++i) {
      TrialRecord trial = evaluator.evaluate_block(blocks[static_cast<std::size_t>(i)], i - config.n_init);
      trial.search_point = projections.project(*trial.candidate);
      state.dataset.add(*trial.search_point, trial.objective);
      const bool perfect = trial.objective == 1.0;
      state.log.trials.push_back(std::move(trial));
      if (perfect) {
        state.stopped = true;
        state.log.stop_reason = StopReason::PerfectAccuracy;
        break;
      }
    }
  } catch (const TransportError& e) {
    state.stopped = true;
    state.log.stop_reason = StopReason::Error;
    state.log.error = e.what();
  }
  state.log.update_best();
  return state;
}

RunLog run(const RunConfig& config, const TaskFile& task, Generator& backend) {
  InitState state = initialize(config, task, backend);
  RunLog& log = state.log;
  if (state.stopped) return std::move(log);

  const SlotProjections projections(log.projection_seed, config.m, config.k, config.d, config.per_slot_projection);
  const SearchBox box = make_search_box(config, backend);
  TrialEvaluator evaluator(config, task, backend);
  const LengthscalePrior prior = LengthscalePrior::for_dim(config.search_dim());
  FitOptions fit_options;
  fit_options.restarts = config.restarts;

  log.stop_reason = StopReason::BudgetExhausted;
  try {
    for (int t = 1; t <= config.t_max; ++t) {
      Rng fit_rng(derive_seed(config.seed, {stream::kFit, static_cast<std::uint64_t>(t)}));
      const GpModel model(fit(state.dataset, prior, config.kernel, fit_options, fit_rng), state.dataset);

      Rng cand_rng(derive_seed(config.seed, {stream::kCandidates, static_cast<std::uint64_t>(t)}));
      const Selection next = select_next_streaming(model, box, config.n_candidates, projections, cand_rng);

      TrialRecord trial = evaluator.evaluate_block(next.block, t);
      trial.search_point = projections.project(*trial.candidate);
      state.dataset.add(*trial.search_point, trial.objective);
      const bool perfect = trial.objective == 1.0;
      log.trials.push_back(std::move(trial));
      if (perfect) {
        log.stop_reason = StopReason::PerfectAccuracy;
        break;
      }
    }
  } catch (const TransportError& e) {
    log.stop_reason = StopReason::Error;
    log.error = e.what();
  } catch (const NumericalFailure& e) {
    log.stop_reason = StopReason::Error;
    log.error = e.what();
  }
  log.update_best();
  return std::move(log);
}

std::pair<std::string, double> best_prompt(const RunLog& log) {
  if (log.trials.empty()) throw InvalidArgument("run log has no trials");
  int best = log.best_index;
  if (best < 0 || best >= static_cast<int>(log.trials.size())) {
    RunLog copy = log;
    copy.update_best();
    best = copy.best_index;
  }
  const TrialRecord& t = log.trials[static_cast<std::size_t>(best)];
  return {t.prompt_text, t.objective};
}

RunLog run_baseline(BaselineMode mode, const RunConfig& config, const TaskFile& task, Generator& backend) {
  config.validate();
  RunLog log = new_log(config, task, "baseline-" + std::string(to_string(mode)));
  TrialEvaluator evaluator(config, task, backend);
  switch (mode) {
    case BaselineMode::Initial:
      log.trials.push_back(evaluator.evaluate_prompt(task.initial_prompt, 0));
      break;
    case BaselineMode::Cot:
      log.trials.push_back(evaluator.evaluate_prompt(task.initial_prompt + std::string(kCotSuffix), 0));
      break;
    case BaselineMode::Random: {
      const SlotProjections projections(log.projection_seed, config.m, config.k, config.d, config.per_slot_projection);
      const SearchBox box = make_search_box(config, backend);
      Rng rng(derive_seed(config.seed, {stream::kInit}));
      const int total = config.n_init + config.t_max;
      // Drawn one at a time so memory stays at one block; same stream order as sample_candidates.
      for (int i = 0; i < total; ++i) {
        const EmbeddingBlock block = sample_candidates(1, box, config.m, rng).front();
        TrialRecord trial = evaluator.evaluate_block(block, i < config.n_init ? i - config.n_init : i - config.n_init + 1);
        trial.search_point = projections.project(block);
        log.trials.push_back(std::move(trial));
      }
      break;
    }
  }
  log.stop_reason = StopReason::BudgetExhausted;
  log.update_best();
  return log;
}

}  // namespace bodegen
