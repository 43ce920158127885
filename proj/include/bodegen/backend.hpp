#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bodegen/embedding.hpp"
#include "bodegen/evaluator.hpp"

namespace bodegen {

/// Coordinate-wise statistics of the auxiliary model's token-embedding table.
struct EmbeddingStats {
  Eigen::Index dim = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

/// The three model calls the optimizer needs: embed text with the auxiliary model, decode an
/// embedding sequence into a prompt, and sample programs from the base model.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual Eigen::Index dim() const = 0;
  virtual EmbeddingSequence embed(const std::string& text) = 0;
  /// Deterministic for a fixed backend state.
  virtual std::string generate_prompt(const EmbeddingSequence& embeddings) = 0;
  virtual std::vector<std::string> generate_code(const std::string& prompt, int count) = 0;
  /// Table statistics, when the backend has a real embedding table.
  virtual std::optional<EmbeddingStats> stats() { return std::nullopt; }
};

// ---------------------------------------------------------------------------
// Simulator

/// Synthetic task: a hidden target block and a Gaussian bump around it.
struct SimulatorSpec {
  EmbeddingBlock target;
  double bandwidth = 1.0;
  int suite_size = 20;

  /// Target drawn uniformly from `box` with Rng(seed); bandwidth 0.5 * sqrt(m * d) * box half-width.
  static SimulatorSpec make(Eigen::Index m, const SearchBox& box, std::uint64_t seed, int suite_size = 20);
};

/// exp(-||block - target||^2 / (2 bandwidth^2)) over all m * d coordinates.
double sim_objective(const EmbeddingBlock& block, const SimulatorSpec& spec);

/// A program for f(i) = i * i that is right on exactly `correct` of the inputs 1..suite_size
/// (the first `correct` ones) and off by one on the rest.
std::string sim_program(int correct, int suite_size);

/// sim_program(round(suite_size * sim_objective(block)), suite_size).
std::string sim_generate_code(const EmbeddingBlock& block, const SimulatorSpec& spec);

/// The simulator's decoded prompt: its first (up to) 8 coordinates, row-major.
std::string sim_prompt_text(const EmbeddingBlock& block);

/// f(i) = i^2 for i = 1..suite_size as io_pair cases with ids "case-<i>".
TestSuite simulator_suite(int suite_size = 20);

/// Offline stand-in for the bridge. Its embed table is a deterministic hash of each
/// whitespace-separated token; generate_prompt reads the m candidate slots that follow the
/// instruction tokens and remembers their objective under the decoded prompt text. Prompts it
/// never decoded (the initial prompt, CoT variants) get the objective of the all-zero block.
class SimulatorBackend final : public Generator {
 public:
  SimulatorBackend(SimulatorSpec spec, std::string instruction);

  Eigen::Index dim() const override { return spec_.target.dim(); }
  EmbeddingSequence embed(const std::string& text) override;
  std::string generate_prompt(const EmbeddingSequence& embeddings) override;
  std::vector<std::string> generate_code(const std::string& prompt, int count) override;

  const SimulatorSpec& spec() const { return spec_; }
  double baseline_objective() const { return baseline_objective_; }

 private:
  SimulatorSpec spec_;
  Eigen::Index instruction_tokens_ = 0;
  double baseline_objective_ = 0.0;
  std::mutex mutex_;
  std::map<std::string, double> decoded_;
};

// ---------------------------------------------------------------------------
// Remote bridge client

struct RemoteOptions {
  std::string endpoint = "http://127.0.0.1:8765";
  Eigen::Index dim = 4096;
  int max_new_tokens = 256;
  double code_temperature = 0.8;
  int retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::seconds timeout{600};
};

/// JSON-over-HTTP client for the bridge service (POST /embed, /generate_prompt,
/// /generate_code, /stats). Transport failures are retried with exponential backoff; errors
/// the bridge reports are surfaced as BackendError without retrying.
class RemoteBackend final : public Generator {
 public:
  explicit RemoteBackend(RemoteOptions options);
  ~RemoteBackend() override;

  Eigen::Index dim() const override { return options_.dim; }
  EmbeddingSequence embed(const std::string& text) override;
  std::string generate_prompt(const EmbeddingSequence& embeddings) override;
  std::vector<std::string> generate_code(const std::string& prompt, int count) override;
  std::optional<EmbeddingStats> stats() override;

  /// Number of HTTP attempts made so far, including retries.
  int attempts() const { return attempts_; }

 private:
  std::string post(const std::string& path, const std::string& body);

  RemoteOptions options_;
  int attempts_ = 0;
  std::mutex prompt_mutex_;
};

}  // namespace bodegen
