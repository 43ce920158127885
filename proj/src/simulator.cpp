#include <cmath>
#include <cstdio>
#include <sstream>

#include "bodegen/backend.hpp"

namespace bodegen {

namespace {

std::uint64_t token_hash(const std::string& token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokens_of(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

}  // namespace

SimulatorSpec SimulatorSpec::make(Eigen::Index m, const SearchBox& box, std::uint64_t seed, int suite_size) {
  if (suite_size < 1) throw InvalidArgument("simulator suite size must be positive");
  Rng rng(seed);
  EmbeddingSequence target;
  fill_uniform_candidates(box, m, 1, rng, target);
  const double half_width = 0.5 * (box.upper - box.lower).mean();
  SimulatorSpec spec;
  spec.target = EmbeddingBlock(std::move(target));
  spec.bandwidth = 0.5 * std::sqrt(static_cast<double>(m * box.dim())) * half_width;
  spec.suite_size = suite_size;
  return spec;
}

double sim_objective(const EmbeddingBlock& block, const SimulatorSpec& spec) {
  if (block.slots() != spec.target.slots() || block.dim() != spec.target.dim())
    throw DimensionMismatch("simulator block is " + std::to_string(block.slots()) + "x" + std::to_string(block.dim()) +
                            ", target is " + std::to_string(spec.target.slots()) + "x" +
                            std::to_string(spec.target.dim()));
  const double dist2 = (block.matrix() - spec.target.matrix()).squaredNorm();
  return std::exp(-dist2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

std::string sim_program(int correct, int suite_size) {
  if (correct < 0 || correct > suite_size) throw InvalidArgument("correct count outside [0, suite_size]");
  std::ostringstream out;
  out << "def f(i):\n"
      << "    if i <= " << correct << ":\n"
      << "        return i * i\n"
      << "    return i * i + 1\n";
  return out.str();
}

std::string sim_generate_code(const EmbeddingBlock& block, const SimulatorSpec& spec) {
  const double score = sim_objective(block, spec);
  return sim_program(static_cast<int>(std::lround(spec.suite_size * score)), spec.suite_size);
}

std::string sim_prompt_text(const EmbeddingBlock& block) {
  const auto& v = block.matrix();
  const Eigen::Index n = std::min<Eigen::Index>(8, v.size());
  std::string out = "soft-prompt[";
  char buf[32];
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v(i / v.cols(), i % v.cols()));
    out += (i ? "," : "");
    out += buf;
  }
  return out + "]";
}

TestSuite simulator_suite(int suite_size) {
  TestSuite suite;
  suite.entry_point = "f";
  for (int i = 1; i <= suite_size; ++i)
    suite.cases.push_back(
        TestCase::io_pair("case-" + std::to_string(i), "[" + std::to_string(i) + "]", std::to_string(i * i)));
  return suite;
}

SimulatorBackend::SimulatorBackend(SimulatorSpec spec, std::string instruction) : spec_(std::move(spec)) {
  instruction_tokens_ = static_cast<Eigen::Index>(tokens_of(instruction).size());
  baseline_objective_ = sim_objective(EmbeddingBlock::zeros(spec_.target.slots(), spec_.target.dim()), spec_);
}

EmbeddingSequence SimulatorBackend::embed(const std::string& text) {
  const auto tokens = tokens_of(text);
  if (tokens.empty()) throw BackendError("empty_text", "text to embed is empty");
  EmbeddingSequence out(static_cast<Eigen::Index>(tokens.size()), dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    Rng rng(token_hash(tokens[t]));
    for (Eigen::Index j = 0; j < dim(); ++j) out(static_cast<Eigen::Index>(t), j) = 0.1 * rng.normal();
  }
  return out;
}

std::string SimulatorBackend::generate_prompt(const EmbeddingSequence& embeddings) {
  const Eigen::Index m = spec_.target.slots();
  if (embeddings.cols() != dim()) throw ProtocolError("embedding width does not match the simulator dimension");
  if (embeddings.rows() < instruction_tokens_ + m)
    throw ProtocolError("embedding sequence is too short to hold the candidate slots");
  const EmbeddingBlock block(EmbeddingSequence(embeddings.middleRows(instruction_tokens_, m)));
  std::string prompt = sim_prompt_text(block);
  const double score = sim_objective(block, spec_);
  std::lock_guard lock(mutex_);
  decoded_[prompt] = score;
  return prompt;
}

std::vector<std::string> SimulatorBackend::generate_code(const std::string& prompt, int count) {
  if (count < 1) throw InvalidArgument("sample count must be positive");
  double score = baseline_objective_;
  {
    std::lock_guard lock(mutex_);
    if (auto it = decoded_.find(prompt); it != decoded_.end()) score = it->second;
  }
  const std::string program =
      sim_program(static_cast<int>(std::lround(spec_.suite_size * score)), spec_.suite_size);
  return std::vector<std::string>(static_cast<std::size_t>(count), program);
}

}  // namespace bodegen
