#include <gtest/gtest.h>

#include <cmath>

#include "bodegen/backend.hpp"

using namespace bodegen;
using namespace std::chrono_literals;

namespace {

SimulatorSpec small_spec(std::uint64_t seed = 1) { return SimulatorSpec::make(2, SearchBox::uniform(8, -1, 1), seed); }

ExecutionLimits limits() {
  ExecutionLimits l;
  l.wall_time_per_case = 3000ms;
  return l;
}

// Block at distance `dist` from the target along the first coordinate.
EmbeddingBlock shifted(const SimulatorSpec& spec, double dist) {
  EmbeddingSequence x = spec.target.matrix();
  x(0, 0) += dist;
  return EmbeddingBlock(x);
}

}  // namespace

TEST(SimulatorSpec, DefaultsFollowBoxAndShape) {
  const auto spec = SimulatorSpec::make(4, SearchBox::uniform(4096, -1, 1), 3);
  EXPECT_DOUBLE_EQ(spec.bandwidth, 64.0);
  EXPECT_EQ(spec.target.slots(), 4);
  EXPECT_TRUE(SearchBox::uniform(4096, -1, 1).contains(spec.target));
  EXPECT_EQ(spec.suite_size, 20);
}

TEST(SimObjective, Examples) {
  const auto spec = small_spec();
  EXPECT_EQ(sim_objective(spec.target, spec), 1.0);
  EXPECT_NEAR(sim_objective(shifted(spec, spec.bandwidth), spec), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(sim_objective(shifted(spec, 1e6), spec), 0.0, 1e-300);
  EXPECT_THROW(sim_objective(EmbeddingBlock::zeros(3, 8), spec), DimensionMismatch);
}

TEST(SimProgram, RoundTripThroughEvaluator) {
  const auto spec = small_spec();
  const TestSuite suite = simulator_suite();
  EXPECT_EQ(evaluate_code(sim_generate_code(spec.target, spec), suite, limits()), 1.0);
  EXPECT_EQ(evaluate_code(sim_generate_code(shifted(spec, spec.bandwidth), spec), suite, limits()), 0.6);
  EXPECT_EQ(evaluate_code(sim_program(0, 20), suite, limits()), 0.0);
}

TEST(SimProgram, RoundingProperty) {
  const auto spec = small_spec(5);
  const TestSuite suite = simulator_suite();
  Rng rng(3);
  for (int t = 0; t < 4; ++t) {
    const double dist = rng.uniform(0, 3 * spec.bandwidth);
    const auto block = shifted(spec, dist);
    const double want = std::round(20 * sim_objective(block, spec)) / 20;
    EXPECT_EQ(evaluate_code(sim_generate_code(block, spec), suite, limits()), want);
  }
}

TEST(SimPrompt, FirstEightCoordinates) {
  EmbeddingSequence x = EmbeddingSequence::Zero(2, 5);
  x(0, 0) = 0.5;
  x(1, 2) = -0.25;
  EXPECT_EQ(sim_prompt_text(EmbeddingBlock(x)), "soft-prompt[0.5,0,0,0,0,0,0,-0.25]");
}

TEST(SimulatorBackend, EmbedIsDeterministicPerToken) {
  SimulatorBackend sim(small_spec(), "rephrase this");
  const auto a = sim.embed("hello world hello");
  ASSERT_EQ(a.rows(), 3);
  EXPECT_EQ(a.cols(), 8);
  EXPECT_EQ(a.row(0), a.row(2));
  EXPECT_NE(a.row(0), a.row(1));
  EXPECT_THROW(sim.embed("   "), BackendError);
}

TEST(SimulatorBackend, DecodesCandidateSlotsAfterInstruction) {
  const auto spec = small_spec();
  SimulatorBackend sim(spec, "two tokens");
  const auto seq = concat_embeddings(sim.embed("two tokens"), spec.target, sim.embed("def f"));
  const std::string prompt = sim.generate_prompt(seq);
  EXPECT_EQ(prompt, sim_prompt_text(spec.target));
  EXPECT_EQ(sim.generate_prompt(seq), prompt);
  const auto code = sim.generate_code(prompt, 3);
  ASSERT_EQ(code.size(), 3u);
  EXPECT_EQ(code[0], sim_program(20, 20));
}

TEST(SimulatorBackend, UnknownPromptsScoreLikeTheZeroBlock) {
  const auto spec = small_spec();
  SimulatorBackend sim(spec, "x");
  const double zero = sim_objective(EmbeddingBlock::zeros(2, 8), spec);
  EXPECT_DOUBLE_EQ(sim.baseline_objective(), zero);
  EXPECT_EQ(sim.generate_code("any text", 1)[0], sim_program(static_cast<int>(std::lround(20 * zero)), 20));
  EXPECT_EQ(sim.generate_code("other text", 1), sim.generate_code("any text", 1));
}

TEST(SimulatorBackend, ShortSequenceIsProtocolError) {
  SimulatorBackend sim(small_spec(), "a b c");
  EXPECT_THROW(sim.generate_prompt(EmbeddingSequence::Zero(4, 8)), ProtocolError);
  EXPECT_THROW(sim.generate_prompt(EmbeddingSequence::Zero(9, 7)), ProtocolError);
}
