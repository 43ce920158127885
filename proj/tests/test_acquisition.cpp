#include <gtest/gtest.h>

#include <cmath>

#include "bodegen/acquisition.hpp"

using namespace bodegen;

TEST(ExpectedImprovement, AtIncumbentWithUnitSigma) {
  EXPECT_NEAR(expected_improvement({0.0, 1.0}, 0.0), 0.398942, 1e-6);
  EXPECT_NEAR(expected_improvement({2.5, 1.0}, 2.5), 1.0 / std::sqrt(2 * M_PI), 1e-15);
}

TEST(ExpectedImprovement, ZeroVarianceIsPlainGain) {
  EXPECT_EQ(expected_improvement({1.5, 0.0}, 1.0), 0.5);
  EXPECT_EQ(expected_improvement({0.5, 0.0}, 1.0), 0.0);
}

TEST(ExpectedImprovement, MonotoneInMeanAndSigma) {
  double prev = -1;
  for (double mu = -3; mu <= 3; mu += 0.25) {
    const double ei = expected_improvement({mu, 1.0}, 0.0);
    EXPECT_GT(ei, prev);
    prev = ei;
  }
  prev = -1;
  for (double s = 0.1; s <= 3; s += 0.1) {
    const double ei = expected_improvement({0.0, s * s}, 0.5);
    EXPECT_GT(ei, prev);
    prev = ei;
  }
}

TEST(ExpectedImprovement, NonNegativeAndBoundedBelowByGain) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double mu = rng.uniform(-5, 5), var = rng.uniform(0, 4), best = rng.uniform(-5, 5);
    const double ei = expected_improvement({mu, var}, best);
    EXPECT_GE(ei, 0.0);
    EXPECT_GE(ei, mu - best - 1e-12);
  }
}

TEST(ExpectedImprovement, MatchesMonteCarlo) {
  Rng rng(8);
  const int n = 200000;
  for (double gap : {-1.0, 0.0, 1.0}) {
    for (double sigma : {0.5, 1.0}) {
      double sum = 0;
      for (int i = 0; i < n; ++i) sum += std::max(0.0, gap + sigma * rng.normal());
      EXPECT_NEAR(expected_improvement({gap, sigma * sigma}, 0.0), sum / n, 5e-3);
    }
  }
}

TEST(NormalCdf, TailsAndSymmetry) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021048517795, 1e-12);
  EXPECT_NEAR(normal_cdf(-1.2) + normal_cdf(1.2), 1.0, 1e-15);
  EXPECT_GT(normal_cdf(-30.0), 0.0);
}

namespace {

GpModel small_model(const SlotProjections& proj, const SearchBox& box, Rng& rng) {
  const auto init = sample_candidates(6, box, proj.slots(), rng);
  GpDataset data;
  for (std::size_t i = 0; i < init.size(); ++i) data.add(proj.project(init[i]), 0.1 * static_cast<double>(i % 4));
  return GpModel(KernelParams{Eigen::VectorXd::Constant(proj.slots() * proj.k(), 2.0), 1.0, 1e-4,
                              KernelFamily::Matern52},
                 data);
}

}  // namespace

TEST(SelectNext, IsTheBruteForceArgmax) {
  const SlotProjections proj(3, 2, 3, 8, false);
  const auto box = SearchBox::uniform(8, -1, 1);
  Rng rng(12);
  const GpModel model = small_model(proj, box, rng);
  const auto cands = sample_candidates(300, box, 2, rng);
  const Selection s = select_next(model, cands, proj);
  const double best = model.dataset().best_output();
  double top = -1;
  Eigen::Index top_i = -1;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double ei = expected_improvement(model.predict(proj.project(cands[i])), best);
    if (ei > top) {
      top = ei;
      top_i = static_cast<Eigen::Index>(i);
    }
  }
  EXPECT_EQ(s.index, top_i);
  EXPECT_NEAR(s.score, top, 1e-12);
  EXPECT_EQ(s.block, cands[static_cast<std::size_t>(top_i)]);
}

TEST(SelectNext, TiesGoToLowestIndex) {
  const SlotProjections proj(3, 1, 2, 4, false);
  const auto box = SearchBox::uniform(4, -1, 1);
  Rng rng(2);
  const GpModel model = small_model(proj, box, rng);
  const auto one = sample_candidates(1, box, 1, rng).front();
  const Selection s = select_next(model, {one, one, one}, proj);
  EXPECT_EQ(s.index, 0);
}

TEST(SelectNext, StreamingMatchesMaterialized) {
  for (bool per_slot : {false, true}) {
    const SlotProjections proj(9, 3, 4, 16, per_slot);
    const auto box = SearchBox::uniform(16, -1, 1);
    Rng rng(7);
    const GpModel model = small_model(proj, box, rng);
    Rng a(100), b(100);
    const Selection streamed = select_next_streaming(model, box, 1000, proj, a, 64);
    const auto cands = sample_candidates(1000, box, 3, b);
    const Selection dense = select_next(model, cands, proj);
    EXPECT_EQ(streamed.index, dense.index);
    EXPECT_EQ(streamed.block, dense.block);
    EXPECT_NEAR(streamed.score, dense.score, 1e-12);
  }
}

TEST(SelectNext, EmptyCandidatesThrow) {
  const SlotProjections proj(3, 1, 2, 4, false);
  const auto box = SearchBox::uniform(4, -1, 1);
  Rng rng(2);
  const GpModel model = small_model(proj, box, rng);
  EXPECT_THROW(select_next(model, {}, proj), InvalidArgument);
}

TEST(SelectNext, PrefersUnexploredPointOverNoiselessTrainingPoint) {
  const SlotProjections proj(1, 1, 1, 1, false);
  const auto a = proj.for_slot(0).matrix()(0, 0);
  Eigen::MatrixXd x(2, 1);
  x << 0.2 * a, -0.5 * a;
  const GpDataset data(x, Eigen::Vector2d(0.8, 0.3));
  const GpModel model(KernelParams{Eigen::VectorXd::Ones(1), 1.0, 0.0, KernelFamily::Matern52}, data);
  const EmbeddingBlock seen(EmbeddingSequence::Constant(1, 1, 0.2));
  const EmbeddingBlock fresh(EmbeddingSequence::Constant(1, 1, 0.9));
  // Only the 1e-8 jitter keeps the variance off zero at a training point.
  const double seen_ei = expected_improvement(model.predict(proj.project(seen)), 0.8);
  EXPECT_LT(seen_ei, 1e-4);
  const double fresh_ei = expected_improvement(model.predict(proj.project(fresh)), 0.8);
  ASSERT_GT(fresh_ei, 100 * seen_ei);
  EXPECT_EQ(select_next(model, {seen, fresh}, proj).index, 1);
}
