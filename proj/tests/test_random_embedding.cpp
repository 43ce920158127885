#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bodegen/embedding.hpp"
#include "bodegen/random.hpp"

using namespace bodegen;

TEST(DeriveSeed, DependsOnEveryTagAndOrder) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ULL, 1ULL, 42ULL})
    for (std::uint64_t t : {stream::kProjection, stream::kInit, stream::kCandidates, stream::kFit})
      seen.insert(derive_seed(base, {t}));
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.uniform01(), b.uniform01());
    ASSERT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, UniformStaysInsideOpenInterval) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Projection, SmallExample) {
  ProjectionMatrix::Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const ProjectionMatrix a(m, 0);
  const Eigen::Vector2d x(1, 1);
  const Embedding z = project(a, x);
  EXPECT_EQ(z, Eigen::Vector2d(3, 7));
}

TEST(Projection, WrongLengthThrows) {
  const auto a = sample_projection(1, 3, 5);
  EXPECT_THROW(project(a, Eigen::VectorXd::Zero(4)), DimensionMismatch);
}

TEST(Projection, SeededAndReproducible) {
  const auto a = sample_projection(77, 8, 16);
  const auto b = sample_projection(77, 8, 16);
  const auto c = sample_projection(78, 8, 16);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_NE(a.matrix(), c.matrix());
  EXPECT_EQ(a.seed(), 77u);
}

TEST(Projection, FloatInstantiation) {
  const auto a = sample_projection<float>(3, 4, 6);
  const Eigen::VectorXf x = Eigen::VectorXf::Ones(6);
  const Eigen::VectorXf z = project(a, x);
  EXPECT_NEAR(z[0], a.matrix().row(0).sum(), 1e-5f);
}

// Property: E ||A x||^2 = k ||x||^2 for Gaussian A.
TEST(Projection, PreservesSquaredNormInExpectation) {
  const Eigen::Index k = 32, d = 256;
  Rng rng(11);
  Eigen::VectorXd x(d);
  for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.uniform(-1, 1);
  double ratio = 0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) ratio += project(sample_projection(s, k, d), x).squaredNorm() / (k * x.squaredNorm());
  EXPECT_NEAR(ratio / trials, 1.0, 0.05);
}

TEST(Concat, OrderAndLength) {
  EmbeddingSequence instr(3, 2), p0(2, 2);
  instr.setConstant(1.0);
  p0.setConstant(3.0);
  EmbeddingSequence c(4, 2);
  c.setConstant(2.0);
  const EmbeddingSequence all = concat_embeddings(instr, EmbeddingBlock(c), p0);
  ASSERT_EQ(all.rows(), 9);
  for (int r = 0; r < 9; ++r) EXPECT_EQ(all(r, 0), r < 3 ? 1.0 : r < 7 ? 2.0 : 3.0);
}

TEST(Concat, WidthMismatchThrows) {
  EmbeddingSequence instr(1, 3);
  instr.setZero();
  EXPECT_THROW(concat_embeddings(instr, EmbeddingBlock::zeros(2, 2), EmbeddingSequence(0, 2)), DimensionMismatch);
}

TEST(Block, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(EmbeddingBlock(EmbeddingSequence(0, 3)), InvalidArgument);
  EmbeddingSequence bad = EmbeddingSequence::Zero(2, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(EmbeddingBlock{bad}, InvalidArgument);
}

TEST(SearchBox, ValidatesBounds) {
  EXPECT_THROW(SearchBox::uniform(3, 1, 1), InvalidArgument);
  const auto box = SearchBox::from_table_stats(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 2));
  EXPECT_EQ(box.lower, Eigen::Vector2d(-3, -5));
  EXPECT_EQ(box.upper, Eigen::Vector2d(3, 7));
}

TEST(Candidates, InsideBoxAndDeterministic) {
  const auto box = SearchBox::uniform(5, -2, 3);
  Rng r1(4), r2(4);
  const auto a = sample_candidates(50, box, 3, r1);
  const auto b = sample_candidates(50, box, 3, r2);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(box.contains(a[i]));
    EXPECT_EQ(a[i], b[i]);
  }
}

TEST(SlotProjections, SharedMatchesPerBlockProjection) {
  const SlotProjections p(21, 3, 4, 10, false);
  const auto a = sample_projection(21, 4, 10);
  Rng rng(1);
  const auto block = sample_candidates(1, SearchBox::uniform(10, -1, 1), 3, rng).front();
  EXPECT_TRUE(p.project(block).isApprox(project_block(a, block)));
  EXPECT_EQ(p.project(block).size(), 12);
}

TEST(SlotProjections, PerSlotUsesDerivedSeeds) {
  const SlotProjections p(21, 3, 4, 10, true);
  for (Eigen::Index s = 0; s < 3; ++s)
    EXPECT_EQ(p.for_slot(s).matrix(), sample_projection(derive_seed(21, {static_cast<std::uint64_t>(s)}), 4, 10).matrix());
}

TEST(SlotProjections, StackedMatchesOneAtATime) {
  for (bool per_slot : {false, true}) {
    const SlotProjections p(5, 2, 3, 7, per_slot);
    const auto box = SearchBox::uniform(7, -1, 1);
    Rng a(8), b(8);
    EmbeddingSequence stacked;
    fill_uniform_candidates(box, 2, 6, a, stacked);
    const auto blocks = sample_candidates(6, box, 2, b);
    const Eigen::MatrixXd z = p.project_stacked(stacked);
    ASSERT_EQ(z.rows(), 6);
    for (int i = 0; i < 6; ++i) EXPECT_TRUE(z.row(i).transpose().isApprox(p.project(blocks[i]), 1e-12));
  }
}
