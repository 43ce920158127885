#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bodegen/errors.hpp"
#include "bodegen/random.hpp"

namespace bodegen {

template <typename Scalar>
using EmbeddingT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Rows are embeddings, in sequence order. Row-major so each embedding is contiguous.
template <typename Scalar>
using EmbeddingSequenceT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using SearchPointT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Embedding = EmbeddingT<double>;
using EmbeddingSequence = EmbeddingSequenceT<double>;
/// Projected representation of a block: m slots of k coordinates, slot-major.
using SearchPoint = SearchPointT<double>;

/// The optimizer's decision variable: m embeddings of width d, stored as an m x d matrix.
template <typename Scalar>
class EmbeddingBlockT {
 public:
  using Matrix = EmbeddingSequenceT<Scalar>;

  EmbeddingBlockT() = default;
  explicit EmbeddingBlockT(Matrix slots) : slots_(std::move(slots)) {
    if (slots_.rows() < 1 || slots_.cols() < 1)
      throw InvalidArgument("embedding block needs at least one slot of positive width");
    if (!slots_.allFinite()) throw InvalidArgument("embedding block has non-finite entries");
  }

  static EmbeddingBlockT zeros(Eigen::Index m, Eigen::Index d) {
    return EmbeddingBlockT(Matrix::Zero(m, d));
  }

  Eigen::Index slots() const { return slots_.rows(); }
  Eigen::Index dim() const { return slots_.cols(); }
  auto slot(Eigen::Index i) const { return slots_.row(i); }
  const Matrix& matrix() const { return slots_; }

  friend bool operator==(const EmbeddingBlockT& a, const EmbeddingBlockT& b) {
    return a.slots_.rows() == b.slots_.rows() && a.slots_.cols() == b.slots_.cols() &&
           a.slots_ == b.slots_;
  }

 private:
  Matrix slots_;
};

using EmbeddingBlock = EmbeddingBlockT<double>;

/// Gaussian k x d matrix with i.i.d. N(0, 1) entries generated from `seed`.
template <typename Scalar>
class ProjectionMatrixT {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ProjectionMatrixT(Matrix entries, std::uint64_t seed) : entries_(std::move(entries)), seed_(seed) {}

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  std::uint64_t seed() const { return seed_; }
  const Matrix& matrix() const { return entries_; }

 private:
  Matrix entries_;
  std::uint64_t seed_ = 0;
};

using ProjectionMatrix = ProjectionMatrixT<double>;

/// Per-coordinate sampling bounds in the original embedding space.
struct SearchBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  SearchBox(Eigen::VectorXd lo, Eigen::VectorXd hi);

  /// [lo, hi] in every one of d coordinates.
  static SearchBox uniform(Eigen::Index d, double lo, double hi);
  /// [mean - 3 std, mean + 3 std] from token-embedding table statistics.
  static SearchBox from_table_stats(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev);

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const EmbeddingBlock& block) const;
};

/// Draws the k x d matrix row by row from Rng(seed) using Rng::normal.
template <typename Scalar = double>
ProjectionMatrixT<Scalar> sample_projection(std::uint64_t seed, Eigen::Index k, Eigen::Index d) {
  if (k < 1 || d < 1) throw InvalidArgument("projection dimensions must be positive");
  typename ProjectionMatrixT<Scalar>::Matrix entries(k, d);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) entries(i, j) = static_cast<Scalar>(rng.normal());
  return ProjectionMatrixT<Scalar>(std::move(entries), seed);
}

/// z = A x
template <typename Scalar, typename Derived>
EmbeddingT<Scalar> project(const ProjectionMatrixT<Scalar>& a, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != a.cols())
    throw DimensionMismatch("projection expects input of length " + std::to_string(a.cols()) +
                            ", got " + std::to_string(x.size()));
  return a.matrix() * x;
}

/// Applies `a` to each slot and concatenates the results in slot order (length m * k).
template <typename Scalar>
SearchPointT<Scalar> project_block(const ProjectionMatrixT<Scalar>& a, const EmbeddingBlockT<Scalar>& block) {
  if (block.dim() != a.cols())
    throw DimensionMismatch("block slot width " + std::to_string(block.dim()) +
                            " does not match projection width " + std::to_string(a.cols()));
  SearchPointT<Scalar> z(block.slots() * a.rows());
  for (Eigen::Index s = 0; s < block.slots(); ++s)
    z.segment(s * a.rows(), a.rows()).noalias() = a.matrix() * block.slot(s).transpose();
  return z;
}

/// E_I, then the candidate slots, then E_p0. Empty sequences may have any column count.
template <typename Scalar>
EmbeddingSequenceT<Scalar> concat_embeddings(const EmbeddingSequenceT<Scalar>& instruction,
                                             const EmbeddingBlockT<Scalar>& candidate,
                                             const EmbeddingSequenceT<Scalar>& initial_prompt) {
  const Eigen::Index d = candidate.dim();
  auto check = [d](const EmbeddingSequenceT<Scalar>& seq, const char* what) {
    if (seq.rows() > 0 && seq.cols() != d)
      throw DimensionMismatch(std::string(what) + " embeddings have width " + std::to_string(seq.cols()) +
                              ", candidate has " + std::to_string(d));
  };
  check(instruction, "instruction");
  check(initial_prompt, "initial prompt");

  EmbeddingSequenceT<Scalar> out(instruction.rows() + candidate.slots() + initial_prompt.rows(), d);
  Eigen::Index row = 0;
  if (instruction.rows() > 0) out.middleRows(row, instruction.rows()) = instruction;
  row += instruction.rows();
  out.middleRows(row, candidate.slots()) = candidate.matrix();
  row += candidate.slots();
  if (initial_prompt.rows() > 0) out.middleRows(row, initial_prompt.rows()) = initial_prompt;
  return out;
}

/// Fills `out` (count*m rows by d) with uniform draws from `box`: candidate-major, then slot,
/// then coordinate. This is the stream order used by sample_candidates.
void fill_uniform_candidates(const SearchBox& box, Eigen::Index m, Eigen::Index count, Rng& rng,
                             EmbeddingSequence& out);

/// `count` blocks with every coordinate uniform in [lower, upper].
std::vector<EmbeddingBlock> sample_candidates(Eigen::Index count, const SearchBox& box, Eigen::Index m, Rng& rng);

/// The projections applied to a block, either one matrix shared by all slots or one per slot.
class SlotProjections {
 public:
  SlotProjections(std::uint64_t seed, Eigen::Index m, Eigen::Index k, Eigen::Index d, bool per_slot);

  /// Seed of slot s's matrix: `seed` itself when shared, derive_seed(seed, {s}) otherwise.
  const ProjectionMatrix& for_slot(Eigen::Index s) const { return mats_[per_slot_ ? s : 0]; }
  std::uint64_t seed() const { return seed_; }
  bool per_slot() const { return per_slot_; }
  Eigen::Index slots() const { return m_; }
  Eigen::Index k() const { return mats_.front().rows(); }
  Eigen::Index d() const { return mats_.front().cols(); }

  SearchPoint project(const EmbeddingBlock& block) const;

  /// Projects candidates stacked as produced by fill_uniform_candidates: returns one search
  /// point per row (count x m*k).
  Eigen::MatrixXd project_stacked(const EmbeddingSequence& stacked) const;

 private:
  std::uint64_t seed_;
  Eigen::Index m_;
  bool per_slot_;
  std::vector<ProjectionMatrix> mats_;
};

}  // namespace bodegen
