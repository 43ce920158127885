#include "bodegen/embedding.hpp"

#include <cmath>

namespace bodegen {

SearchBox::SearchBox(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw DimensionMismatch("search box bounds differ in length");
  if (lower.size() < 1) throw InvalidArgument("search box must have at least one coordinate");
  if (!lower.allFinite() || !upper.allFinite()) throw InvalidArgument("search box bounds must be finite");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i]))
      throw InvalidArgument("search box requires lower < upper (coordinate " + std::to_string(i) + ")");
}

SearchBox SearchBox::uniform(Eigen::Index d, double lo, double hi) {
  return SearchBox(Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi));
}

SearchBox SearchBox::from_table_stats(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev) {
  if (mean.size() != stddev.size()) throw DimensionMismatch("embedding table mean/std lengths differ");
  return SearchBox(mean - 3.0 * stddev, mean + 3.0 * stddev);
}

bool SearchBox::contains(const EmbeddingBlock& block) const {
  if (block.dim() != dim()) return false;
  for (Eigen::Index s = 0; s < block.slots(); ++s) {
    auto row = block.slot(s).transpose().array();
    if ((row < lower.array()).any() || (row > upper.array()).any()) return false;
  }
  return true;
}

void fill_uniform_candidates(const SearchBox& box, Eigen::Index m, Eigen::Index count, Rng& rng,
                             EmbeddingSequence& out) {
  if (count < 1) throw InvalidArgument("candidate count must be positive");
  if (m < 1) throw InvalidArgument("block must have at least one slot");
  const Eigen::Index d = box.dim();
  out.resize(count * m, d);
  const Eigen::VectorXd width = box.upper - box.lower;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    double* row = out.row(r).data();
    for (Eigen::Index j = 0; j < d; ++j) row[j] = box.lower[j] + width[j] * rng.uniform01();
  }
}

std::vector<EmbeddingBlock> sample_candidates(Eigen::Index count, const SearchBox& box, Eigen::Index m, Rng& rng) {
  EmbeddingSequence stacked;
  fill_uniform_candidates(box, m, count, rng, stacked);
  std::vector<EmbeddingBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index c = 0; c < count; ++c) blocks.emplace_back(EmbeddingSequence(stacked.middleRows(c * m, m)));
  return blocks;
}

SlotProjections::SlotProjections(std::uint64_t seed, Eigen::Index m, Eigen::Index k, Eigen::Index d,
                                 bool per_slot)
    : seed_(seed), m_(m), per_slot_(per_slot) {
  if (m < 1) throw InvalidArgument("block must have at least one slot");
  if (per_slot) {
    mats_.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index s = 0; s < m; ++s)
      mats_.push_back(sample_projection(derive_seed(seed, {static_cast<std::uint64_t>(s)}), k, d));
  } else {
    mats_.push_back(sample_projection(seed, k, d));
  }
}

SearchPoint SlotProjections::project(const EmbeddingBlock& block) const {
  if (block.slots() != m_)
    throw DimensionMismatch("block has " + std::to_string(block.slots()) + " slots, expected " + std::to_string(m_));
  if (!per_slot_) return project_block(mats_.front(), block);
  const Eigen::Index kk = k();
  SearchPoint z(m_ * kk);
  for (Eigen::Index s = 0; s < m_; ++s) {
    const ProjectionMatrix& a = for_slot(s);
    if (block.dim() != a.cols()) throw DimensionMismatch("block slot width does not match projection width");
    z.segment(s * kk, kk).noalias() = a.matrix() * block.slot(s).transpose();
  }
  return z;
}

Eigen::MatrixXd SlotProjections::project_stacked(const EmbeddingSequence& stacked) const {
  const Eigen::Index dd = d();
  const Eigen::Index kk = k();
  if (stacked.cols() != dd) throw DimensionMismatch("stacked candidates have the wrong width");
  if (stacked.rows() % m_ != 0) throw DimensionMismatch("stacked candidate rows are not a multiple of m");
  const Eigen::Index count = stacked.rows() / m_;

  using RowMap = Eigen::Map<const EmbeddingSequence, 0, Eigen::OuterStride<>>;
  Eigen::MatrixXd out(count, m_ * kk);
  for (Eigen::Index s = 0; s < m_; ++s) {
    RowMap slot_rows(stacked.data() + s * dd, count, dd, Eigen::OuterStride<>(m_ * dd));
    out.middleCols(s * kk, kk).noalias() = slot_rows * for_slot(s).matrix().transpose();
  }
  return out;
}

}  // namespace bodegen
