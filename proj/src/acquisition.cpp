#include "bodegen/acquisition.hpp"

#include <cmath>
#include <numbers>

namespace bodegen {

double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

double expected_improvement(const GpPosterior& post, double best) {
  const double sigma = std::sqrt(std::max(0.0, post.variance));
  const double gain = post.mean - best;
  if (sigma == 0.0) return std::max(0.0, gain);
  const double u = gain / sigma;
  return std::max(0.0, gain * normal_cdf(u) + sigma * normal_pdf(u));
}

namespace {

class ArgMax {
 public:
  /// True if this score became the new incumbent.
  bool offer(Eigen::Index index, double score) {
    if (!have_ || score > best_) {
      have_ = true;
      best_ = score;
      index_ = index;
      return true;
    }
    return false;
  }
  Eigen::Index index() const { return index_; }
  double score() const { return best_; }

 private:
  bool have_ = false;
  double best_ = 0.0;
  Eigen::Index index_ = 0;
};

}  // namespace

Selection select_next(const GpModel& model, const std::vector<EmbeddingBlock>& candidates,
                      const SlotProjections& projections) {
  if (candidates.empty()) throw InvalidArgument("candidate set is empty");
  const double best = model.dataset().best_output();
  ArgMax argmax;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    argmax.offer(static_cast<Eigen::Index>(i),
                 expected_improvement(model.predict(projections.project(candidates[i])), best));
  return {argmax.index(), candidates[static_cast<std::size_t>(argmax.index())], argmax.score()};
}

Selection select_next(const GpModel& model, const std::vector<EmbeddingBlock>& candidates,
                      const ProjectionMatrix& a) {
  if (candidates.empty()) throw InvalidArgument("candidate set is empty");
  const double best = model.dataset().best_output();
  ArgMax argmax;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    argmax.offer(static_cast<Eigen::Index>(i), expected_improvement(model.predict(project_block(a, candidates[i])), best));
  return {argmax.index(), candidates[static_cast<std::size_t>(argmax.index())], argmax.score()};
}

Selection select_next_streaming(const GpModel& model, const SearchBox& box, Eigen::Index count,
                                const SlotProjections& projections, Rng& rng, Eigen::Index chunk) {
  if (count < 1) throw InvalidArgument("candidate count must be positive");
  if (chunk < 1) throw InvalidArgument("chunk size must be positive");
  const double best = model.dataset().best_output();
  const Eigen::Index m = projections.slots();

  ArgMax argmax;
  EmbeddingSequence winner;
  EmbeddingSequence stacked;
  for (Eigen::Index start = 0; start < count; start += chunk) {
    const Eigen::Index n = std::min(chunk, count - start);
    fill_uniform_candidates(box, m, n, rng, stacked);
    const Eigen::MatrixXd points = projections.project_stacked(stacked);
    for (Eigen::Index c = 0; c < n; ++c) {
      const double ei = expected_improvement(model.predict(points.row(c).transpose()), best);
      if (argmax.offer(start + c, ei)) winner = stacked.middleRows(c * m, m);
    }
  }
  return {argmax.index(), EmbeddingBlock(std::move(winner)), argmax.score()};
}

}  // namespace bodegen
