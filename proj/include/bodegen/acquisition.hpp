#pragma once

#include <vector>

#include <Eigen/Core>

#include "bodegen/embedding.hpp"
#include "bodegen/gp.hpp"

namespace bodegen {

double normal_pdf(double u);
double normal_cdf(double u);

/// EI for maximization with no exploration offset.
double expected_improvement(const GpPosterior& post, double best);

struct Selection {
  Eigen::Index index = 0;
  EmbeddingBlock block;
  double score = 0.0;
};

/// Scores every candidate by EI against the best observed output and returns the argmax.
/// Ties go to the lowest index.
Selection select_next(const GpModel& model, const std::vector<EmbeddingBlock>& candidates,
                      const SlotProjections& projections);
Selection select_next(const GpModel& model, const std::vector<EmbeddingBlock>& candidates,
                      const ProjectionMatrix& a);

/// Same selection over `count` uniform box samples drawn from `rng` in the order of
/// sample_candidates, generated and scored `chunk` at a time.
Selection select_next_streaming(const GpModel& model, const SearchBox& box, Eigen::Index count,
                                const SlotProjections& projections, Rng& rng, Eigen::Index chunk = 256);

}  // namespace bodegen
