#pragma once

#include <Eigen/Core>

#include "bodegen/random.hpp"

namespace bodegen {

/// LogNormal(location, scale^2) over a positive real.
struct LogNormal {
  double location = 0.0;
  double scale = 1.0;

  double log_pdf(double x) const;
  /// d log_pdf(exp(t)) / dt, i.e. the derivative with respect to log x of the density in x.
  double dlog_pdf_dlog(double x) const;
  double sample(Rng& rng) const;
  double median() const;
  double mode() const;
};

/// Lengthscale prior whose location grows with the input dimension: LogNormal(log sqrt(D), 1).
struct LengthscalePrior {
  Eigen::Index input_dim = 1;
  double location = 0.0;
  double scale = 1.0;

  static LengthscalePrior for_dim(Eigen::Index input_dim);
  LogNormal distribution() const { return {location, scale}; }
};

/// Sum of per-dimension log densities. Throws InvalidArgument on a non-positive lengthscale.
double log_prior(const Eigen::VectorXd& lengthscales, const LengthscalePrior& prior);

/// Hyperpriors on the variances, in standardized output units.
inline constexpr LogNormal kSignalVariancePrior{0.0, 1.0};
LogNormal noise_variance_prior();
inline constexpr double kNoiseVarianceFloor = 1e-8;

}  // namespace bodegen
