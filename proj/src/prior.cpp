#include "bodegen/prior.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bodegen/errors.hpp"

namespace bodegen {

double LogNormal::log_pdf(double x) const {
  if (!(x > 0.0)) throw InvalidArgument("log-normal density is only defined for positive values");
  const double lx = std::log(x);
  const double z = (lx - location) / scale;
  return -lx - std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
}

double LogNormal::dlog_pdf_dlog(double x) const {
  return -1.0 - (std::log(x) - location) / (scale * scale);
}

double LogNormal::sample(Rng& rng) const { return std::exp(location + scale * rng.normal()); }

double LogNormal::median() const { return std::exp(location); }

double LogNormal::mode() const { return std::exp(location - scale * scale); }

LengthscalePrior LengthscalePrior::for_dim(Eigen::Index input_dim) {
  if (input_dim < 1) throw InvalidArgument("prior input dimension must be positive");
  return {input_dim, std::log(std::sqrt(static_cast<double>(input_dim))), 1.0};
}

double log_prior(const Eigen::VectorXd& lengthscales, const LengthscalePrior& prior) {
  const LogNormal dist = prior.distribution();
  double total = 0.0;
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0))
      throw InvalidArgument("lengthscale " + std::to_string(i) + " is not positive");
    total += dist.log_pdf(lengthscales[i]);
  }
  return total;
}

LogNormal noise_variance_prior() { return {std::log(1e-3), 1.0}; }

}  // namespace bodegen
