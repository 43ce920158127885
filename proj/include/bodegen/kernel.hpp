#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "bodegen/errors.hpp"

namespace bodegen {

enum class KernelFamily { Matern52, RBF };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Lengthscales are per input dimension; variances are in standardized output units.
struct KernelParams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 0.0;
  KernelFamily family = KernelFamily::Matern52;

  /// Throws InvalidArgument unless lengthscales > 0, signal > 0, noise >= 0.
  void validate() const;
};

/// Covariance as a function of the lengthscale-scaled squared distance r^2.
template <typename Scalar>
Scalar covariance_from_sqdist(KernelFamily family, Scalar signal_variance, Scalar r2) {
  using std::exp;
  using std::sqrt;
  if (family == KernelFamily::RBF) return signal_variance * exp(Scalar(-0.5) * r2);
  const Scalar sqrt5 = sqrt(Scalar(5));
  const Scalar r = sqrt(r2);
  return signal_variance * (Scalar(1) + sqrt5 * r + Scalar(5) * r2 / Scalar(3)) * exp(-sqrt5 * r);
}

/// d covariance / d r^2. Finite at r = 0 for both families.
template <typename Scalar>
Scalar covariance_sqdist_derivative(KernelFamily family, Scalar signal_variance, Scalar r2) {
  using std::exp;
  using std::sqrt;
  if (family == KernelFamily::RBF) return Scalar(-0.5) * signal_variance * exp(Scalar(-0.5) * r2);
  const Scalar sqrt5 = sqrt(Scalar(5));
  const Scalar r = sqrt(r2);
  return Scalar(-5) / Scalar(6) * signal_variance * (Scalar(1) + sqrt5 * r) * exp(-sqrt5 * r);
}

/// sum_i (z_i - z'_i)^2 / l_i^2
template <typename DerivedA, typename DerivedB, typename DerivedL>
typename DerivedA::Scalar scaled_sqdist(const Eigen::MatrixBase<DerivedA>& z, const Eigen::MatrixBase<DerivedB>& zp,
                                        const Eigen::MatrixBase<DerivedL>& lengthscales) {
  if (z.size() != zp.size() || z.size() != lengthscales.size())
    throw DimensionMismatch("kernel inputs have lengths " + std::to_string(z.size()) + ", " +
                            std::to_string(zp.size()) + " and " + std::to_string(lengthscales.size()) +
                            " lengthscales");
  return ((z.derived().reshaped() - zp.derived().reshaped()).array() / lengthscales.derived().reshaped().array())
      .square()
      .sum();
}

template <typename DerivedA, typename DerivedB>
double kernel_eval(const KernelParams& params, const Eigen::MatrixBase<DerivedA>& z,
                   const Eigen::MatrixBase<DerivedB>& zp) {
  return covariance_from_sqdist(params.family, params.signal_variance, scaled_sqdist(z, zp, params.lengthscales));
}

}  // namespace bodegen
