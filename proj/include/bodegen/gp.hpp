#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bodegen/kernel.hpp"
#include "bodegen/prior.hpp"
#include "bodegen/random.hpp"

namespace bodegen {

/// (search point, accuracy) pairs. Inputs are stored one per row.
class GpDataset {
 public:
  GpDataset() = default;
  GpDataset(Eigen::MatrixXd inputs, Eigen::VectorXd outputs);

  void add(const Eigen::VectorXd& input, double output);

  Eigen::Index size() const { return outputs_.size(); }
  Eigen::Index dim() const { return inputs_.cols(); }
  bool empty() const { return size() == 0; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }

  double output_mean() const;
  /// Sample standard deviation of the outputs, or 1 when it is below 1e-12.
  double output_scale() const;
  Eigen::VectorXd standardized_outputs() const;
  double best_output() const;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd outputs_;
};

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Cholesky of K + (noise + jitter) I. Jitter starts at 1e-8 * signal variance and grows by 10x
/// up to 1e-2 * signal variance; beyond that NumericalFailure is thrown.
struct CovarianceFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Eigen::MatrixXd covariance_matrix(const KernelParams& params, const Eigen::MatrixXd& inputs);
CovarianceFactor factorize_covariance(const KernelParams& params, const Eigen::MatrixXd& inputs);

/// A GP conditioned on a dataset with fixed hyperparameters.
class GpModel {
 public:
  GpModel(KernelParams params, GpDataset dataset);

  const KernelParams& params() const { return params_; }
  const GpDataset& dataset() const { return dataset_; }
  double jitter() const { return factor_.jitter; }

  /// Posterior of the latent function at `query`, in de-standardized units.
  GpPosterior predict(const Eigen::Ref<const Eigen::VectorXd>& query) const;

 private:
  KernelParams params_;
  GpDataset dataset_;
  CovarianceFactor factor_;
  Eigen::VectorXd alpha_;
  double mean_ = 0.0;
  double scale_ = 1.0;
};

GpPosterior posterior(const KernelParams& params, const GpDataset& dataset, const Eigen::VectorXd& query);

/// Everything the MAP objective needs besides the hyperparameters.
struct MapProblem {
  const GpDataset& dataset;
  LengthscalePrior prior;
  KernelFamily family = KernelFamily::Matern52;
};

/// Log-parameter vector layout: [log l_1..log l_D, log signal_variance, log(noise - floor)].
Eigen::VectorXd to_log_params(const KernelParams& params);
KernelParams from_log_params(const Eigen::VectorXd& theta, KernelFamily family);

/// Log marginal likelihood of the standardized outputs plus the log priors on lengthscales,
/// signal variance and noise variance. Returns -inf if the covariance cannot be factorized.
double map_objective(const MapProblem& problem, const KernelParams& params);

/// map_objective and its gradient with respect to to_log_params(params).
double map_objective(const MapProblem& problem, const Eigen::VectorXd& theta, Eigen::VectorXd* grad);

struct FitOptions {
  int restarts = 5;
  int max_iterations = 500;
  double objective_tolerance = 1e-6;
};

/// Parameters the first restart starts from: lengthscales at the prior median, unit signal
/// variance, noise 1e-4.
KernelParams prior_median_params(const LengthscalePrior& prior, KernelFamily family);

/// Multi-start MAP fit. Restart 0 starts at prior_median_params; the rest draw from the priors
/// using `rng`. Highest objective wins, ties to the lowest restart index.
KernelParams fit(const GpDataset& dataset, const LengthscalePrior& prior, KernelFamily family,
                 const FitOptions& options, Rng& rng);

}  // namespace bodegen
