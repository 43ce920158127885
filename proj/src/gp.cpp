#include "bodegen/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bodegen/lbfgs.hpp"

namespace bodegen {

namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-2;
constexpr double kMinScale = 1e-12;

double noise_from_log(double t) { return kNoiseVarianceFloor + std::exp(t); }

/// Factorizes k + (noise + jitter) I with escalating jitter. False if every level fails.
bool factorize_with_jitter(const Eigen::MatrixXd& k, const KernelParams& params, Eigen::LLT<Eigen::MatrixXd>& llt,
                           double& jitter) {
  if (!k.allFinite()) return false;
  for (jitter = kJitterStart * params.signal_variance;
       jitter <= kJitterMax * params.signal_variance * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd ky = k;
    ky.diagonal().array() += params.noise_variance + jitter;
    llt.compute(ky);
    if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) return true;
  }
  return false;
}

/// Squared coordinate differences for every unordered pair (a < b), one pair per row.
struct PairDiffs {
  Eigen::MatrixXd sq;  // P x D
  std::vector<std::pair<Eigen::Index, Eigen::Index>> index;

  explicit PairDiffs(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index pairs = n * (n - 1) / 2;
    sq.resize(pairs, x.cols());
    index.reserve(static_cast<std::size_t>(pairs));
    Eigen::Index p = 0;
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a + 1; b < n; ++b, ++p) {
        sq.row(p) = (x.row(a) - x.row(b)).array().square();
        index.emplace_back(a, b);
      }
  }
};

struct Evaluation {
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
};

Evaluation evaluate_map(const PairDiffs& pairs, const Eigen::VectorXd& y, const LengthscalePrior& prior,
                        const KernelParams& params, double noise_log_derivative, bool want_grad) {
  const Eigen::Index n = y.size();
  const Eigen::Index dim = params.lengthscales.size();
  const Eigen::VectorXd inv_l2 = params.lengthscales.array().square().inverse();
  const Eigen::VectorXd r2 = pairs.sq * inv_l2;

  Eigen::MatrixXd k(n, n);
  k.diagonal().setConstant(params.signal_variance);
  for (Eigen::Index p = 0; p < r2.size(); ++p) {
    const auto [a, b] = pairs.index[static_cast<std::size_t>(p)];
    k(a, b) = k(b, a) = covariance_from_sqdist(params.family, params.signal_variance, r2[p]);
  }

  Evaluation out;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorize_with_jitter(k, params, llt, jitter)) return out;

  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det_half = llt.matrixLLT().diagonal().array().log().sum();
  const LogNormal noise_prior = noise_variance_prior();
  out.value = -0.5 * y.dot(alpha) - log_det_half - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
              log_prior(params.lengthscales, prior) + kSignalVariancePrior.log_pdf(params.signal_variance) +
              noise_prior.log_pdf(params.noise_variance);
  if (!want_grad) return out;

  const Eigen::MatrixXd w = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd v(r2.size());
  for (Eigen::Index p = 0; p < r2.size(); ++p) {
    const auto [a, b] = pairs.index[static_cast<std::size_t>(p)];
    v[p] = w(a, b) * covariance_sqdist_derivative(params.family, params.signal_variance, r2[p]);
  }

  out.grad.resize(dim + 2);
  out.grad.head(dim) = -2.0 * (pairs.sq.transpose() * v).cwiseProduct(inv_l2);
  const LogNormal ls_prior = prior.distribution();
  for (Eigen::Index i = 0; i < dim; ++i) out.grad[i] += ls_prior.dlog_pdf_dlog(params.lengthscales[i]);

  out.grad[dim] = 0.5 * ((w.cwiseProduct(k)).sum() + jitter * w.trace()) +
                  kSignalVariancePrior.dlog_pdf_dlog(params.signal_variance);
  // The noise prior is a density in the noise variance itself; chain through exp(t).
  const double dnoise = noise_prior.dlog_pdf_dlog(params.noise_variance) / params.noise_variance;
  out.grad[dim + 1] = (0.5 * w.trace() + dnoise) * noise_log_derivative;
  return out;
}

}  // namespace

GpDataset::GpDataset(Eigen::MatrixXd inputs, Eigen::VectorXd outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (inputs_.rows() != outputs_.size())
    throw DimensionMismatch("dataset has " + std::to_string(inputs_.rows()) + " inputs but " +
                            std::to_string(outputs_.size()) + " outputs");
  if (!inputs_.allFinite() || !outputs_.allFinite()) throw InvalidArgument("dataset values must be finite");
}

void GpDataset::add(const Eigen::VectorXd& input, double output) {
  if (!empty() && input.size() != dim())
    throw DimensionMismatch("dataset point has length " + std::to_string(input.size()) + ", expected " +
                            std::to_string(dim()));
  if (!input.allFinite() || !std::isfinite(output)) throw InvalidArgument("dataset values must be finite");
  const Eigen::Index n = size();
  inputs_.conservativeResize(n + 1, input.size());
  inputs_.row(n) = input.transpose();
  outputs_.conservativeResize(n + 1);
  outputs_[n] = output;
}

double GpDataset::output_mean() const { return empty() ? 0.0 : outputs_.mean(); }

double GpDataset::output_scale() const {
  if (size() < 2) return 1.0;
  const double var = (outputs_.array() - output_mean()).square().sum() / static_cast<double>(size() - 1);
  const double sd = std::sqrt(var);
  return sd < kMinScale ? 1.0 : sd;
}

Eigen::VectorXd GpDataset::standardized_outputs() const {
  return (outputs_.array() - output_mean()) / output_scale();
}

double GpDataset::best_output() const {
  if (empty()) throw InsufficientData("dataset is empty");
  return outputs_.maxCoeff();
}

Eigen::MatrixXd covariance_matrix(const KernelParams& params, const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    k(a, a) = params.signal_variance;
    for (Eigen::Index b = a + 1; b < n; ++b) k(a, b) = k(b, a) = kernel_eval(params, inputs.row(a), inputs.row(b));
  }
  return k;
}

CovarianceFactor factorize_covariance(const KernelParams& params, const Eigen::MatrixXd& inputs) {
  const Eigen::MatrixXd k = covariance_matrix(params, inputs);
  CovarianceFactor f;
  if (!factorize_with_jitter(k, params, f.llt, f.jitter))
    throw NumericalFailure("covariance matrix is not positive definite even with jitter " +
                           std::to_string(kJitterMax) + " x signal variance");
  return f;
}

GpModel::GpModel(KernelParams params, GpDataset dataset) : params_(std::move(params)), dataset_(std::move(dataset)) {
  params_.validate();
  if (dataset_.empty()) throw InsufficientData("cannot condition a GP on an empty dataset");
  if (dataset_.dim() != params_.lengthscales.size())
    throw DimensionMismatch("dataset dimension " + std::to_string(dataset_.dim()) + " does not match " +
                            std::to_string(params_.lengthscales.size()) + " lengthscales");
  factor_ = factorize_covariance(params_, dataset_.inputs());
  mean_ = dataset_.output_mean();
  scale_ = dataset_.output_scale();
  alpha_ = factor_.llt.solve(dataset_.standardized_outputs());
}

GpPosterior GpModel::predict(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  if (query.size() != dataset_.dim())
    throw DimensionMismatch("query has length " + std::to_string(query.size()) + ", expected " +
                            std::to_string(dataset_.dim()));
  const Eigen::MatrixXd& x = dataset_.inputs();
  Eigen::VectorXd kq(x.rows());
  for (Eigen::Index a = 0; a < x.rows(); ++a) kq[a] = kernel_eval(params_, x.row(a), query.transpose());
  const double mean_std = kq.dot(alpha_);
  const Eigen::VectorXd v = factor_.llt.matrixL().solve(kq);
  const double var_std = std::max(0.0, params_.signal_variance - v.squaredNorm());
  return {mean_ + scale_ * mean_std, scale_ * scale_ * var_std};
}

GpPosterior posterior(const KernelParams& params, const GpDataset& dataset, const Eigen::VectorXd& query) {
  return GpModel(params, dataset).predict(query);
}

Eigen::VectorXd to_log_params(const KernelParams& params) {
  const Eigen::Index dim = params.lengthscales.size();
  Eigen::VectorXd theta(dim + 2);
  theta.head(dim) = params.lengthscales.array().log();
  theta[dim] = std::log(params.signal_variance);
  theta[dim + 1] = std::log(std::max(params.noise_variance - kNoiseVarianceFloor, 1e-300));
  return theta;
}

KernelParams from_log_params(const Eigen::VectorXd& theta, KernelFamily family) {
  const Eigen::Index dim = theta.size() - 2;
  KernelParams p;
  p.lengthscales = theta.head(dim).array().exp();
  p.signal_variance = std::exp(theta[dim]);
  p.noise_variance = noise_from_log(theta[dim + 1]);
  p.family = family;
  return p;
}

double map_objective(const MapProblem& problem, const KernelParams& params) {
  params.validate();
  if (problem.dataset.dim() != params.lengthscales.size()) throw DimensionMismatch("parameter/data dimension mismatch");
  const PairDiffs pairs(problem.dataset.inputs());
  return evaluate_map(pairs, problem.dataset.standardized_outputs(), problem.prior, params, 0.0, false).value;
}

double map_objective(const MapProblem& problem, const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  if (theta.size() != problem.dataset.dim() + 2) throw DimensionMismatch("log-parameter vector has the wrong length");
  const PairDiffs pairs(problem.dataset.inputs());
  const KernelParams params = from_log_params(theta, problem.family);
  Evaluation e = evaluate_map(pairs, problem.dataset.standardized_outputs(), problem.prior, params,
                              std::exp(theta[theta.size() - 1]), grad != nullptr);
  if (grad) *grad = std::move(e.grad);
  return e.value;
}

KernelParams prior_median_params(const LengthscalePrior& prior, KernelFamily family) {
  KernelParams p;
  p.lengthscales = Eigen::VectorXd::Constant(prior.input_dim, prior.distribution().median());
  p.signal_variance = 1.0;
  p.noise_variance = 1e-4;
  p.family = family;
  return p;
}

KernelParams fit(const GpDataset& dataset, const LengthscalePrior& prior, KernelFamily family,
                 const FitOptions& options, Rng& rng) {
  if (dataset.size() < 2) throw InsufficientData("fitting needs at least 2 observations, got " +
                                                 std::to_string(dataset.size()));
  if (dataset.dim() != prior.input_dim)
    throw DimensionMismatch("prior is for dimension " + std::to_string(prior.input_dim) + ", data has " +
                            std::to_string(dataset.dim()));
  if (options.restarts < 1) throw InvalidArgument("restarts must be positive");

  const PairDiffs pairs(dataset.inputs());
  const Eigen::VectorXd y = dataset.standardized_outputs();
  const Eigen::Index dim = dataset.dim();

  const Objective negated = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const KernelParams params = from_log_params(theta, family);
    Evaluation e = evaluate_map(pairs, y, prior, params, std::exp(theta[dim + 1]), true);
    if (!std::isfinite(e.value)) return std::numeric_limits<double>::infinity();
    grad = -e.grad;
    return -e.value;
  };

  LbfgsOptions lopt;
  lopt.max_iterations = options.max_iterations;
  lopt.objective_tolerance = options.objective_tolerance;

  // Starting points are drawn up front so the stream layout does not depend on optimizer progress.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(to_log_params(prior_median_params(prior, family)));
  const LogNormal ls = prior.distribution();
  const LogNormal noise = noise_variance_prior();
  for (int r = 1; r < options.restarts; ++r) {
    KernelParams p;
    p.lengthscales.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) p.lengthscales[i] = ls.sample(rng);
    p.signal_variance = kSignalVariancePrior.sample(rng);
    p.noise_variance = kNoiseVarianceFloor + noise.sample(rng);
    p.family = family;
    starts.push_back(to_log_params(p));
  }

  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    Eigen::VectorXd g(dim + 2);
    if (!std::isfinite(negated(starts[r], g))) {
      if (r == 0) throw NumericalFailure("covariance cannot be factorized at the prior-median parameters");
      continue;
    }
    const LbfgsResult res = lbfgs_minimize(negated, starts[r], lopt);
    if (-res.value > best_value) {
      best_value = -res.value;
      best_theta = res.x;
    }
  }
  return from_log_params(best_theta, family);
}

}  // namespace bodegen
