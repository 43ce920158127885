#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/LU>

#include "bodegen/gp.hpp"

using namespace bodegen;

namespace {

struct Case {
  KernelParams params;
  GpDataset data;
  Eigen::VectorXd query;
};

Case random_case(Rng& rng, KernelFamily fam) {
  const int n = 1 + static_cast<int>(rng.uniform01() * 8);
  const int d = 1 + static_cast<int>(rng.uniform01() * 3);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n), l(d), q(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-2, 2);
    y[i] = rng.uniform(-1, 3);
  }
  for (int j = 0; j < d; ++j) {
    l[j] = rng.uniform(0.3, 2.0);
    q[j] = rng.uniform(-2, 2);
  }
  return {KernelParams{l, rng.uniform(0.5, 2.0), rng.uniform(1e-3, 1e-1), fam}, GpDataset(x, y), q};
}

// Dense explicit-inverse posterior in the same standardized units.
GpPosterior oracle(const Case& c, double jitter) {
  const auto& x = c.data.inputs();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  Eigen::VectorXd kq(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    kq[a] = kernel_eval(c.params, x.row(a), c.query.transpose());
    for (Eigen::Index b = 0; b < n; ++b) k(a, b) = kernel_eval(c.params, x.row(a), x.row(b));
  }
  k.diagonal().array() += c.params.noise_variance + jitter;
  const Eigen::MatrixXd kinv = k.fullPivLu().inverse();
  const double mu = c.data.output_mean(), s = c.data.output_scale();
  const Eigen::VectorXd ys = (c.data.outputs().array() - mu) / s;
  return {mu + s * kq.dot(kinv * ys), s * s * (c.params.signal_variance - kq.dot(kinv * kq))};
}

}  // namespace

TEST(GpPosterior, MatchesExplicitInverse) {
  Rng rng(2024);
  for (auto fam : {KernelFamily::Matern52, KernelFamily::RBF}) {
    for (int t = 0; t < 50; ++t) {
      const Case c = random_case(rng, fam);
      const GpModel model(c.params, c.data);
      const GpPosterior got = model.predict(c.query);
      const GpPosterior want = oracle(c, model.jitter());
      EXPECT_NEAR(got.mean, want.mean, 1e-8 * std::abs(want.mean));
      EXPECT_NEAR(got.variance, want.variance, 1e-8 * std::abs(want.variance));
    }
  }
}

TEST(GpPosterior, InterpolatesWithTinyNoise) {
  Eigen::MatrixXd x(3, 1);
  x << -1, 0, 1;
  const GpDataset data(x, Eigen::Vector3d(0.2, 0.5, 0.9));
  const GpModel model(KernelParams{Eigen::VectorXd::Ones(1), 1.0, 1e-8, KernelFamily::Matern52}, data);
  for (int i = 0; i < 3; ++i) {
    const auto p = model.predict(x.row(i).transpose());
    EXPECT_NEAR(p.mean, data.outputs()[i], 1e-5);
    EXPECT_LT(p.variance, 1e-5);
  }
}

TEST(GpPosterior, NoiselessInterpolation) {
  Eigen::MatrixXd x(3, 2);
  x << -1, 0.5, 0, 0, 1, -0.5;
  const GpDataset data(x, Eigen::Vector3d(0.2, 0.55, 0.9));
  for (auto fam : {KernelFamily::Matern52, KernelFamily::RBF}) {
    const GpModel model(KernelParams{Eigen::VectorXd::Ones(2), 1.0, 0.0, fam}, data);
    for (int i = 0; i < 3; ++i) {
      const auto p = model.predict(x.row(i).transpose());
      EXPECT_NEAR(p.mean, data.outputs()[i], 1e-8);
      EXPECT_LE(p.variance, 1e-8);
    }
  }
}

TEST(GpPosterior, RevertsToPriorFarAway) {
  Eigen::MatrixXd x(2, 1);
  x << 0, 0.5;
  const GpDataset data(x, Eigen::Vector2d(1.0, 3.0));
  const GpModel model(KernelParams{Eigen::VectorXd::Ones(1), 1.0, 1e-4, KernelFamily::RBF}, data);
  const auto p = model.predict(Eigen::VectorXd::Constant(1, 100.0));
  EXPECT_NEAR(p.mean, 2.0, 1e-9);
  EXPECT_NEAR(p.variance, data.output_scale() * data.output_scale(), 1e-9);
}

TEST(GpPosterior, ConstantOutputsDoNotBlowUp) {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 0, 1, 1, 1;
  const GpDataset data(x, Eigen::Vector4d::Constant(0.25));
  EXPECT_DOUBLE_EQ(data.output_scale(), 1.0);
  const GpModel model(KernelParams{Eigen::VectorXd::Ones(2), 1.0, 1e-4, KernelFamily::Matern52}, data);
  const auto p = model.predict(Eigen::Vector2d(0.5, 0.5));
  EXPECT_NEAR(p.mean, 0.25, 1e-12);
  EXPECT_TRUE(std::isfinite(p.variance));
}

TEST(GpPosterior, DuplicateInputsNeedJitter) {
  Eigen::MatrixXd x(3, 1);
  x << 0.3, 0.3, 0.3;
  const GpDataset data(x, Eigen::Vector3d(0.1, 0.1, 0.1));
  const GpModel model(KernelParams{Eigen::VectorXd::Ones(1), 1.0, 0.0, KernelFamily::RBF}, data);
  EXPECT_GE(model.jitter(), 1e-8);
  EXPECT_TRUE(std::isfinite(model.predict(Eigen::VectorXd::Constant(1, 0.0)).mean));
}

TEST(GpPosterior, Errors) {
  const KernelParams p{Eigen::VectorXd::Ones(2), 1.0, 1e-4, KernelFamily::RBF};
  EXPECT_THROW(GpModel(p, GpDataset()), InsufficientData);
  Eigen::MatrixXd x(1, 3);
  x.setZero();
  EXPECT_THROW(GpModel(p, GpDataset(x, Eigen::VectorXd::Zero(1))), DimensionMismatch);
  Eigen::MatrixXd x2(1, 2);
  x2.setZero();
  const GpModel model(p, GpDataset(x2, Eigen::VectorXd::Zero(1)));
  EXPECT_THROW(model.predict(Eigen::VectorXd::Zero(3)), DimensionMismatch);
}

TEST(GpPosterior, NonFiniteCovarianceFails) {
  Eigen::MatrixXd x(2, 1);
  x << 0, std::nan("");
  EXPECT_THROW(factorize_covariance(KernelParams{Eigen::VectorXd::Ones(1), 1.0, 0.0, KernelFamily::RBF}, x),
               NumericalFailure);
}

TEST(MapObjective, GradientMatchesFiniteDifference) {
  Rng rng(31);
  for (auto fam : {KernelFamily::Matern52, KernelFamily::RBF}) {
    for (int t = 0; t < 10; ++t) {
      Case c = random_case(rng, fam);
      if (c.data.size() < 2) continue;
      const MapProblem problem{c.data, LengthscalePrior::for_dim(c.data.dim()), fam};
      const Eigen::VectorXd theta = to_log_params(c.params);
      Eigen::VectorXd grad;
      map_objective(problem, theta, &grad);
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double h = 1e-5;
        Eigen::VectorXd tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const double fd = (map_objective(problem, tp, nullptr) - map_objective(problem, tm, nullptr)) / (2 * h);
        EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "param " << i;
      }
    }
  }
}

TEST(MapObjective, LogParamsRoundTrip) {
  const KernelParams p{Eigen::Vector2d(0.5, 3.0), 1.5, 2e-3, KernelFamily::RBF};
  const KernelParams q = from_log_params(to_log_params(p), KernelFamily::RBF);
  EXPECT_TRUE(q.lengthscales.isApprox(p.lengthscales));
  EXPECT_NEAR(q.signal_variance, 1.5, 1e-12);
  EXPECT_NEAR(q.noise_variance, 2e-3, 1e-15);
}

TEST(Fit, NeedsTwoPoints) {
  Rng rng(1);
  Eigen::MatrixXd x(1, 2);
  x.setZero();
  EXPECT_THROW(fit(GpDataset(x, Eigen::VectorXd::Zero(1)), LengthscalePrior::for_dim(2), KernelFamily::Matern52, {},
                   rng),
               InsufficientData);
}

TEST(Fit, ImprovesOnStartAndIsDeterministic) {
  Rng data_rng(5);
  Eigen::MatrixXd x(12, 2);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = data_rng.uniform(-1, 1);
    x(i, 1) = data_rng.uniform(-1, 1);
    y[i] = std::sin(3 * x(i, 0)) + 0.1 * x(i, 1);
  }
  const GpDataset data(x, y);
  const auto prior = LengthscalePrior::for_dim(2);
  Rng r1(9), r2(9);
  const KernelParams a = fit(data, prior, KernelFamily::Matern52, {}, r1);
  const KernelParams b = fit(data, prior, KernelFamily::Matern52, {}, r2);
  EXPECT_EQ(a.lengthscales, b.lengthscales);
  EXPECT_EQ(a.signal_variance, b.signal_variance);
  const MapProblem problem{data, prior, KernelFamily::Matern52};
  EXPECT_GE(map_objective(problem, a), map_objective(problem, prior_median_params(prior, KernelFamily::Matern52)));
  // x0 matters, x1 barely does.
  EXPECT_LT(a.lengthscales[0], a.lengthscales[1]);
}

TEST(Fit, PriorMedianStart) {
  const auto p = prior_median_params(LengthscalePrior::for_dim(256), KernelFamily::RBF);
  EXPECT_EQ(p.lengthscales.size(), 256);
  EXPECT_NEAR(p.lengthscales[0], 16.0, 1e-12);
  EXPECT_EQ(p.signal_variance, 1.0);
}
