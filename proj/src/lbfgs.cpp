#include "bodegen/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "bodegen/errors.hpp"

namespace bodegen {

namespace {

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop_direction(const Eigen::VectorXd& grad, const std::deque<Correction>& history) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const Correction& last = history.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;

  Eigen::VectorXd grad(x0.size());
  double value = f(x0, grad);
  if (!std::isfinite(value) || !grad.allFinite())
    throw NumericalFailure("objective is not finite at the starting point");

  LbfgsResult result{std::move(x0), value, 0};
  std::deque<Correction> history;
  Eigen::VectorXd trial_grad(result.x.size());

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    Eigen::VectorXd direction = two_loop_direction(grad, history);
    double slope = direction.dot(grad);
    if (!(slope < 0.0)) {
      history.clear();
      direction = -grad;
      slope = -grad.squaredNorm();
    }
    double step = 1.0;
    const double largest = direction.lpNorm<Eigen::Infinity>();
    if (largest * step > options.max_step) step = options.max_step / largest;

    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_value = std::numeric_limits<double>::infinity();
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      trial = result.x + step * direction;
      trial_value = f(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_grad.allFinite() &&
          trial_value <= result.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Correction c{trial - result.x, trial_grad - grad, 0.0};
    const double sy = c.s.dot(c.y);
    if (sy > 1e-12 * c.y.squaredNorm() && sy > 0.0) {
      c.rho = 1.0 / sy;
      history.push_back(std::move(c));
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }

    const double improvement = result.value - trial_value;
    result.x = std::move(trial);
    result.value = trial_value;
    grad = trial_grad;
    result.iterations = iter + 1;
    if (improvement < options.objective_tolerance) break;
  }
  return result;
}

}  // namespace bodegen
