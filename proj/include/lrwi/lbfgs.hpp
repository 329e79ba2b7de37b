#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "lrwi/errors.hpp"

namespace lrwi {

struct LbfgsOptions {
  int memory = 10;
  double c1 = 1e-4;         // Armijo sufficient-decrease constant
  int max_backtracks = 30;  // step halvings per line search
};

enum class StepOutcome {
  accepted,           // quasi-Newton step accepted
  fallback_accepted,  // line search failed, steepest descent accepted
  stalled             // both searches exhausted; iterate unchanged
};

// Limited-memory BFGS state: curvature pairs and the scaled-identity seed
// for the implicit inverse Hessian. With empty memory the direction is
// steepest descent scaled to unit length.
class LbfgsState {
 public:
  explicit LbfgsState(int memory = 10) : memory_(memory) {
    if (memory < 1) throw DomainError("lbfgs: memory must be >= 1");
  }

  void reset() {
    pairs_.clear();
    h0_ = 1.0;
  }

  int stored() const { return static_cast<int>(pairs_.size()); }

  // Pairs that violate the curvature condition s^T y > 0 are dropped rather
  // than stored, keeping the implicit Hessian positive definite.
  void push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-12 * s.norm() * y.norm())) return;
    pairs_.emplace_back(s, y);
    if (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
    h0_ = sy / y.squaredNorm();
  }

  Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
    if (pairs_.empty()) {
      const double gn = g.norm();
      return gn > 0.0 ? Eigen::VectorXd(-g / gn) : Eigen::VectorXd(-g);
    }
    // standard two-loop recursion
    Eigen::VectorXd q = g;
    const int k = stored();
    std::vector<double> alpha(static_cast<std::size_t>(k));
    std::vector<double> rho(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
      const auto& [s, y] = pairs_[static_cast<std::size_t>(i)];
      rho[static_cast<std::size_t>(i)] = 1.0 / s.dot(y);
      alpha[static_cast<std::size_t>(i)] =
          rho[static_cast<std::size_t>(i)] * s.dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y;
    }
    q *= h0_;
    for (int i = 0; i < k; ++i) {
      const auto& [s, y] = pairs_[static_cast<std::size_t>(i)];
      const double beta = rho[static_cast<std::size_t>(i)] * y.dot(q);
      q += (alpha[static_cast<std::size_t>(i)] - beta) * s;
    }
    return -q;
  }

 private:
  int memory_;
  double h0_ = 1.0;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs_;
};

struct StepResult {
  StepOutcome outcome = StepOutcome::stalled;
  double step = 0.0;  // accepted fraction of the search direction
};

// One quasi-Newton iteration with Armijo backtracking (step halving).
// `project`, when given, clips every trial point; the sufficient-decrease
// test then uses g^T (x_trial - x), so accepted objectives are
// non-increasing by construction. On line-search failure the step retries
// once along steepest descent before reporting a stall.
//
// x, f, g are updated in place to the accepted iterate and its gradient.
inline StepResult lbfgs_step(
    LbfgsState& state, Eigen::VectorXd& x, double& f, Eigen::VectorXd& g,
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<std::pair<double, Eigen::VectorXd>(
        const Eigen::VectorXd&)>& value_grad,
    const LbfgsOptions& opts = {},
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project =
        {}) {
  const auto clip = [&](const Eigen::VectorXd& v) {
    return project ? project(v) : v;
  };

  // Returns true on acceptance and commits (x, f, g, state).
  const auto search = [&](const Eigen::VectorXd& dir, StepResult& out) {
    double step = 1.0;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, step *= 0.5) {
      const Eigen::VectorXd xc = clip(x + step * dir);
      const double slope = g.dot(xc - x);
      if (!(slope < 0.0)) continue;  // projection swallowed the step
      // The full step is usually the accepted one; evaluating its gradient
      // eagerly saves one objective evaluation per iteration.
      double fc;
      std::optional<Eigen::VectorXd> gc;
      if (bt == 0) {
        auto [fv, gv] = value_grad(xc);
        fc = fv;
        gc = std::move(gv);
      } else {
        fc = value(xc);
      }
      if (fc <= f + opts.c1 * slope) {
        if (!gc) {
          auto [fv, gv] = value_grad(xc);
          fc = fv;
          gc = std::move(gv);
        }
        out.step = step;
        state.push(xc - x, *gc - g);
        x = xc;
        f = fc;
        g = std::move(*gc);
        return true;
      }
    }
    return false;
  };

  StepResult res;
  Eigen::VectorXd dir = state.direction(g);
  if (g.dot(dir) >= 0.0) dir = -g;  // guard against a corrupted memory
  if (search(dir, res)) {
    res.outcome = StepOutcome::accepted;
    return res;
  }
  if (state.stored() > 0) {
    state.reset();
    if (search(-g, res)) {
      res.outcome = StepOutcome::fallback_accepted;
      return res;
    }
  }
  res.outcome = StepOutcome::stalled;
  return res;
}

struct ThetaStepResult {
  double theta = 0.0;
  double value = 0.0;
  bool moved = false;
};

// Backtracking gradient-descent update of the mixing angle. The first trial
// moves 0.1 rad against the gradient; the step halves until sufficient
// decrease. theta is unconstrained, so no wrapping is applied.
inline ThetaStepResult theta_step(
    double theta, double f, double g_theta,
    const std::function<double(double)>& value, double initial_move = 0.1,
    double c1 = 1e-4, int max_backtracks = 30) {
  ThetaStepResult res;
  res.theta = theta;
  res.value = f;
  if (g_theta == 0.0 || !std::isfinite(g_theta)) return res;
  double delta = -(g_theta > 0.0 ? 1.0 : -1.0) * initial_move;
  for (int bt = 0; bt <= max_backtracks; ++bt, delta *= 0.5) {
    const double fc = value(theta + delta);
    if (fc <= f + c1 * g_theta * delta) {
      res.theta = theta + delta;
      res.value = fc;
      res.moved = true;
      return res;
    }
  }
  return res;
}

}  // namespace lrwi
