#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrwi/acquisition.hpp"
#include "lrwi/errors.hpp"
#include "lrwi/grid.hpp"
#include "lrwi/inversion.hpp"
#include "lrwi/lbfgs.hpp"
#include "lrwi/lrwi.hpp"
#include "lrwi/penalty.hpp"

namespace lrwi {

enum class Method { fwi, wri, lrwi };

inline Method method_from_string(const std::string& s) {
  if (s == "fwi") return Method::fwi;
  if (s == "wri") return Method::wri;
  if (s == "lrwi") return Method::lrwi;
  throw ConfigError("unknown method '" + s + "' (expected fwi, wri or lrwi)");
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::fwi:
      return "fwi";
    case Method::wri:
      return "wri";
    case Method::lrwi:
      return "lrwi";
  }
  throw DomainError("method_name: invalid enum value");
}

// Velocity box constraints, applied to combined squared-slowness models
// (classical iterates and rank-2 outputs), never to the m1/m2 components.
struct Bounds {
  bool enabled = true;
  double v_min = 1.0;  // km/s
  double v_max = 6.5;  // km/s

  void validate() const {
    if (enabled && !(v_min > 0.0 && v_min < v_max &&
                     std::isfinite(v_min) && std::isfinite(v_max)))
      throw DomainError("bounds: need 0 < v_min < v_max");
  }
};

// Clip the velocity equivalent of squared slowness into [v_min, v_max];
// nonpositive raw values land on the v_max bound.
inline Eigen::VectorXd apply_bounds_values(const Eigen::VectorXd& m,
                                           const Bounds& b) {
  if (!b.enabled) return m;
  b.validate();
  const double lo = 1.0 / (b.v_max * b.v_max);
  const double hi = 1.0 / (b.v_min * b.v_min);
  return m.cwiseMax(lo).cwiseMin(hi);
}

inline SlownessModel apply_bounds(const SlownessModel& m, double v_min,
                                  double v_max) {
  Bounds b;
  b.v_min = v_min;
  b.v_max = v_max;
  return SlownessModel(m.grid, apply_bounds_values(m.values, b));
}

inline SlownessModel apply_bounds(const SlownessModel& m, const Bounds& b) {
  if (!b.enabled) return m;
  return apply_bounds(m, b.v_min, b.v_max);
}

// One row of the run report; iter 0 is the band-initial evaluation.
struct IterRecord {
  int iter = 0;
  int band = 0;
  double objective = 0.0;
  double data_term = 0.0;
  double pde_term = 0.0;
  double rank1_term = 0.0;
  double grad_norm = 0.0;  // infinity norm over all active variables
  double theta = 0.0;      // 0 on classical (fwi/wri) rows
  double rel_model_error = std::numeric_limits<double>::quiet_NaN();
  double step = 0.0;  // accepted model line-search fraction
};

struct BandPenalties {
  int band = 0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
};

struct RunConfig {
  Method method = Method::lrwi;
  std::vector<std::vector<double>> bands;  // Hz, each ascending
  int iters_per_band = 45;
  double beta1 = 1e-8;
  double beta2 = 1e-12;
  double growth1 = 1.0;  // geometric lambda growth across bands
  double growth2 = 1.0;  // geometric gamma growth across bands
  bool reestimate_per_band = true;  // false: freeze mu1/mu2 after first use
  double theta0 = 0.25 * std::numbers::pi;
  bool lrwi_all_bands = false;  // false: lifted first band, then fwi
  Bounds bounds;
  int lbfgs_memory = 10;
  double grad_stop_rel = 1e-10;  // early exit on ‖g‖inf < rel · initial
  double mu1_tol = 1e-4;

  void validate() const {
    if (bands.empty()) throw ConfigError("run: no frequency bands given");
    for (const auto& band : bands) {
      if (band.empty()) throw ConfigError("run: empty frequency band");
      check_frequencies(band);
      for (std::size_t j = 1; j < band.size(); ++j)
        if (!(band[j] > band[j - 1]))
          throw ConfigError("run: band frequencies must be ascending");
    }
    if (iters_per_band < 1)
      throw ConfigError("run: iters_per_band must be >= 1");
    if (lbfgs_memory < 1) throw ConfigError("run: lbfgs_memory must be >= 1");
    if (!std::isfinite(theta0)) throw ConfigError("run: theta0 not finite");
    if (!(grad_stop_rel >= 0.0))
      throw ConfigError("run: grad_stop_rel must be >= 0");
    bounds.validate();
  }
};

struct RunResult {
  std::vector<IterRecord> records;
  std::vector<BandPenalties> penalties;  // one entry per band that used any
  std::optional<SlownessModel> model;    // final combined (bounded) model
  std::optional<Rank2Model> rank2;       // final lifted state, if any
  std::string failure;                   // nonempty: aborted mid-band

  bool ok() const { return failure.empty(); }
};

namespace detail {

// Shared inner loop for the two classical single-model objectives.
// m enters feasible and stays feasible via the projected line search.
template <class Problem>
void run_classical_band(const Problem& prob, int band, const RunConfig& cfg,
                        Eigen::VectorXd& m,
                        const std::function<double(const Eigen::VectorXd&)>&
                            rel_err,
                        std::vector<IterRecord>& records) {
  ObjectiveReport last_rep;
  const auto value = [&](const Eigen::VectorXd& x) { return prob.value(x); };
  const auto value_grad = [&](const Eigen::VectorXd& x) {
    auto [rep, vg] = prob.eval(x, true);
    last_rep = std::move(rep);
    return std::make_pair(vg.value, std::move(vg.grad));
  };
  const auto project = [&](const Eigen::VectorXd& x) {
    return apply_bounds_values(x, cfg.bounds);
  };

  auto [f, g] = value_grad(m);
  const auto record = [&](int iter, double step) {
    IterRecord row;
    row.iter = iter;
    row.band = band;
    row.objective = last_rep.terms.total;
    row.data_term = last_rep.terms.data_term;
    row.pde_term = last_rep.terms.pde_term;
    row.rank1_term = last_rep.terms.rank1_term;
    row.grad_norm = g.template lpNorm<Eigen::Infinity>();
    row.theta = 0.0;
    row.rel_model_error = rel_err(m);
    row.step = step;
    records.push_back(row);
  };
  record(0, 0.0);
  const double g0 = g.template lpNorm<Eigen::Infinity>();

  LbfgsState state(cfg.lbfgs_memory);
  LbfgsOptions opts;
  opts.memory = cfg.lbfgs_memory;
  for (int k = 1; k <= cfg.iters_per_band; ++k) {
    const StepResult sr = lbfgs_step(
        state, m, f, g, value, value_grad, opts,
        cfg.bounds.enabled
            ? std::function<Eigen::VectorXd(const Eigen::VectorXd&)>(project)
            : std::function<Eigen::VectorXd(const Eigen::VectorXd&)>{});
    if (sr.outcome == StepOutcome::stalled) break;
    record(k, sr.step);
    if (g.template lpNorm<Eigen::Infinity>() < cfg.grad_stop_rel * g0) break;
  }
}

inline void run_lifted_band(const LrwiProblem& prob, int band,
                            const RunConfig& cfg, Eigen::VectorXd& m1,
                            Eigen::VectorXd& m2, double& theta,
                            const std::function<double(
                                const Eigen::VectorXd&, double)>& rel_err,
                            std::vector<IterRecord>& records) {
  const int ng = prob.context().n_grid();
  LrwiProblem::Eval last;
  const auto value = [&](const Eigen::VectorXd& x) {
    return prob.evaluate(x.head(ng), x.tail(ng), theta, false).value();
  };
  const auto value_grad = [&](const Eigen::VectorXd& x) {
    last = prob.evaluate(x.head(ng), x.tail(ng), theta, true);
    Eigen::VectorXd g(2 * ng);
    g << last.g1, last.g2;
    return std::make_pair(last.value(), std::move(g));
  };

  Eigen::VectorXd x(2 * ng);
  x << m1, m2;
  auto [f, g] = value_grad(x);
  const auto grad_norm = [&]() {
    return std::max(g.lpNorm<Eigen::Infinity>(), std::abs(last.g_theta));
  };
  const auto record = [&](int iter, double step) {
    IterRecord row;
    row.iter = iter;
    row.band = band;
    row.objective = last.report.terms.total;
    row.data_term = last.report.terms.data_term;
    row.pde_term = last.report.terms.pde_term;
    row.rank1_term = last.report.terms.rank1_term;
    row.grad_norm = grad_norm();
    row.theta = theta;
    row.rel_model_error = rel_err(x, theta);
    row.step = step;
    records.push_back(row);
  };
  record(0, 0.0);
  const double g0 = grad_norm();

  LbfgsState state(cfg.lbfgs_memory);
  LbfgsOptions opts;
  opts.memory = cfg.lbfgs_memory;
  for (int k = 1; k <= cfg.iters_per_band; ++k) {
    // model update at fixed theta, then an angle update at the new model;
    // every gradient is taken at a freshly projected wavefield
    const StepResult sr = lbfgs_step(state, x, f, g, value, value_grad, opts);
    const ThetaStepResult ts = theta_step(
        theta, f, last.g_theta, [&](double th) {
          return prob.evaluate(x.head(ng), x.tail(ng), th, false).value();
        });
    if (ts.moved) {
      theta = ts.theta;
      last = prob.evaluate(x.head(ng), x.tail(ng), theta, true);
      f = last.value();
      g.resize(2 * ng);
      g << last.g1, last.g2;
    } else if (sr.outcome == StepOutcome::stalled) {
      break;  // neither block can move: the alternation is finished
    }
    record(k, sr.step);
    if (grad_norm() < cfg.grad_stop_rel * g0) break;
  }
  m1 = x.head(ng);
  m2 = x.tail(ng);
}

}  // namespace detail

// Frequency-continuation driver. Bands run in ascending order and each
// warm-starts from the previous band's output. method == lrwi runs the
// lifted objective on the first band only and continues with fwi from the
// combined model, unless lrwi_all_bands keeps the lifted variables
// throughout. `truth`, when given, feeds the rel_model_error column.
inline RunResult run_inversion(const RunConfig& cfg, const SlownessModel& m0,
                               const Geometry& geometry,
                               const SourceSpectrum& spectrum,
                               const ObservedData& data,
                               const SlownessModel* truth = nullptr) {
  cfg.validate();
  RunResult out;

  SlownessModel current = apply_bounds(m0, cfg.bounds);
  std::optional<Rank2Model> lifted;
  if (cfg.method == Method::lrwi)
    lifted = split(current, cfg.theta0);

  const auto scalar_rel_err = [&](const Eigen::VectorXd& m) {
    if (!truth) return std::numeric_limits<double>::quiet_NaN();
    return relative_values_error(truth->values,
                                 apply_bounds_values(m, cfg.bounds));
  };

  // mu estimates frozen after first use when reestimate_per_band is off
  std::optional<double> frozen_mu1, frozen_mu2;

  for (int b = 0; b < static_cast<int>(cfg.bands.size()); ++b) {
    const std::vector<double>& fs = cfg.bands[b];
    const bool lifted_band =
        cfg.method == Method::lrwi && (b == 0 || cfg.lrwi_all_bands);
    const Method band_method = lifted_band    ? Method::lrwi
                               : cfg.method == Method::lrwi ? Method::fwi
                                                            : cfg.method;
    try {
      const ModelingContext ctx =
          build_context(current, geometry, fs, spectrum, data);

      if (band_method == Method::fwi) {
        const FwiProblem prob(ctx);
        Eigen::VectorXd m = current.values;
        detail::run_classical_band(prob, b, cfg, m, scalar_rel_err,
                                   out.records);
        current = SlownessModel(current.grid, m);
        continue;
      }

      // both penalty objectives scale lambda from the spectral estimate at
      // the band's lowest frequency on the band-initial model
      double mu1;
      if (frozen_mu1 && !cfg.reestimate_per_band) {
        mu1 = *frozen_mu1;
      } else {
        mu1 = estimate_mu1(current, fs.front(), ctx.P, cfg.mu1_tol);
        frozen_mu1 = mu1;
      }
      const double lambda =
          cfg.beta1 * mu1 * std::pow(cfg.growth1, b);

      if (band_method == Method::wri) {
        out.penalties.push_back({b, mu1, 0.0, lambda, 0.0});
        const WriProblem prob(ctx, lambda);
        Eigen::VectorXd m = current.values;
        detail::run_classical_band(prob, b, cfg, m, scalar_rel_err,
                                   out.records);
        current = SlownessModel(current.grid, m);
        continue;
      }

      double mu2;
      if (frozen_mu2 && !cfg.reestimate_per_band) {
        mu2 = *frozen_mu2;
      } else {
        mu2 = estimate_mu2(ctx.blocks.front(), ctx.P, lifted->m1, lifted->m2,
                           lifted->theta, lambda);
        frozen_mu2 = mu2;
      }
      const PenaltyConfig base = make_penalties(
          cfg.beta1, cfg.beta2, mu1, mu2, cfg.growth1, cfg.growth2);
      const PenaltyConfig banded = schedule_step(base, b);
      out.penalties.push_back({b, mu1, mu2, banded.lambda, banded.gamma});

      const LrwiProblem prob(ctx, banded.lambda, banded.gamma);
      Eigen::VectorXd m1 = lifted->m1, m2 = lifted->m2;
      double theta = lifted->theta;
      const auto lifted_rel_err = [&](const Eigen::VectorXd& x, double th) {
        if (!truth) return std::numeric_limits<double>::quiet_NaN();
        const int ng = ctx.n_grid();
        const Eigen::VectorXd combined =
            std::sin(th) * x.head(ng) + std::cos(th) * x.tail(ng);
        return relative_values_error(truth->values,
                                     apply_bounds_values(combined, cfg.bounds));
      };
      detail::run_lifted_band(prob, b, cfg, m1, m2, theta, lifted_rel_err,
                              out.records);
      lifted = Rank2Model(current.grid, m1, m2, theta);
      current = SlownessModel(
          current.grid, apply_bounds_values(combine_values(*lifted),
                                            cfg.bounds));
    } catch (const Error& e) {
      out.failure = "band " + std::to_string(b) + ": " + e.what();
      break;
    }
  }

  out.model = current;
  out.rank2 = lifted;
  return out;
}

}  // namespace lrwi
