#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lrwi/acquisition.hpp"
#include "lrwi/config.hpp"
#include "lrwi/data_io.hpp"
#include "lrwi/driver.hpp"
#include "lrwi/grid_io.hpp"
#include "lrwi/inversion.hpp"
#include "lrwi/lrwi.hpp"
#include "lrwi/penalty.hpp"
#include "lrwi/report_io.hpp"
#include "lrwi/synthetic.hpp"

namespace lrwi::harness {

// Desk-scale commands (gradcheck, condstudy) refuse larger grids.
inline constexpr int kMaxDeskGrid = 2500;
inline constexpr double kGradcheckThreshold = 1e-4;

// ---------------------------------------------------------------------------
// Config -> domain objects

inline Grid2D grid_from_config(const Config& cfg) {
  return Grid2D(cfg.get_int("grid.nx"), cfg.get_int("grid.nz"),
                cfg.get_double("grid.dx"), cfg.get_double("grid.dz"));
}

// Model described by a `<prefix>.*` section: either a grid file or one of
// the synthetic families (which then need the grid.* keys).
inline SlownessModel model_from_config(const Config& cfg,
                                       const std::string& prefix,
                                       std::uint64_t seed,
                                       const Grid2D* must_match = nullptr) {
  const std::string kind = cfg.get_string(prefix + ".kind");
  if (kind == "file") {
    const GridFileContents gf =
        read_grid_file(cfg.get_string(prefix + ".file"));
    if (must_match)
      require_same_grid(*must_match, gf.grid, prefix.c_str());
    return gf.as_slowness();
  }
  if (kind != "linear-gradient" && kind != "layered" && kind != "wedge")
    throw ConfigError(prefix + ".kind: unknown model kind '" + kind + "'");
  const Grid2D grid = grid_from_config(cfg);
  if (must_match) require_same_grid(*must_match, grid, prefix.c_str());

  SyntheticParams p;
  p.perturb_std = cfg.get_double(prefix + ".perturb_std", 0.0);
  p.perturb_seed = cfg.has(prefix + ".perturb_seed")
                       ? static_cast<std::uint64_t>(
                             cfg.get_int(prefix + ".perturb_seed"))
                       : fnv1a(prefix, seed);
  if (kind == "linear-gradient") {
    p.v_top = cfg.get_double(prefix + ".v_top", 1.5);
    p.v_bottom = cfg.get_double(prefix + ".v_bottom", 4.5);
  } else {
    p.layer_depths = cfg.get_list(prefix + ".layer_depths");
    p.layer_velocities = cfg.get_list(prefix + ".layer_velocities");
    if (kind == "wedge") {
      p.wedge_z0 = cfg.get_double(prefix + ".wedge_z0");
      p.wedge_slope = cfg.get_double(prefix + ".wedge_slope");
      p.wedge_velocity = cfg.get_double(prefix + ".wedge_velocity");
    }
  }
  return velocity_to_slowness(
      make_synthetic(synthetic_kind_from_string(kind), grid, p));
}

inline std::vector<Coord> coords_from_lists(std::vector<double> xs,
                                            std::vector<double> zs,
                                            const std::string& what) {
  if (xs.size() == 1 && zs.size() > 1) xs.assign(zs.size(), xs[0]);
  if (zs.size() == 1 && xs.size() > 1) zs.assign(xs.size(), zs[0]);
  if (xs.size() != zs.size())
    throw ConfigError(what + ": x and z lists differ in length");
  std::vector<Coord> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = {xs[i], zs[i]};
  return out;
}

inline Geometry geometry_from_config(const Config& cfg) {
  Geometry g;
  g.sources = coords_from_lists(cfg.get_list("geometry.source_x"),
                                cfg.get_list("geometry.source_z"),
                                "geometry.source");
  g.receivers = coords_from_lists(cfg.get_list("geometry.receiver_x"),
                                  cfg.get_list("geometry.receiver_z"),
                                  "geometry.receiver");
  return g;
}

inline SourceSpectrum spectrum_from_config(const Config& cfg) {
  SourceSpectrum sp;
  sp.f0 = cfg.get_double("source.f0", 15.0);
  sp.amplitude = cfg.get_double("source.amplitude", 1.0);
  return sp;
}

inline RunConfig run_from_config(const Config& cfg, bool want_method = true,
                                 bool want_bands = true) {
  RunConfig rc;
  if (want_method) rc.method = method_from_string(cfg.get_string("run.method"));
  if (want_bands) rc.bands = cfg.get_bands("run.bands");
  rc.iters_per_band = cfg.get_int("run.iters_per_band", 45);
  rc.beta1 = cfg.get_double("run.beta1", 1e-8);
  rc.beta2 = cfg.get_double("run.beta2", 1e-12);
  rc.growth1 = cfg.get_double("run.growth1", 1.0);
  rc.growth2 = cfg.get_double("run.growth2", 1.0);
  rc.reestimate_per_band = cfg.get_bool("run.reestimate_per_band", true);
  rc.theta0 = cfg.get_double("run.theta0", 0.25 * std::numbers::pi);
  rc.lrwi_all_bands = cfg.get_bool("run.lrwi_all_bands", false);
  rc.bounds.enabled = cfg.get_bool("run.bounds", true);
  rc.bounds.v_min = cfg.get_double("run.v_min", 1.0);
  rc.bounds.v_max = cfg.get_double("run.v_max", 6.5);
  rc.lbfgs_memory = cfg.get_int("run.lbfgs_memory", 10);
  rc.grad_stop_rel = cfg.get_double("run.grad_stop_rel", 1e-10);
  rc.mu1_tol = cfg.get_double("run.mu1_tol", 1e-4);
  return rc;
}

inline void require_band_frequencies(const RunConfig& rc,
                                     const ObservedData& data) {
  for (const auto& band : rc.bands)
    for (double f : band)
      try {
        find_frequency(data.freqs, f);
      } catch (const Error&) {
        throw ConfigError("band frequency " + detail::format_double(f) +
                          " Hz is not present in the data file");
      }
}

inline CsvTable report_table(const std::vector<IterRecord>& recs) {
  CsvTable t({"iter", "band", "objective", "data_term", "pde_term",
              "rank1_term", "grad_norm", "theta", "rel_model_error"});
  for (const auto& r : recs)
    t.add_row({CsvTable::cell(r.iter), CsvTable::cell(r.band),
               CsvTable::cell(r.objective), CsvTable::cell(r.data_term),
               CsvTable::cell(r.pde_term), CsvTable::cell(r.rank1_term),
               CsvTable::cell(r.grad_norm), CsvTable::cell(r.theta),
               CsvTable::cell(r.rel_model_error)});
  return t;
}

// Failure text goes into a CSV cell; keep it one field, one line.
inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

struct CellResult {
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
};

inline CellResult run_cell(const RunConfig& rc, const SlownessModel& init,
                           const Geometry& geom, const SourceSpectrum& sp,
                           const ObservedData& data,
                           const SlownessModel& truth) {
  try {
    const RunResult rr = run_inversion(rc, init, geom, sp, data, &truth);
    if (!rr.ok()) return {std::numeric_limits<double>::quiet_NaN(),
                          csv_safe(rr.failure)};
    return {relative_model_error(truth, *rr.model), ""};
  } catch (const Error& e) {
    return {std::numeric_limits<double>::quiet_NaN(), csv_safe(e.what())};
  }
}

// ---------------------------------------------------------------------------
// forward: synthesize observed data for a model + geometry

inline int cmd_forward(const Config& cfg, const std::filesystem::path& out,
                       std::uint64_t seed) {
  std::filesystem::create_directories(out);
  const SlownessModel truth = model_from_config(cfg, "model", seed);
  const Geometry geom = geometry_from_config(cfg);
  const SourceSpectrum sp = spectrum_from_config(cfg);
  const std::vector<double> freqs = cfg.get_list("data.frequencies");
  const double noise = cfg.get_double("data.noise_std", 0.0);
  cfg.ensure_fully_consumed();

  ObservedData data = forward_model(truth, geom, freqs, sp);
  if (noise > 0.0) add_noise(data, noise, seed + 1);
  write_data_file(out / "data.dat", data);
  write_grid_file(out / "model_true.grid", truth);
  write_manifest(out, "forward", cfg, seed, {"data.dat", "model_true.grid"});
  return 0;
}

// ---------------------------------------------------------------------------
// invert: frequency-continuation inversion from files

inline int cmd_invert(const Config& cfg, const std::filesystem::path& out,
                      std::uint64_t seed) {
  std::filesystem::create_directories(out);
  const SlownessModel init = model_from_config(cfg, "init", seed);
  std::optional<SlownessModel> truth;
  if (cfg.has("truth.file")) {
    const GridFileContents gf = read_grid_file(cfg.get_string("truth.file"));
    require_same_grid(init.grid, gf.grid, "truth");
    truth = gf.as_slowness();
  }
  const ObservedData data = read_data_file(cfg.get_string("data.file"));
  const Geometry geom = geometry_from_config(cfg);
  const SourceSpectrum sp = spectrum_from_config(cfg);
  const RunConfig rc = run_from_config(cfg);
  cfg.ensure_fully_consumed();
  rc.validate();
  require_band_frequencies(rc, data);

  const RunResult rr =
      run_inversion(rc, init, geom, sp, data, truth ? &*truth : nullptr);
  write_csv(out / "report.csv", report_table(rr.records));
  write_grid_file(out / "model_final.grid", *rr.model);
  write_manifest(out, "invert", cfg, seed, {"model_final.grid", "report.csv"});
  if (!rr.ok()) {
    std::cerr << "invert: " << rr.failure << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck: analytic gradients against central finite differences

inline int cmd_gradcheck(const Config& cfg, const std::filesystem::path& out,
                         std::uint64_t seed) {
  std::filesystem::create_directories(out);
  const SlownessModel truth = model_from_config(cfg, "truth", seed);
  const SlownessModel init = model_from_config(cfg, "init", seed, &truth.grid);
  if (init.grid.size() > kMaxDeskGrid)
    throw ConfigError("gradcheck: grid too large, need nx*nz <= " +
                      std::to_string(kMaxDeskGrid));
  const Geometry geom = geometry_from_config(cfg);
  const SourceSpectrum sp = spectrum_from_config(cfg);
  const std::vector<double> freqs = cfg.get_list("data.frequencies");
  const double noise = cfg.get_double("data.noise_std", 0.0);
  const double beta1 = cfg.get_double("check.beta1", 1e-4);
  const double beta2 = cfg.get_double("check.beta2", 1e-8);
  const double theta0 = cfg.get_double("check.theta0", 0.25 * std::numbers::pi);
  const double fd_step = cfg.get_double("check.fd_step", 1e-6);
  cfg.ensure_fully_consumed();

  ObservedData data = forward_model(truth, geom, freqs, sp);
  if (noise > 0.0) add_noise(data, noise, seed + 1);
  const ModelingContext ctx = build_context(init, geom, freqs, sp, data);
  const int ng = ctx.n_grid();

  const double f_low = *std::min_element(freqs.begin(), freqs.end());
  const int j_low = static_cast<int>(
      std::min_element(freqs.begin(), freqs.end()) - freqs.begin());
  const double mu1 = estimate_mu1(init, f_low, ctx.P);
  const double lambda = beta1 * mu1;
  const Rank2Model r0 = split(init, theta0);
  const double mu2 = estimate_mu2(ctx.blocks[static_cast<std::size_t>(j_low)],
                                  ctx.P, r0.m1, r0.m2, theta0, lambda);
  const double gamma = beta2 * mu2;

  CsvTable t({"method", "component", "analytic", "fd", "rel_err"});
  double max_rel = 0.0;
  const auto emit = [&](const std::string& method, int comp, double analytic,
                        double fd, double scale) {
    const double rel = std::abs(analytic - fd) / std::max(scale, 1e-12);
    max_rel = std::max(max_rel, rel);
    t.add_row({method, CsvTable::cell(comp), CsvTable::cell(analytic),
               CsvTable::cell(fd), CsvTable::cell(rel)});
  };
  const auto central = [&](const std::function<double(double)>& f1d,
                           double x) {
    const double h = fd_step * std::max(1.0, std::abs(x));
    return (f1d(x + h) - f1d(x - h)) / (2.0 * h);
  };

  {
    const FwiProblem prob(ctx);
    const ValueGrad vg = prob.value_grad(init.values);
    const double scale = vg.grad.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < ng; ++i) {
      Eigen::VectorXd m = init.values;
      const double fd = central(
          [&](double x) {
            m[i] = x;
            return prob.value(m);
          },
          init.values[i]);
      emit("fwi", i, vg.grad[i], fd, scale);
    }
  }
  {
    const WriProblem prob(ctx, lambda);
    const ValueGrad vg = prob.value_grad(init.values);
    const double scale = vg.grad.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < ng; ++i) {
      Eigen::VectorXd m = init.values;
      const double fd = central(
          [&](double x) {
            m[i] = x;
            return prob.value(m);
          },
          init.values[i]);
      emit("wri", i, vg.grad[i], fd, scale);
    }
  }
  {
    const LrwiProblem prob(ctx, lambda, gamma);
    const LrwiProblem::Eval ev = prob.evaluate(r0.m1, r0.m2, theta0, true);
    Eigen::VectorXd g(2 * ng);
    g << ev.g1, ev.g2;
    const double scale = g.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < 2 * ng; ++i) {
      Eigen::VectorXd m1 = r0.m1, m2 = r0.m2;
      double& xi = i < ng ? m1[i] : m2[i - ng];
      const double fd = central(
          [&](double x) {
            xi = x;
            return prob.evaluate(m1, m2, theta0, false).value();
          },
          xi);
      emit("lrwi-m", i, g[i], fd, scale);
    }
    const double fd_theta = central(
        [&](double th) { return prob.evaluate(r0.m1, r0.m2, th, false).value(); },
        theta0);
    emit("lrwi-theta", 0, ev.g_theta, fd_theta,
         std::max(std::abs(ev.g_theta), scale));
  }

  write_csv(out / "gradcheck.csv", t);
  write_manifest(out, "gradcheck", cfg, seed, {"gradcheck.csv"});
  std::cout << "gradcheck max relative error = "
            << detail::format_double(max_rel) << "\n";
  return max_rel <= kGradcheckThreshold ? 0 : 1;
}

// ---------------------------------------------------------------------------
// condstudy: conditioning of the augmented normal matrix over a beta grid

inline int cmd_condstudy(const Config& cfg, const std::filesystem::path& out,
                         std::uint64_t seed) {
  std::filesystem::create_directories(out);
  const SlownessModel model = model_from_config(cfg, "model", seed);
  if (model.grid.size() > kMaxDeskGrid)
    throw ConfigError("condstudy: grid too large, need nx*nz <= " +
                      std::to_string(kMaxDeskGrid));
  const std::vector<Coord> rcv = coords_from_lists(
      cfg.get_list("geometry.receiver_x"), cfg.get_list("geometry.receiver_z"),
      "geometry.receiver");
  const double f_hz = cfg.get_double("study.frequency");
  const std::vector<double> b1s = cfg.get_list("study.beta1");
  const std::vector<double> b2s = cfg.get_list("study.beta2");
  const double theta0 = cfg.get_double("study.theta0", 0.25 * std::numbers::pi);
  PowerOptions popts;
  popts.max_iter = cfg.get_int("study.power_iters", 1000);
  popts.tol = cfg.get_double("study.power_tol", 1e-6);
  const bool want_pgm = cfg.get_bool("study.pgm", true);
  cfg.ensure_fully_consumed();

  Geometry g;
  g.receivers = rcv;
  g.sources = {rcv.front()};  // snapping needs one; the study uses none
  const SnappedGeometry snap = snap_geometry(model.grid, g);
  const SparseComplexMatrix P =
      projection_matrix(model.grid, snap.receiver_nodes);

  FreqBlock blk;
  blk.f_hz = f_hz;
  blk.omega = angular_frequency(f_hz);
  blk.laplacian = laplacian_radiating(model.grid, blk.omega, model.values);
  const SparseComplexMatrix A = helmholtz_of(blk, model.values);
  const double cond_ref = condition_estimate(A.gram(), popts);
  const double mu1 = estimate_mu1(model, f_hz, P);
  const Rank2Model r0 = split(model, theta0);

  CsvTable t({"beta1", "beta2", "cond", "cond_ref"});
  std::vector<double> log_cond;
  log_cond.reserve(b1s.size() * b2s.size());
  for (double b1 : b1s) {
    const double lambda = b1 * mu1;
    const double mu2 = estimate_mu2(blk, P, r0.m1, r0.m2, theta0, lambda);
    for (double b2 : b2s) {
      double cond = std::numeric_limits<double>::infinity();
      try {
        const SparseComplexMatrix S =
            augmented_matrix(blk, P, r0.m1, r0.m2, theta0, lambda, b2 * mu2);
        cond = condition_estimate(S.gram(), popts);
      } catch (const SingularityError&) {
        // recorded as inf: the study reports breakdown, it does not crash
      }
      t.add_row({CsvTable::cell(b1), CsvTable::cell(b2), CsvTable::cell(cond),
                 CsvTable::cell(cond_ref)});
      log_cond.push_back(std::log10(cond));
    }
  }
  write_csv(out / "cond.csv", t);
  std::vector<std::string> outputs = {"cond.csv"};
  if (want_pgm) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : log_cond)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!(lo < hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    write_pgm(out / "cond.pgm", static_cast<int>(b2s.size()),
              static_cast<int>(b1s.size()), gray_map(log_cond, lo, hi));
    outputs.push_back("cond.pgm");
  }
  write_manifest(out, "condstudy", cfg, seed, outputs);
  return 0;
}

// ---------------------------------------------------------------------------
// betasweep: relative model error over penalty scales

inline int cmd_betasweep(const Config& cfg, const std::filesystem::path& out,
                         std::uint64_t seed) {
  std::filesystem::create_directories(out);
  if (cfg.has("run.beta1") || cfg.has("run.beta2") || cfg.has("run.method"))
    throw ConfigError(
        "betasweep: use sweep.beta1 / sweep.beta2; method is implied");
  const SlownessModel truth = model_from_config(cfg, "truth", seed);
  const SlownessModel init = model_from_config(cfg, "init", seed, &truth.grid);
  const Geometry geom = geometry_from_config(cfg);
  const SourceSpectrum sp = spectrum_from_config(cfg);
  const std::vector<double> freqs = cfg.get_list("data.frequencies");
  const double noise = cfg.get_double("data.noise_std", 0.0);
  const RunConfig rc_base = run_from_config(cfg, false, true);
  const std::vector<double> b1s = cfg.get_list("sweep.beta1");
  const std::vector<double> b2s = cfg.get_list("sweep.beta2");
  cfg.ensure_fully_consumed();
  rc_base.validate();

  ObservedData data = forward_model(truth, geom, freqs, sp);
  if (noise > 0.0) add_noise(data, noise, seed + 1);
  require_band_frequencies(rc_base, data);

  CsvTable t({"method", "beta1", "beta2", "rel_model_error", "reason"});
  for (double b1 : b1s) {
    RunConfig rc = rc_base;
    rc.method = Method::wri;
    rc.beta1 = b1;
    const CellResult cell = run_cell(rc, init, geom, sp, data, truth);
    t.add_row({"wri", CsvTable::cell(b1),
               CsvTable::cell(std::numeric_limits<double>::quiet_NaN()),
               CsvTable::cell(cell.rel_err), cell.reason});
  }
  for (double b1 : b1s)
    for (double b2 : b2s) {
      RunConfig rc = rc_base;
      rc.method = Method::lrwi;
      rc.beta1 = b1;
      rc.beta2 = b2;
      const CellResult cell = run_cell(rc, init, geom, sp, data, truth);
      t.add_row({"lrwi", CsvTable::cell(b1), CsvTable::cell(b2),
                 CsvTable::cell(cell.rel_err), cell.reason});
    }
  write_csv(out / "betasweep.csv", t);
  write_manifest(out, "betasweep", cfg, seed, {"betasweep.csv"});
  return 0;
}

// ---------------------------------------------------------------------------
// freqsweep: relative model error against the starting frequency

inline int cmd_freqsweep(const Config& cfg, const std::filesystem::path& out,
                         std::uint64_t seed) {
  std::filesystem::create_directories(out);
  if (cfg.has("run.bands") || cfg.has("run.method"))
    throw ConfigError(
        "freqsweep: bands derive from sweep.f_start; method is implied");
  const SlownessModel truth = model_from_config(cfg, "truth", seed);
  const SlownessModel init = model_from_config(cfg, "init", seed, &truth.grid);
  const Geometry geom = geometry_from_config(cfg);
  const SourceSpectrum sp = spectrum_from_config(cfg);
  const double noise = cfg.get_double("data.noise_std", 0.0);
  const std::vector<double> f_starts = cfg.get_list("sweep.f_start");
  const std::vector<double> offsets =
      cfg.get_list("sweep.band_offsets", {0.0, 0.5, 1.0});
  const RunConfig rc_base = run_from_config(cfg, false, false);
  cfg.ensure_fully_consumed();
  for (std::size_t i = 1; i < offsets.size(); ++i)
    if (!(offsets[i] > offsets[i - 1]))
      throw ConfigError("freqsweep: sweep.band_offsets must be ascending");

  std::set<double> all;
  for (double fs : f_starts)
    for (double o : offsets) all.insert(fs + o);
  const std::vector<double> freqs(all.begin(), all.end());
  ObservedData data = forward_model(truth, geom, freqs, sp);
  if (noise > 0.0) add_noise(data, noise, seed + 1);

  CsvTable t({"method", "f_start", "rel_model_error", "reason"});
  for (double fs : f_starts) {
    std::vector<double> band;
    for (double o : offsets) band.push_back(fs + o);
    for (Method method : {Method::fwi, Method::wri, Method::lrwi}) {
      RunConfig rc = rc_base;
      rc.method = method;
      rc.bands = {band};
      const CellResult cell = run_cell(rc, init, geom, sp, data, truth);
      t.add_row({method_name(method), CsvTable::cell(fs),
                 CsvTable::cell(cell.rel_err), cell.reason});
    }
  }
  write_csv(out / "freqsweep.csv", t);
  write_manifest(out, "freqsweep", cfg, seed, {"freqsweep.csv"});
  return 0;
}

}  // namespace lrwi::harness
