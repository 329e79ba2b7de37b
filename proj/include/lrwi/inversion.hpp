#pragma once

#include <optional>
#include <vector>

#include "lrwi/acquisition.hpp"
#include "lrwi/grid.hpp"
#include "lrwi/helmholtz.hpp"
#include "lrwi/sparse.hpp"

namespace lrwi {

// Everything an objective needs for one frequency: the Laplacian with
// radiating rows frozen at the context's reference model, plus per-source
// right-hand sides and observed gathers.
struct FreqBlock {
  double f_hz = 0.0;
  double omega = 0.0;
  SparseComplexMatrix laplacian;
  std::vector<Eigen::VectorXcd> q;  // per source
  std::vector<Eigen::VectorXcd> d;  // per source, receiver gathers
};

// A(m) = Delta + omega^2 diag(m) with Delta from the block. Affine in m by
// construction; this is the only way objectives assemble operators.
inline SparseComplexMatrix helmholtz_of(const FreqBlock& blk,
                                        const Eigen::VectorXd& m) {
  BlockBuilder b(blk.laplacian.rows(), blk.laplacian.cols());
  b.add_block(0, 0, blk.laplacian);
  b.add_diagonal_block(0, 0, (blk.omega * blk.omega * m).cast<cd>());
  return b.build();
}

struct ModelingContext {
  Grid2D grid;
  SparseComplexMatrix P;  // n_r x n_g
  std::vector<int> source_nodes;
  std::vector<FreqBlock> blocks;

  int n_sources() const { return static_cast<int>(source_nodes.size()); }
  int n_receivers() const { return P.rows(); }
  int n_grid() const { return grid.size(); }

  void check_model(const Eigen::VectorXd& m, const char* who) const {
    if (m.size() != grid.size())
      throw ShapeError(std::string(who) + ": model length mismatch");
    if (!m.allFinite())
      throw DomainError(std::string(who) + ": nonfinite model entries");
  }
};

// Index of the entry of freqs matching f, by relative tolerance.
inline int find_frequency(const std::vector<double>& freqs, double f) {
  for (std::size_t j = 0; j < freqs.size(); ++j)
    if (std::abs(freqs[j] - f) <= 1e-9 * std::max(1.0, std::abs(f)))
      return static_cast<int>(j);
  throw DomainError("frequency " + std::to_string(f) +
                    " Hz not present in the observed data");
}

// bc_ref fixes the radiating rows for every operator built from this
// context; objectives are then smooth in m with d(A)/dm_i = omega^2 e_i.
inline ModelingContext build_context(const SlownessModel& bc_ref,
                                     const Geometry& geometry,
                                     const std::vector<double>& band_freqs,
                                     const SourceSpectrum& spectrum,
                                     const ObservedData& data) {
  check_frequencies(band_freqs);
  ModelingContext ctx;
  ctx.grid = bc_ref.grid;
  const SnappedGeometry snap = snap_geometry(ctx.grid, geometry);
  if (static_cast<int>(snap.source_nodes.size()) != data.ns ||
      static_cast<int>(snap.receiver_nodes.size()) != data.nr)
    throw ShapeError("build_context: geometry does not match the data axes");
  ctx.P = projection_matrix(ctx.grid, snap.receiver_nodes);
  ctx.source_nodes = snap.source_nodes;

  for (double f : band_freqs) {
    const double ppw = points_per_wavelength(bc_ref, f);
    if (ppw < 6.0)
      std::cerr << "warning: " << ppw
                << " grid points per minimum wavelength at " << f << " Hz\n";
    FreqBlock blk;
    blk.f_hz = f;
    blk.omega = angular_frequency(f);
    blk.laplacian = laplacian_radiating(ctx.grid, blk.omega, bc_ref.values);
    const int jd = find_frequency(data.freqs, f);
    const cd w = spectrum.weight(f);
    for (int js = 0; js < data.ns; ++js) {
      blk.q.push_back(source_vector(ctx.grid, ctx.source_nodes[js], w));
      blk.d.push_back(data.gather(js, jd));
    }
    ctx.blocks.push_back(std::move(blk));
  }
  return ctx;
}

struct ObjectiveTerms {
  double total = 0.0;
  double data_term = 0.0;
  double pde_term = 0.0;
  double rank1_term = 0.0;
};

// Per-(source, frequency) contribution, for reporting.
struct TermRow {
  int source = 0;
  int freq = 0;
  double data_term = 0.0;
  double pde_term = 0.0;
  double rank1_term = 0.0;
};

struct ObjectiveReport {
  ObjectiveTerms terms;
  std::vector<TermRow> rows;

  void add(int js, int jf, double data, double pde, double rank1) {
    rows.push_back({js, jf, data, pde, rank1});
    terms.data_term += data;
    terms.pde_term += pde;
    terms.rank1_term += rank1;
    terms.total = terms.data_term + terms.pde_term + terms.rank1_term;
  }
};

struct ValueGrad {
  double value = 0.0;
  Eigen::VectorXd grad;
};

// Classical reduced-objective inversion: u solves A(m) u = q exactly and
// the misfit is 1/2 sum ||P u - d||^2; gradient by the adjoint-state rule.
class FwiProblem {
 public:
  explicit FwiProblem(ModelingContext ctx) : ctx_(std::move(ctx)) {}

  const ModelingContext& context() const { return ctx_; }

  double value(const Eigen::VectorXd& m) const {
    return eval(m, false).second.value;
  }

  ValueGrad value_grad(const Eigen::VectorXd& m) const {
    auto [rep, vg] = eval(m, true);
    return vg;
  }

  std::pair<ObjectiveReport, ValueGrad> eval(const Eigen::VectorXd& m,
                                             bool need_grad) const {
    ctx_.check_model(m, "fwi");
    ObjectiveReport report;
    ValueGrad vg;
    if (need_grad) vg.grad = Eigen::VectorXd::Zero(m.size());
    for (std::size_t jf = 0; jf < ctx_.blocks.size(); ++jf) {
      const FreqBlock& blk = ctx_.blocks[jf];
      const SparseComplexMatrix A = helmholtz_of(blk, m);
      const Factorization lu(A);
      const double w2 = blk.omega * blk.omega;
      for (int js = 0; js < ctx_.n_sources(); ++js) {
        const Eigen::VectorXcd u = lu.solve(blk.q[js]);
        const Eigen::VectorXcd r = ctx_.P.apply(u) - blk.d[js];
        report.add(js, static_cast<int>(jf), 0.5 * r.squaredNorm(), 0.0,
                   0.0);
        if (need_grad) {
          const Eigen::VectorXcd v =
              lu.solve_adjoint(ctx_.P.apply_adjoint(r));
          vg.grad -= w2 * (u.conjugate().cwiseProduct(v)).real();
        }
      }
    }
    vg.value = report.terms.total;
    return {report, vg};
  }

 private:
  ModelingContext ctx_;
};

namespace detail {

// Solve M x = b through the factorization, polishing with iterative
// refinement until the residual meets the optimality tolerance. The
// tolerance doubles as the near-singularity detector: LU happily produces
// garbage for numerically rank-deficient normal matrices, and the residual
// is what exposes it.
inline Eigen::VectorXcd refined_solve(const SparseComplexMatrix& M,
                                      const Factorization& lu,
                                      const Eigen::VectorXcd& b,
                                      double rel_tol, const char* who) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXcd::Zero(b.size());
  // Polish far past the acceptance threshold: with a healthy factorization
  // the residual reaches the vicinity of machine precision in a pass or two,
  // which keeps solutions comparable to dense oracles. rel_tol is only the
  // failure threshold.
  const double target =
      1e3 * std::numeric_limits<double>::epsilon() * bnorm;
  Eigen::VectorXcd x = lu.solve(b);
  Eigen::VectorXcd best = x;
  double best_resid = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 6; ++pass) {
    const Eigen::VectorXcd resid = b - M.apply(x);
    const double rn = resid.norm();
    if (rn < best_resid) {
      best_resid = rn;
      best = x;
    }
    if (rn <= target) return x;
    if (rn > 0.5 * prev) break;  // stagnated
    prev = rn;
    x += lu.solve(resid);
  }
  if (best_resid > rel_tol * bnorm)
    throw SingularityError(std::string(who) +
                           ": normal equations close to singular or badly "
                           "scaled (residual above " +
                           std::to_string(rel_tol) + " of rhs)");
  return best;
}

}  // namespace detail

inline constexpr double kNormalEquationTol = 1e-8;

// Penalty-form inversion: u* jointly fits data and PDE per (source, freq),
//   u* = argmin 1/2 ||P u - d||^2 + lambda/2 ||A(m) u - q||^2,
// solved through the normal equations; the model gradient needs only the
// PDE residual at u*.
class WriProblem {
 public:
  WriProblem(ModelingContext ctx, double lambda)
      : ctx_(std::move(ctx)), lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw DomainError("wri: lambda must be positive finite");
  }

  const ModelingContext& context() const { return ctx_; }
  double lambda() const { return lambda_; }

  // Least-squares wavefield for one (frequency, source); exposed for tests.
  Eigen::VectorXcd solve_u(const Eigen::VectorXd& m, int jf, int js) const {
    ctx_.check_model(m, "wri");
    const FreqBlock& blk = ctx_.blocks.at(static_cast<std::size_t>(jf));
    const SparseComplexMatrix A = helmholtz_of(blk, m);
    const SparseComplexMatrix M = normal_matrix(A);
    const Factorization lu(M);
    return solve_one(A, M, lu, blk, js);
  }

  double value(const Eigen::VectorXd& m) const {
    return eval(m, false).second.value;
  }

  ValueGrad value_grad(const Eigen::VectorXd& m) const {
    return eval(m, true).second;
  }

  std::pair<ObjectiveReport, ValueGrad> eval(const Eigen::VectorXd& m,
                                             bool need_grad) const {
    ctx_.check_model(m, "wri");
    ObjectiveReport report;
    ValueGrad vg;
    if (need_grad) vg.grad = Eigen::VectorXd::Zero(m.size());
    for (std::size_t jf = 0; jf < ctx_.blocks.size(); ++jf) {
      const FreqBlock& blk = ctx_.blocks[jf];
      const SparseComplexMatrix A = helmholtz_of(blk, m);
      const SparseComplexMatrix M = normal_matrix(A);
      const Factorization lu(M);
      const double w2 = blk.omega * blk.omega;
      for (int js = 0; js < ctx_.n_sources(); ++js) {
        const Eigen::VectorXcd u = solve_one(A, M, lu, blk, js);
        const Eigen::VectorXcd r = ctx_.P.apply(u) - blk.d[js];
        const Eigen::VectorXcd p = A.apply(u) - blk.q[js];
        report.add(js, static_cast<int>(jf), 0.5 * r.squaredNorm(),
                   0.5 * lambda_ * p.squaredNorm(), 0.0);
        if (need_grad)
          vg.grad +=
              lambda_ * w2 * (u.conjugate().cwiseProduct(p)).real();
      }
    }
    vg.value = report.terms.total;
    return {report, vg};
  }

 private:
  SparseComplexMatrix normal_matrix(const SparseComplexMatrix& A) const {
    // P^H P + lambda A^H A
    Eigen::SparseMatrix<cd> M =
        (ctx_.P.eigen().adjoint() * ctx_.P.eigen() +
         cd(lambda_, 0.0) * (A.eigen().adjoint() * A.eigen()))
            .pruned();
    return SparseComplexMatrix(std::move(M));
  }

  Eigen::VectorXcd solve_one(const SparseComplexMatrix& A,
                             const SparseComplexMatrix& M,
                             const Factorization& lu, const FreqBlock& blk,
                             int js) const {
    const Eigen::VectorXcd b = ctx_.P.apply_adjoint(blk.d[js]) +
                               cd(lambda_, 0.0) * A.apply_adjoint(blk.q[js]);
    return detail::refined_solve(M, lu, b, kNormalEquationTol, "wri");
  }

  ModelingContext ctx_;
  double lambda_;
};

}  // namespace lrwi
