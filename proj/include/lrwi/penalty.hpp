#pragma once

#include <iostream>

#include "lrwi/helmholtz.hpp"
#include "lrwi/inversion.hpp"

namespace lrwi {

struct PenaltyConfig {
  double beta1 = 1e-8;
  double beta2 = 1e-12;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lambda = 0.0;  // beta1 * mu1
  double gamma = 0.0;   // beta2 * mu2
  double growth1 = 1.0; // geometric growth of lambda across bands
  double growth2 = 1.0;
};

// Largest eigenvalue of A^{-H} P^T P A^{-1} through an existing
// factorization of A; the scale of the data term against the PDE term.
inline double mu1_from_factorization(const Factorization& lu,
                                     const SparseComplexMatrix& P,
                                     const PowerOptions& opts) {
  const auto op = [&](const Eigen::VectorXcd& x) {
    return lu.solve_adjoint(P.apply_adjoint(P.apply(lu.solve(x))));
  };
  const PowerResult r = power_iteration(op, lu.dim(), opts);
  if (!r.converged)
    std::cerr << "warning: mu1 power iteration stopped at relative residual "
                 "above tolerance after "
              << r.iterations << " iterations\n";
  return r.value;
}

inline double estimate_mu1(const SlownessModel& m0, double f_hz,
                           const SparseComplexMatrix& P, double tol = 1e-4) {
  const HelmholtzOperator op = assemble(m0, f_hz);
  const Factorization lu(op.matrix);
  PowerOptions opts;
  opts.tol = tol;
  return mu1_from_factorization(lu, P, opts);
}

// max over component pairs (i,j) of ||diag(T_ij)||_2 / ||m_i .* m_j||_2
// where T_ij = lambda A_i^H A_j + a_i a_j P^T P. Pairs whose denominator
// vanishes (a component identically zero) are skipped.
inline double mu2_from_parts(const SparseComplexMatrix& A1,
                             const SparseComplexMatrix& A2,
                             const SparseComplexMatrix& P, double a1,
                             double a2, double lambda,
                             const Eigen::VectorXd& m1,
                             const Eigen::VectorXd& m2) {
  const Eigen::VectorXcd pp = gram_diagonal(P, P);
  const SparseComplexMatrix* ops[2] = {&A1, &A2};
  const double alpha[2] = {a1, a2};
  const Eigen::VectorXd* comps[2] = {&m1, &m2};

  double best = 0.0;
  bool any = false;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double denom =
          comps[i]->cwiseProduct(*comps[j]).norm();
      if (denom == 0.0) continue;
      const Eigen::VectorXcd diag =
          lambda * gram_diagonal(*ops[i], *ops[j]) +
          cd(alpha[i] * alpha[j], 0.0) * pp;
      best = std::max(best, diag.norm() / denom);
      any = true;
    }
  if (!any)
    throw DomainError("mu2: both model components are identically zero");
  return best;
}

inline double estimate_mu2(const FreqBlock& blk, const SparseComplexMatrix& P,
                           const Eigen::VectorXd& m1,
                           const Eigen::VectorXd& m2, double theta,
                           double lambda) {
  const double st = std::sin(theta), ct = std::cos(theta);
  const double w2 = blk.omega * blk.omega;
  const int ng = blk.laplacian.rows();

  BlockBuilder b1(ng, ng);
  b1.add_block(0, 0, blk.laplacian, cd(st, 0.0));
  b1.add_diagonal_block(0, 0, (w2 * m1).cast<cd>());
  BlockBuilder b2(ng, ng);
  b2.add_block(0, 0, blk.laplacian, cd(ct, 0.0));
  b2.add_diagonal_block(0, 0, (w2 * m2).cast<cd>());

  return mu2_from_parts(b1.build(), b2.build(), P, st, ct, lambda, m1, m2);
}

inline PenaltyConfig make_penalties(double beta1, double beta2, double mu1,
                                    double mu2, double growth1 = 1.0,
                                    double growth2 = 1.0) {
  if (!(beta1 > 0.0) || !(beta2 > 0.0) || !std::isfinite(beta1) ||
      !std::isfinite(beta2))
    throw DomainError("make_penalties: beta1 and beta2 must be positive");
  if (!(mu1 > 0.0) || !(mu2 > 0.0))
    throw DomainError("make_penalties: mu1 and mu2 must be positive");
  if (!(growth1 > 0.0) || !(growth2 > 0.0))
    throw DomainError("make_penalties: growth factors must be positive");
  if (beta2 <= 1e-15)
    std::cerr << "warning: beta2 = " << beta2
              << " makes the augmented system close to singular or badly "
                 "scaled\n";
  PenaltyConfig cfg;
  cfg.beta1 = beta1;
  cfg.beta2 = beta2;
  cfg.mu1 = mu1;
  cfg.mu2 = mu2;
  cfg.lambda = beta1 * mu1;
  cfg.gamma = beta2 * mu2;
  cfg.growth1 = growth1;
  cfg.growth2 = growth2;
  return cfg;
}

// Penalties for band b (0-based): geometric growth, constant within a band.
inline PenaltyConfig schedule_step(const PenaltyConfig& cfg, int band) {
  if (band < 0) throw DomainError("schedule_step: negative band index");
  PenaltyConfig out = cfg;
  out.lambda = cfg.lambda * std::pow(cfg.growth1, band);
  out.gamma = cfg.gamma * std::pow(cfg.growth2, band);
  return out;
}

}  // namespace lrwi
