#pragma once

#include <Eigen/SVD>

#include "lrwi/inversion.hpp"

namespace lrwi {

struct Rank2Wavefield {
  Eigen::VectorXcd u1, u2;
};

// r: data residual, p: lifted PDE residual, s: rank-1 consistency residual.
struct LrwiResiduals {
  Eigen::VectorXcd r, p, s;
};

// Stacked least-squares matrix for the lifted wavefield pair (u1, u2):
//   [ sin(t) P                  cos(t) P                ]
//   [ sqrt(lambda) A1           sqrt(lambda) A2         ]   rows n_r + 2 n_g,
//   [ sqrt(gamma) diag(m2)     -sqrt(gamma) diag(m1)    ]   cols 2 n_g
// with A1 = sin(t) Delta + omega^2 diag(m1), A2 = cos(t) Delta + omega^2
// diag(m2).
inline SparseComplexMatrix augmented_matrix(
    const FreqBlock& blk, const SparseComplexMatrix& P,
    const Eigen::VectorXd& m1, const Eigen::VectorXd& m2, double theta,
    double lambda, double gamma) {
  const int ng = blk.laplacian.rows();
  const int nr = P.rows();
  if (m1.size() != ng || m2.size() != ng)
    throw ShapeError("augmented_matrix: component length mismatch");
  if (!(lambda > 0.0) || gamma < 0.0 || !std::isfinite(lambda) ||
      !std::isfinite(gamma))
    throw DomainError("augmented_matrix: need lambda > 0 and gamma >= 0");
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sl = std::sqrt(lambda), sg = std::sqrt(gamma);
  const double w2 = blk.omega * blk.omega;

  BlockBuilder b(nr + 2 * ng, 2 * ng);
  b.add_block(0, 0, P, cd(st, 0.0));
  b.add_block(0, ng, P, cd(ct, 0.0));
  b.add_block(nr, 0, blk.laplacian, cd(sl * st, 0.0));
  b.add_diagonal_block(nr, 0, (sl * w2 * m1).cast<cd>());
  b.add_block(nr, ng, blk.laplacian, cd(sl * ct, 0.0));
  b.add_diagonal_block(nr, ng, (sl * w2 * m2).cast<cd>());
  b.add_diagonal_block(nr + ng, 0, (sg * m2).cast<cd>());
  b.add_diagonal_block(nr + ng, ng, (-sg * m1).cast<cd>());
  return b.build();
}

// Right-hand side [d; sqrt(lambda) q; 0] matching augmented_matrix.
inline Eigen::VectorXcd augmented_rhs(const Eigen::VectorXcd& d,
                                      const Eigen::VectorXcd& q,
                                      double lambda) {
  Eigen::VectorXcd rhs =
      Eigen::VectorXcd::Zero(d.size() + 2 * q.size());
  rhs.head(d.size()) = d;
  rhs.segment(d.size(), q.size()) = std::sqrt(lambda) * q;
  return rhs;
}

inline LrwiResiduals lifted_residuals(const FreqBlock& blk,
                                      const SparseComplexMatrix& P,
                                      const Eigen::VectorXd& m1,
                                      const Eigen::VectorXd& m2, double theta,
                                      const Rank2Wavefield& w,
                                      const Eigen::VectorXcd& q,
                                      const Eigen::VectorXcd& d) {
  const double st = std::sin(theta), ct = std::cos(theta);
  const double w2 = blk.omega * blk.omega;
  const Eigen::VectorXcd combined = st * w.u1 + ct * w.u2;
  LrwiResiduals res;
  res.r = P.apply(combined) - d;
  res.p = blk.laplacian.apply(combined) +
          w2 * (m1.cast<cd>().cwiseProduct(w.u1) +
                m2.cast<cd>().cwiseProduct(w.u2)) -
          q;
  res.s = m1.cast<cd>().cwiseProduct(w.u2) -
          m2.cast<cd>().cwiseProduct(w.u1);
  return res;
}

inline ObjectiveTerms terms_from_residuals(const LrwiResiduals& res,
                                           double lambda, double gamma) {
  ObjectiveTerms t;
  t.data_term = 0.5 * res.r.squaredNorm();
  t.pde_term = 0.5 * lambda * res.p.squaredNorm();
  t.rank1_term = 0.5 * gamma * res.s.squaredNorm();
  t.total = t.data_term + t.pde_term + t.rank1_term;
  return t;
}

// Lifted rank-2 objective with the wavefield pair projected out. Each
// evaluation factors the Gram matrix of the augmented system once per
// frequency (a 2 n_g system, against n_g for the classical objective) and
// reuses it for every source.
class LrwiProblem {
 public:
  LrwiProblem(ModelingContext ctx, double lambda, double gamma)
      : ctx_(std::move(ctx)), lambda_(lambda), gamma_(gamma) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw DomainError("lrwi: lambda must be positive finite");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw DomainError("lrwi: gamma must be nonnegative finite");
  }

  const ModelingContext& context() const { return ctx_; }
  double lambda() const { return lambda_; }
  double gamma() const { return gamma_; }

  struct Eval {
    ObjectiveReport report;
    Eigen::VectorXd g1, g2;
    double g_theta = 0.0;
    double value() const { return report.terms.total; }
  };

  Eval evaluate(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                double theta, bool need_grad) const {
    ctx_.check_model(m1, "lrwi m1");
    ctx_.check_model(m2, "lrwi m2");
    const int ng = ctx_.n_grid();
    const double st = std::sin(theta), ct = std::cos(theta);
    Eval ev;
    if (need_grad) {
      ev.g1 = Eigen::VectorXd::Zero(ng);
      ev.g2 = Eigen::VectorXd::Zero(ng);
    }
    for (std::size_t jf = 0; jf < ctx_.blocks.size(); ++jf) {
      const FreqBlock& blk = ctx_.blocks[jf];
      const SparseComplexMatrix S =
          augmented_matrix(blk, ctx_.P, m1, m2, theta, lambda_, gamma_);
      const SparseComplexMatrix G = S.gram();
      const Factorization lu(G);
      const double w2 = blk.omega * blk.omega;
      for (int js = 0; js < ctx_.n_sources(); ++js) {
        const Rank2Wavefield w =
            project_wavefield(S, G, lu, blk.d[js], blk.q[js]);
        const LrwiResiduals res = lifted_residuals(
            blk, ctx_.P, m1, m2, theta, w, blk.q[js], blk.d[js]);
        const ObjectiveTerms t = terms_from_residuals(res, lambda_, gamma_);
        ev.report.add(js, static_cast<int>(jf), t.data_term, t.pde_term,
                      t.rank1_term);
        if (need_grad) {
          ev.g1 += lambda_ * w2 * (w.u1.conjugate().cwiseProduct(res.p)).real() +
                   gamma_ * (w.u2.conjugate().cwiseProduct(res.s)).real();
          ev.g2 += lambda_ * w2 * (w.u2.conjugate().cwiseProduct(res.p)).real() -
                   gamma_ * (w.u1.conjugate().cwiseProduct(res.s)).real();
          const double a1 = std::real(ctx_.P.apply(w.u1).dot(res.r)) +
                            lambda_ * std::real(
                                          blk.laplacian.apply(w.u1).dot(res.p));
          const double a2 = std::real(ctx_.P.apply(w.u2).dot(res.r)) +
                            lambda_ * std::real(
                                          blk.laplacian.apply(w.u2).dot(res.p));
          ev.g_theta += ct * a1 - st * a2;
        }
      }
    }
    return ev;
  }

  Eval evaluate(const Rank2Model& r, bool need_grad) const {
    return evaluate(r.m1, r.m2, r.theta, need_grad);
  }

  // Projected wavefield pair for one (frequency, source); exposed for tests.
  Rank2Wavefield solve_u(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                         double theta, int jf, int js) const {
    const FreqBlock& blk = ctx_.blocks.at(static_cast<std::size_t>(jf));
    const SparseComplexMatrix S =
        augmented_matrix(blk, ctx_.P, m1, m2, theta, lambda_, gamma_);
    const SparseComplexMatrix G = S.gram();
    const Factorization lu(G);
    return project_wavefield(S, G, lu, blk.d.at(static_cast<std::size_t>(js)),
                             blk.q.at(static_cast<std::size_t>(js)));
  }

 private:
  Rank2Wavefield project_wavefield(const SparseComplexMatrix& S,
                                   const SparseComplexMatrix& G,
                                   const Factorization& lu,
                                   const Eigen::VectorXcd& d,
                                   const Eigen::VectorXcd& q) const {
    const int ng = ctx_.n_grid();
    const Eigen::VectorXcd rhs = augmented_rhs(d, q, lambda_);
    const Eigen::VectorXcd b = S.apply_adjoint(rhs);
    const Eigen::VectorXcd u =
        detail::refined_solve(G, lu, b, kNormalEquationTol, "lrwi");
    Rank2Wavefield w;
    w.u1 = u.head(ng);
    w.u2 = u.tail(ng);
    return w;
  }

  ModelingContext ctx_;
  double lambda_;
  double gamma_;
};

struct RankStudy {
  int rows = 0;
  int cols = 0;
  int rank = 0;            // without the rank-1 coupling rows
  int nullity = 0;
  int rank_with_gamma = 0; // with them
};

// Dense SVD rank study of the stacked system, with and without the rank-1
// coupling block. Small instances only.
inline RankStudy rank_deficiency_check(const FreqBlock& blk,
                                       const SparseComplexMatrix& P,
                                       const Eigen::VectorXd& m1,
                                       const Eigen::VectorXd& m2,
                                       double theta, double lambda,
                                       double gamma) {
  const int ng = blk.laplacian.rows();
  const int nr = P.rows();
  if (2 * ng > 1200)
    throw DomainError("rank_deficiency_check: instance too large for a "
                      "dense SVD study");
  const SparseComplexMatrix S_full =
      augmented_matrix(blk, P, m1, m2, theta, lambda, gamma);
  const Eigen::MatrixXcd full(S_full.eigen());
  const Eigen::MatrixXcd top = full.topRows(nr + ng);

  const auto numerical_rank = [](const Eigen::MatrixXcd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double tol = std::max(M.rows(), M.cols()) *
                       std::numeric_limits<double>::epsilon() * sv[0];
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > tol) ++rank;
    return rank;
  };

  RankStudy st;
  st.rows = nr + ng;
  st.cols = 2 * ng;
  st.rank = numerical_rank(top);
  st.nullity = st.cols - st.rank;
  st.rank_with_gamma = numerical_rank(full);
  return st;
}

}  // namespace lrwi
