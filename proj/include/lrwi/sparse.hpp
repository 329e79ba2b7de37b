#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <complex>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "lrwi/errors.hpp"
#include "lrwi/rng.hpp"

namespace lrwi {

using cd = std::complex<double>;
using TripletC = Eigen::Triplet<cd>;

// Running log of direct-factorization dimensions. The cost structure of the
// solvers (which system sizes get factored, and how often) is part of what
// the tests pin down, so factorize() records every call here.
class FactorizationStats {
 public:
  static void record(int dim) {
    std::lock_guard<std::mutex> lock(mutex_());
    dims_().push_back(dim);
  }
  static std::vector<int> dims() {
    std::lock_guard<std::mutex> lock(mutex_());
    return dims_();
  }
  static void reset() {
    std::lock_guard<std::mutex> lock(mutex_());
    dims_().clear();
  }

 private:
  static std::mutex& mutex_() {
    static std::mutex m;
    return m;
  }
  static std::vector<int>& dims_() {
    static std::vector<int> d;
    return d;
  }
};

// Sparse complex matrix in compressed column storage. Thin wrapper over
// Eigen's type; the wrapper pins down construction validation and the small
// operation set the rest of the library relies on.
class SparseComplexMatrix {
 public:
  SparseComplexMatrix() = default;
  explicit SparseComplexMatrix(Eigen::SparseMatrix<cd> m) : m_(std::move(m)) {
    m_.makeCompressed();
  }

  static SparseComplexMatrix from_triplets(int rows, int cols,
                                           const std::vector<TripletC>& ts) {
    if (rows <= 0 || cols <= 0)
      throw ShapeError("SparseComplexMatrix: nonpositive dimensions");
    for (const auto& t : ts) {
      if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= cols)
        throw ShapeError("SparseComplexMatrix: triplet index out of range");
      if (!std::isfinite(t.value().real()) || !std::isfinite(t.value().imag()))
        throw DomainError("SparseComplexMatrix: nonfinite triplet value");
    }
    Eigen::SparseMatrix<cd> m(rows, cols);
    m.setFromTriplets(ts.begin(), ts.end());  // duplicates are summed
    m.makeCompressed();
    return SparseComplexMatrix(std::move(m));
  }

  int rows() const { return static_cast<int>(m_.rows()); }
  int cols() const { return static_cast<int>(m_.cols()); }
  long nnz() const { return static_cast<long>(m_.nonZeros()); }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const {
    if (x.size() != m_.cols())
      throw ShapeError("SparseComplexMatrix::apply: length mismatch");
    return m_ * x;
  }

  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& x) const {
    if (x.size() != m_.rows())
      throw ShapeError("SparseComplexMatrix::apply_adjoint: length mismatch");
    return m_.adjoint() * x;
  }

  SparseComplexMatrix adjoint() const {
    return SparseComplexMatrix(Eigen::SparseMatrix<cd>(m_.adjoint()));
  }

  SparseComplexMatrix scaled(cd c) const {
    Eigen::SparseMatrix<cd> m = m_;
    m *= c;
    return SparseComplexMatrix(std::move(m));
  }

  // Conjugate-transpose Gram product, M^H M.
  SparseComplexMatrix gram() const {
    Eigen::SparseMatrix<cd> g = (m_.adjoint() * m_).pruned();
    return SparseComplexMatrix(std::move(g));
  }

  double frobenius_norm() const { return m_.norm(); }

  const Eigen::SparseMatrix<cd>& eigen() const { return m_; }

 private:
  Eigen::SparseMatrix<cd> m_;
};

inline SparseComplexMatrix operator+(const SparseComplexMatrix& a,
                                     const SparseComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("SparseComplexMatrix: sum shape mismatch");
  return SparseComplexMatrix(
      Eigen::SparseMatrix<cd>((a.eigen() + b.eigen()).pruned()));
}

// diag(A^H B) as column-wise conjugated dot products; never forms A^H B.
inline Eigen::VectorXcd gram_diagonal(const SparseComplexMatrix& a,
                                      const SparseComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("gram_diagonal: shape mismatch");
  Eigen::VectorXcd d = Eigen::VectorXcd::Zero(a.cols());
  for (int k = 0; k < a.cols(); ++k) {
    Eigen::SparseMatrix<cd>::InnerIterator ia(a.eigen(), k);
    Eigen::SparseMatrix<cd>::InnerIterator ib(b.eigen(), k);
    cd acc(0.0, 0.0);
    while (ia && ib) {
      if (ia.row() < ib.row())
        ++ia;
      else if (ib.row() < ia.row())
        ++ib;
      else {
        acc += std::conj(ia.value()) * ib.value();
        ++ia;
        ++ib;
      }
    }
    d[k] = acc;
  }
  return d;
}

// Accumulates scaled sub-blocks into one sparse matrix; used to assemble
// stacked block systems without densifying anything.
class BlockBuilder {
 public:
  BlockBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

  void add_block(int row_offset, int col_offset, const SparseComplexMatrix& m,
                 cd scale = cd(1.0, 0.0)) {
    if (row_offset < 0 || col_offset < 0 || row_offset + m.rows() > rows_ ||
        col_offset + m.cols() > cols_)
      throw ShapeError("BlockBuilder: block out of range");
    const auto& e = m.eigen();
    for (int k = 0; k < e.outerSize(); ++k)
      for (Eigen::SparseMatrix<cd>::InnerIterator it(e, k); it; ++it)
        ts_.emplace_back(row_offset + static_cast<int>(it.row()),
                         col_offset + static_cast<int>(it.col()),
                         scale * it.value());
  }

  void add_diagonal_block(int row_offset, int col_offset,
                          const Eigen::VectorXcd& d, cd scale = cd(1.0, 0.0)) {
    if (row_offset < 0 || col_offset < 0 ||
        row_offset + d.size() > rows_ || col_offset + d.size() > cols_)
      throw ShapeError("BlockBuilder: diagonal block out of range");
    for (Eigen::Index i = 0; i < d.size(); ++i)
      ts_.emplace_back(row_offset + static_cast<int>(i),
                       col_offset + static_cast<int>(i), scale * d[i]);
  }

  SparseComplexMatrix build() const {
    return SparseComplexMatrix::from_triplets(rows_, cols_, ts_);
  }

 private:
  int rows_, cols_;
  std::vector<TripletC> ts_;
};

// Sparse LU factorization with pivoting. Construction throws
// SingularityError on structurally or numerically singular input; callers
// that can encounter near-singular systems additionally verify residuals at
// the point of use (see the augmented least-squares solver).
class Factorization {
 public:
  explicit Factorization(const SparseComplexMatrix& m)
      : dim_(m.rows()) {
    if (m.rows() != m.cols())
      throw ShapeError("factorize: matrix must be square");
    lu_.compute(m.eigen());
    if (lu_.info() != Eigen::Success)
      throw SingularityError(
          "factorize: LU failed (matrix is singular to working precision), "
          "dim=" + std::to_string(dim_));
    const double logdet = lu_.logAbsDeterminant().real();
    if (!std::isfinite(logdet))
      throw SingularityError(
          "factorize: zero pivot encountered, dim=" + std::to_string(dim_));
    FactorizationStats::record(dim_);
  }

  int dim() const { return dim_; }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const {
    if (b.size() != dim_) throw ShapeError("Factorization::solve: bad length");
    return lu_.solve(b);
  }

  // Solves M^H x = b with the same factors.
  Eigen::VectorXcd solve_adjoint(const Eigen::VectorXcd& b) const {
    if (b.size() != dim_)
      throw ShapeError("Factorization::solve_adjoint: bad length");
    return lu_.adjoint().solve(b);
  }

 private:
  int dim_;
  // mutable: Eigen exposes adjoint() on non-const objects only, but solving
  // against M^H does not change the factors
  mutable Eigen::SparseLU<Eigen::SparseMatrix<cd>> lu_;
};

inline Factorization factorize(const SparseComplexMatrix& m) {
  return Factorization(m);
}

struct PowerOptions {
  int max_iter = 300;
  double tol = 1e-6;  // relative residual ||Ax - lambda x|| <= tol*lambda
  std::uint64_t seed = 0x5eed0001u;
};

struct PowerResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Power iteration for the largest eigenvalue of a Hermitian positive
// semidefinite operator given as a callback.
inline PowerResult power_iteration(
    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
    int n, const PowerOptions& opts = {}) {
  if (n <= 0) throw ShapeError("power_iteration: nonpositive dimension");
  GaussianRng rng(opts.seed);
  Eigen::VectorXcd x(n);
  for (int i = 0; i < n; ++i) x[i] = cd(rng(), rng());
  double nx = x.norm();
  if (nx == 0.0) x[0] = cd(1.0, 0.0), nx = 1.0;
  x /= nx;

  PowerResult res;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Eigen::VectorXcd y = apply(x);
    if (y.size() != n)
      throw ShapeError("power_iteration: callback changed the dimension");
    const double lambda = std::real(x.dot(y));  // x.dot(y) = x^H y
    res.value = std::max(lambda, 0.0);
    res.iterations = it;
    const double resid = (y - lambda * x).norm();
    const double ny = y.norm();
    if (ny == 0.0) {  // operator annihilates the iterate: eigenvalue 0
      res.value = 0.0;
      res.converged = true;
      return res;
    }
    if (resid <= opts.tol * std::max(std::abs(lambda), 1e-300)) {
      res.converged = true;
      return res;
    }
    x = y / ny;
  }
  return res;
}

// 2-norm condition number estimate: power iteration on M^H M for sigma_max^2
// and on (M M^H)^{-1} (through the factorization) for 1/sigma_min^2.
inline double condition_estimate(const SparseComplexMatrix& m,
                                 const PowerOptions& opts = {}) {
  if (m.rows() != m.cols())
    throw ShapeError("condition_estimate: matrix must be square");
  const int n = m.rows();
  Factorization f(m);

  PowerOptions fwd = opts;
  PowerResult top = power_iteration(
      [&m](const Eigen::VectorXcd& x) { return m.apply_adjoint(m.apply(x)); },
      n, fwd);

  PowerOptions inv = opts;
  inv.seed = opts.seed + 1;
  PowerResult bottom = power_iteration(
      [&f](const Eigen::VectorXcd& x) { return f.solve_adjoint(f.solve(x)); },
      n, inv);

  if (top.value <= 0.0) return 0.0;
  if (bottom.value <= 0.0)
    throw SingularityError("condition_estimate: inverse power returned 0");
  return std::sqrt(top.value) * std::sqrt(bottom.value);
}

}  // namespace lrwi
