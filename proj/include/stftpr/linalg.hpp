#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stftpr/signal_core.hpp"

namespace stftpr {

class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(int n) : entries_(Eigen::MatrixXcd::Zero(n, n)) {}

  // Accepts entries whose asymmetry is at most `tol * max(1, max|a_ij|)`,
  // then averages with the conjugate transpose and zeroes the diagonal
  // imaginary parts. Throws kInvalidArgument otherwise.
  static HermitianMatrix from_entries(const Eigen::MatrixXcd& a, double tol = 1e-12);
  // Unchecked symmetrization for solver-internal iterates.
  static HermitianMatrix symmetrized(const Eigen::MatrixXcd& a);
  static HermitianMatrix outer(const Signal& x);
  static HermitianMatrix identity(int n);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  cplx operator()(int i, int j) const { return entries_(i, j); }
  double trace() const { return entries_.diagonal().real().sum(); }
  double frobenius_norm() const { return entries_.norm(); }

 private:
  Eigen::MatrixXcd entries_;
};

struct EigenDecomposition {
  Eigen::VectorXd values;    // descending
  Eigen::MatrixXcd vectors;  // orthonormal columns matching `values`
  int sweeps = 0;
};

// Cyclic complex Jacobi. Converged once the off-diagonal Frobenius norm is
// at most 1e-12 * ||A||_F; throws kConvergence after 100 sweeps.
EigenDecomposition hermitian_eig(const HermitianMatrix& a);

// Same, started from a unitary basis that approximately diagonalizes `a`
// (e.g. the eigenvectors of a nearby matrix). Typically needs 1-3 sweeps.
EigenDecomposition hermitian_eig(const HermitianMatrix& a, const Eigen::MatrixXcd& warm_basis);

HermitianMatrix psd_project(const HermitianMatrix& a);
HermitianMatrix psd_project(const EigenDecomposition& eig);

struct RankOneApproximation {
  Signal x;
  bool degenerate = false;  // top eigenvalue <= 0, x is zero
  double top_eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
};

// sqrt(max(lambda_1, 0)) v_1 with the first largest-modulus entry made real
// and positive.
RankOneApproximation best_rank_one(const HermitianMatrix& a);
RankOneApproximation best_rank_one(const EigenDecomposition& eig);

// Band of a Hermitian matrix stored as B+1 diagonals: diagonal(d)[n] = X[n][n+d].
class BandSamples {
 public:
  BandSamples(int n, int bandwidth);

  static BandSamples from_matrix(const HermitianMatrix& x, int bandwidth);

  int dim() const { return n_; }
  int bandwidth() const { return bandwidth_; }

  // X[row][col] for |row - col| <= B. Setting (row, col) also fixes (col, row).
  cplx at(int row, int col) const;
  void set(int row, int col, cplx value);

  const std::vector<Eigen::VectorXcd>& diagonals() const { return diagonals_; }

 private:
  int n_;
  int bandwidth_;
  std::vector<Eigen::VectorXcd> diagonals_;
};

// Unique PSD (rank-one) completion of a band sampled from x x^* with x
// non-vanishing. Entries outside the band are chained through the preceding
// index and cross-checked against the path through the following one.
HermitianMatrix rank_one_band_completion(const BandSamples& band);

// Roots of sum_k coeffs[k] z^k (ascending order, degree <= 16) by
// Aberth-Ehrlich iteration.
std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs);

}  // namespace stftpr
