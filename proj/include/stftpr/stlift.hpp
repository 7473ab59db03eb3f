#pragma once

// Trace minimization over the PSD cone subject to the lifted STFT magnitude
// constraints
//
//     minimize trace(X)  s.t.  c_{m,r}^* X c_{m,r} = Z[m, r],  X >= 0,
//
// with c_{m,r} = conj(W_r) f_m, solved by ADMM. Hermitian matrices are
// handled in an isometric real parametrization (N diagonal reals followed by
// sqrt(2) Re / sqrt(2) Im of the strict upper triangle, row-major), so the
// affine step is an ordinary real least-squares projection.

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stftpr/linalg.hpp"
#include "stftpr/signal_core.hpp"

namespace stftpr {

struct MeasurementRow {
  int section;  // r
  int bin;      // m in 1..M
};

class AffineMeasurementOperator {
 public:
  explicit AffineMeasurementOperator(const StftParams& p);

  const StftParams& params() const { return params_; }
  int rows() const { return static_cast<int>(rows_.size()); }
  // Real dimension of the Hermitian parametrization, N^2.
  int dim() const { return static_cast<int>(matrix_.cols()); }
  // Row i = r * M + (m - 1), matching the column-major layout of z.
  const MeasurementRow& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  const Eigen::VectorXcd& sensing_vector(int i) const { return sensing_[static_cast<std::size_t>(i)]; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  int rank() const { return static_cast<int>(singular_values_.size()); }

  Eigen::VectorXd to_params(const HermitianMatrix& x) const;
  HermitianMatrix from_params(const Eigen::VectorXd& theta) const;

  Eigen::VectorXd apply(const HermitianMatrix& x) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& theta) const { return matrix_ * theta; }
  HermitianMatrix adjoint(const Eigen::VectorXd& y) const;

  // Minimum-norm theta with A theta = b (least squares if inconsistent).
  Eigen::VectorXd least_norm_solution(const Eigen::VectorXd& b) const;
  // Projection of theta onto {A theta = b}; `particular` = least_norm_solution(b).
  Eigen::VectorXd project_affine(const Eigen::VectorXd& theta, const Eigen::VectorXd& particular) const;
  // (I + A^T A)^{-1} rhs
  Eigen::VectorXd solve_regularized(const Eigen::VectorXd& rhs) const;

  static Eigen::VectorXd flatten(const MagnitudeMeasurements& zm) {
    return zm.z().reshaped();
  }

 private:
  StftParams params_;
  std::vector<MeasurementRow> rows_;
  std::vector<Eigen::VectorXcd> sensing_;
  Eigen::MatrixXd matrix_;
  // Thin SVD of the operator restricted to numerically nonzero singular values.
  Eigen::MatrixXd left_;
  Eigen::VectorXd singular_values_;
  Eigen::MatrixXd right_;
};

struct SolverOptions {
  double rho = 1.0;
  int max_iters = 10000;
  double eps_primal = 1e-7;
  double eps_dual = 1e-7;
  // Defaults to mean(Z) / N when unset.
  std::optional<double> trace_weight;
  bool record_history = false;
  // Residual balancing: every `adapt_every` iterations (0 disables), up to
  // iteration `adapt_until`, rho is doubled or halved when one relative
  // residual exceeds the other tenfold. Fixed rho makes the combined residual
  // monotone.
  int adapt_every = 25;
  int adapt_until = 1 << 30;
  // Over-relaxation factor in (0, 2) for the noiseless solver; 1 is plain ADMM.
  double relaxation = 1.5;
  // Anderson acceleration memory for the noiseless solver; 0 disables it.
  int anderson_memory = 0;
};

struct SolveReport {
  int iterations = 0;
  double primal_residual = 0.0;  // ||X - Y||_F / max(||X||_F, ||Y||_F)
  double dual_residual = 0.0;    // ||Y_k - Y_{k-1}||_F / ||Y_k||_F
  double affine_residual = 0.0;  // measurement misfit of the returned matrix, relative to ||Z||
  double objective_trace = 0.0;
  double top_eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
  bool converged = false;
  bool stalled = false;  // residuals plateaued without meeting tolerance
  // sqrt(||X - Y||^2 + ||Y_k - Y_{k-1}||^2) per iteration (absolute), when requested.
  std::vector<double> combined_residuals;

  double eigenvalue_gap() const {
    return top_eigenvalue > 0.0 ? second_eigenvalue / top_eigenvalue : 1.0;
  }
};

struct SolveResult {
  HermitianMatrix x;
  SolveReport report;
};

struct RecoveryResult {
  Signal x;
  SolveReport report;
};

AffineMeasurementOperator build_affine_operator(const StftParams& p);

double default_trace_weight(const MagnitudeMeasurements& zm, const StftParams& p);

SolveResult stlift_solve(const MagnitudeMeasurements& zm, const AffineMeasurementOperator& op,
                         const SolverOptions& opts = {});
SolveResult stlift_solve(const MagnitudeMeasurements& zm, const StftParams& p,
                         const SolverOptions& opts = {});

// Per-section ball constraints ||Z[:, r] - A_r(X)||_2 <= eta_r.
SolveResult stlift_solve_noisy(const MagnitudeMeasurements& zm, const AffineMeasurementOperator& op,
                               const std::vector<double>& eta, const SolverOptions& opts = {});
SolveResult stlift_solve_noisy(const MagnitudeMeasurements& zm, const StftParams& p, double eta,
                               const SolverOptions& opts = {});

RecoveryResult recover_signal(const MagnitudeMeasurements& zm, const AffineMeasurementOperator& op,
                              const SolverOptions& opts = {});
RecoveryResult recover_signal(const MagnitudeMeasurements& zm, const StftParams& p,
                              const SolverOptions& opts = {});

}  // namespace stftpr
