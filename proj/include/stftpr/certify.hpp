#pragma once

// Uniqueness certificates for the lifted program, and the classic ambiguity
// constructions that show where uniqueness breaks down.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stftpr/linalg.hpp"
#include "stftpr/signal_core.hpp"

namespace stftpr {

struct CertificateChecks {
  Eigen::VectorXd eigenvalues;  // descending
  double kernel_residual = 0.0; // ||D s0|| / (||D||_F ||s0||)
  int numerical_rank = 0;       // eigenvalues above 1e-8 * lambda_1
  double min_eigenvalue_ratio = 0.0;  // lambda_min / lambda_1
  bool kernel_ok = false;
  bool rank_ok = false;
  bool psd_ok = false;

  bool passed() const { return kernel_ok && rank_ok && psd_ok; }
};

// Kernel, rank and PSD tests against a section vector of length L + 1.
CertificateChecks check_certificate(const HermitianMatrix& d, const Signal& s0, int shift);

struct DualCertificate {
  HermitianMatrix d;        // (L+1) x (L+1)
  Eigen::MatrixXcd lmat;    // ceil(L/2) x (floor(L/2)+1), Toeplitz, lmat s1 + s2 = 0
  Eigen::MatrixXcd lambda;  // (floor(L/2)+1)^2, PSD, rank floor(L/2), lambda s1 = 0
  CertificateChecks checks;
};

// Block form [[Lmat^* Lmat + Lambda, Lmat^*], [Lmat, I]] with
// s1 = s0[0..floor(L/2)], s2 = the remaining ceil(L/2) entries.
// Throws kPrecondition when s0[0] == 0, kCertificateInvalid if a check fails.
DualCertificate build_dual_certificate(const Signal& s0, int shift);

// Non-unit window: the certificate for s0 o weights, conjugated by
// diag(weights), so that D s0 = 0 again.
DualCertificate build_dual_certificate(const Signal& s0, int shift, const Eigen::VectorXcd& weights);

struct SuperresVector {
  Eigen::VectorXcd l;
  double residual_unit = 0.0;        // condition (i)
  double residual_annihilate = 0.0;  // condition (ii)
  double residual_spectrum = 0.0;    // condition (iii)
  double symmetry_residual = 0.0;    // max |l[n] - conj(l[N-n])| / ||l|| before symmetrizing
  double smallest_singular_ratio = 0.0;
  int equations = 0;
};

// Minimum-norm l with
//   l[0] = 1, l[n] = l[N-n] = 0 for 1 <= n <= ceil(L/2) - 1,
//   sum_{n<=m} x0[n] l[m-n] = sum_{n<=m} conj(x0[n]) l[N-m+n] = 0 for floor(L/2)+1 <= m <= L,
//   DFT(l)[m mod N] = 0 for M+1 <= m <= N.
// Throws kPrecondition unless M >= 4 ceil(L/2) and x0[0] != 0,
// kDegenerateInstance when the system is numerically singular.
SuperresVector build_superres_vector(const Signal& x0, const StftParams& p, int rows);

// Signals with the same aperiodic autocorrelation as v, obtained by
// reflecting subsets of the roots of sum_k v[k] z^k across the unit circle.
// Phase-canonical and deduplicated. n <= 8, simple roots only.
std::vector<Signal> enumerate_magnitude_equivalent(const Signal& v);

// Aperiodic autocorrelation r[k] = sum_n v[n + k] conj(v[n]), k = 0..n-1.
Eigen::VectorXcd aperiodic_autocorrelation(const Signal& v);

// First entry of largest modulus made real and positive.
Signal canonical_phase(const Signal& x);

enum class CounterexampleKind { kNonoverlapPhase, kSparseShift, kSparseSign };

const char* to_string(CounterexampleKind kind);
CounterexampleKind counterexample_kind_from_string(const std::string& name);

struct Counterexample {
  Signal x1;
  Signal x2;
  StftParams params;
};

Counterexample make_counterexample(CounterexampleKind kind);

// min over circular shifts and conjugate flips (x[n] -> conj(x[-n mod N]))
// of dist_mod_phase(x1, T x2).
double dist_trivial_ambiguities(const Signal& x1, const Signal& x2);

}  // namespace stftpr
