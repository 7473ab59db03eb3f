#include "stftpr/certify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "stftpr/error.hpp"

namespace stftpr {

namespace {

template <typename... Ts>
std::string describe(const Ts&... parts) {
  std::ostringstream os;
  os.precision(3);
  (os << ... << parts);
  return os.str();
}

}  // namespace

CertificateChecks check_certificate(const HermitianMatrix& d, const Signal& s0, int shift) {
  if (d.dim() != s0.size()) throw Error(Errc::kDimension, "certificate and section sizes differ");
  CertificateChecks c;
  const EigenDecomposition eig = hermitian_eig(d);
  c.eigenvalues = eig.values;
  const double top = eig.values.size() > 0 ? eig.values[0] : 0.0;
  const double scale = d.frobenius_norm() * s0.norm();
  c.kernel_residual = scale > 0.0 ? (d.entries() * s0.values()).norm() / scale : 0.0;
  c.kernel_ok = c.kernel_residual <= 1e-8;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] > 1e-8 * top) ++c.numerical_rank;
  }
  c.rank_ok = top > 0.0 && c.numerical_rank == shift;
  c.min_eigenvalue_ratio = top > 0.0 ? eig.values[eig.values.size() - 1] / top : 0.0;
  c.psd_ok = top > 0.0 ? c.min_eigenvalue_ratio >= -1e-9 : eig.values.size() > 0 && eig.values.minCoeff() >= 0.0;
  return c;
}

DualCertificate build_dual_certificate(const Signal& s0, int shift) {
  const int l = shift;
  if (l < 1) throw Error(Errc::kInvalidArgument, "L must be positive");
  if (s0.size() != l + 1) throw Error(Errc::kDimension, "section vector must have L + 1 entries");
  if (s0[0] == cplx{}) throw Error(Errc::kPrecondition, "s1[0] must be non-zero");

  const int k1 = l / 2 + 1;  // length of s1
  const int k2 = l - l / 2;  // length of s2, ceil(L/2)
  const Eigen::VectorXcd s1 = s0.values().head(k1);
  const Eigen::VectorXcd s2 = s0.values().tail(k2);

  // Lmat[i][j] = t[k1 + i - j]; t[k] = 0 for k < ceil(L/2) and free entries.
  // Row i is the first to involve t[k1 + i] (through s1[0]).
  Eigen::VectorXcd t = Eigen::VectorXcd::Zero(l + 1);
  for (int i = 0; i < k2; ++i) {
    cplx acc = -s2[i];
    for (int j = 1; j < k1; ++j) acc -= t[k1 + i - j] * s1[j];
    t[k1 + i] = acc / s1[0];
  }
  Eigen::MatrixXcd lmat = Eigen::MatrixXcd::Zero(k2, k1);
  for (int i = 0; i < k2; ++i) {
    for (int j = 0; j < k1; ++j) lmat(i, j) = t[k1 + i - j];
  }

  Eigen::MatrixXcd lambda = Eigen::MatrixXcd::Zero(k1, k1);
  if (k1 > 1) {
    lambda = Eigen::MatrixXcd::Identity(k1, k1) - s1 * s1.adjoint() / s1.squaredNorm();
    // Trace 1 + ||Lmat||_F^2 keeps both diagonal blocks of D on one scale so
    // the rank test is not swamped when s1[0] is small.
    lambda *= (1.0 + lmat.squaredNorm()) / static_cast<double>(k1 - 1);
  }

  Eigen::MatrixXcd d(l + 1, l + 1);
  d.topLeftCorner(k1, k1) = lmat.adjoint() * lmat + lambda;
  d.topRightCorner(k1, k2) = lmat.adjoint();
  d.bottomLeftCorner(k2, k1) = lmat;
  d.bottomRightCorner(k2, k2) = Eigen::MatrixXcd::Identity(k2, k2);

  DualCertificate cert{HermitianMatrix::symmetrized(d), std::move(lmat), std::move(lambda), {}};
  cert.checks = check_certificate(cert.d, s0, l);
  if (!cert.checks.passed()) {
    throw Error(Errc::kCertificateInvalid,
                describe("kernel residual ", cert.checks.kernel_residual, ", numerical rank ",
                         cert.checks.numerical_rank, ", min eigenvalue ratio ", cert.checks.min_eigenvalue_ratio));
  }
  return cert;
}

DualCertificate build_dual_certificate(const Signal& s0, int shift, const Eigen::VectorXcd& weights) {
  if (weights.size() != s0.size()) throw Error(Errc::kDimension, "one weight per section sample");
  if ((weights.array() == cplx{}).any()) throw Error(Errc::kPrecondition, "weights must be non-zero");
  DualCertificate base = build_dual_certificate(Signal(s0.values().cwiseProduct(weights)), shift);
  const Eigen::MatrixXcd d = weights.conjugate().asDiagonal() * base.d.entries() * weights.asDiagonal();
  base.d = HermitianMatrix::symmetrized(d);
  base.checks = check_certificate(base.d, s0, shift);
  if (!base.checks.passed()) throw Error(Errc::kCertificateInvalid, "weighted certificate failed its checks");
  return base;
}

SuperresVector build_superres_vector(const Signal& x0, const StftParams& p, int rows) {
  const int n = p.n();
  const int l = p.shift();
  const int half_up = l - l / 2;
  if (x0.size() != n) throw Error(Errc::kDimension, "signal length does not match N");
  if (rows < 4 * half_up || rows > n) throw Error(Errc::kPrecondition, "need 4 ceil(L/2) <= M <= N");
  if (x0[0] == cplx{}) throw Error(Errc::kPrecondition, "x0[0] must be non-zero");
  if (l >= n) throw Error(Errc::kPrecondition, "need L < N");

  std::vector<Eigen::VectorXcd> eq;
  std::vector<cplx> rhs;
  auto unit_row = [&](int idx, cplx value) {
    Eigen::VectorXcd row = Eigen::VectorXcd::Zero(n);
    row[((idx % n) + n) % n] = 1.0;
    eq.push_back(std::move(row));
    rhs.push_back(value);
  };
  unit_row(0, 1.0);
  for (int k = 1; k <= half_up - 1; ++k) {
    unit_row(k, 0.0);
    unit_row(n - k, 0.0);
  }
  const std::size_t unit_rows = eq.size();
  for (int m = l / 2 + 1; m <= l; ++m) {
    Eigen::VectorXcd fwd = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd bwd = Eigen::VectorXcd::Zero(n);
    for (int k = 0; k <= m; ++k) {
      fwd[m - k] += x0[k];
      bwd[(n - m + k) % n] += std::conj(x0[k]);
    }
    eq.push_back(std::move(fwd));
    rhs.push_back(0.0);
    eq.push_back(std::move(bwd));
    rhs.push_back(0.0);
  }
  const std::size_t annihilate_rows = eq.size();
  const Dft dft(n);
  for (int m = rows + 1; m <= n; ++m) {
    Eigen::VectorXcd row(n);
    for (int k = 0; k < n; ++k) row[k] = dft.twiddle(static_cast<long long>(m) * k);
    eq.push_back(std::move(row));
    rhs.push_back(0.0);
  }

  const auto count = static_cast<Eigen::Index>(eq.size());
  Eigen::MatrixXcd a(count, n);
  Eigen::VectorXcd b(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    a.row(i) = eq[static_cast<std::size_t>(i)].transpose();
    b[i] = rhs[static_cast<std::size_t>(i)];
  }

  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  SuperresVector out;
  out.equations = static_cast<int>(count);
  out.smallest_singular_ratio = sv[sv.size() - 1] / sv[0];
  if (out.smallest_singular_ratio < 1e-12) {
    throw Error(Errc::kDegenerateInstance, "constraint matrix is numerically singular");
  }
  out.l = svd.solve(b);
  // Iterative refinement; large-norm solutions otherwise keep an absolute
  // residual of order eps * ||A|| * ||l||.
  Eigen::VectorXcd res = a * out.l - b;
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXcd cand = out.l - svd.solve(res);
    const Eigen::VectorXcd cand_res = a * cand - b;
    if (cand_res.norm() >= res.norm()) break;
    out.l = cand;
    res = cand_res;
  }

  // The exact solution satisfies l[n] = conj(l[N-n]): the constraint set is
  // closed under that map and the minimum-norm point is unique. Measure the
  // deviation, then remove it.
  Eigen::VectorXcd mirrored(n);
  for (int k = 0; k < n; ++k) mirrored[k] = std::conj(out.l[(n - k) % n]);
  out.symmetry_residual = (out.l - mirrored).cwiseAbs().maxCoeff() / out.l.norm();
  out.l = 0.5 * (out.l + mirrored);
  res = a * out.l - b;

  const auto seg_norm = [&](std::size_t from, std::size_t to) {
    return to > from ? res.segment(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to - from))
                           .cwiseAbs()
                           .maxCoeff()
                     : 0.0;
  };
  out.residual_unit = seg_norm(0, unit_rows);
  out.residual_annihilate = seg_norm(unit_rows, annihilate_rows);
  out.residual_spectrum = seg_norm(annihilate_rows, eq.size());
  const double worst = std::max({out.residual_unit, out.residual_annihilate, out.residual_spectrum,
                                 out.symmetry_residual});
  if (worst > 1e-8) {
    throw Error(Errc::kCertificateInvalid,
                describe("super-resolution residuals: unit ", out.residual_unit, ", annihilate ",
                         out.residual_annihilate, ", spectrum ", out.residual_spectrum, ", symmetry ",
                         out.symmetry_residual));
  }
  return out;
}

Eigen::VectorXcd aperiodic_autocorrelation(const Signal& v) {
  const int n = v.size();
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i + k < n; ++i) r[k] += v[i + k] * std::conj(v[i]);
  }
  return r;
}

Signal canonical_phase(const Signal& x) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < x.values().size(); ++i) {
    if (std::abs(x.values()[i]) > std::abs(x.values()[best])) best = i;
  }
  const cplx ref = x.values().size() > 0 ? x.values()[best] : cplx{};
  if (std::abs(ref) == 0.0) return x;
  return Signal(x.values() * (std::abs(ref) / ref));
}

std::vector<Signal> enumerate_magnitude_equivalent(const Signal& v) {
  const int n = v.size();
  if (n > 8) throw Error(Errc::kDegreeCap, "enumeration is limited to n <= 8");
  if (v[0] == cplx{} || v[n - 1] == cplx{}) {
    throw Error(Errc::kPrecondition, "first and last samples must be non-zero");
  }
  if (n == 1) return {canonical_phase(v)};

  std::vector<cplx> coeffs(v.values().data(), v.values().data() + n);
  const std::vector<cplx> roots = polynomial_roots(coeffs);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (std::abs(roots[i] - roots[j]) < 1e-6) throw Error(Errc::kUnsupportedInstance, "repeated roots");
    }
  }

  const Eigen::VectorXcd target = aperiodic_autocorrelation(v);
  const double tol = 1e-6 * std::max(1.0, target[0].real());
  const int degree = n - 1;
  std::vector<Signal> out;
  for (unsigned mask = 0; mask < (1u << degree); ++mask) {
    // Build leading * prod (z - root) with the selected roots reflected.
    std::vector<cplx> poly{v[n - 1]};
    for (int k = 0; k < degree; ++k) {
      cplx root = roots[static_cast<std::size_t>(k)];
      cplx gain = 1.0;
      if (mask & (1u << k)) {
        gain = std::abs(root);
        root = 1.0 / std::conj(root);
      }
      std::vector<cplx> next(poly.size() + 1, cplx{});
      for (std::size_t i = 0; i < poly.size(); ++i) {
        next[i + 1] += gain * poly[i];
        next[i] -= gain * root * poly[i];
      }
      poly = std::move(next);
    }
    Eigen::VectorXcd vals(n);
    for (int i = 0; i < n; ++i) vals[i] = poly[static_cast<std::size_t>(i)];
    Signal cand = canonical_phase(Signal(std::move(vals)));
    if ((aperiodic_autocorrelation(cand) - target).cwiseAbs().maxCoeff() > tol) {
      throw Error(Errc::kConvergence, "reflected signal lost the autocorrelation; roots too inaccurate");
    }
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const Signal& s) { return dist_mod_phase(s, cand) <= 1e-6; });
    if (!seen) out.push_back(std::move(cand));
  }
  return out;
}

const char* to_string(CounterexampleKind kind) {
  switch (kind) {
    case CounterexampleKind::kNonoverlapPhase: return "nonoverlap-phase";
    case CounterexampleKind::kSparseShift: return "sparse-shift";
    case CounterexampleKind::kSparseSign: return "sparse-sign";
  }
  return "unknown";
}

CounterexampleKind counterexample_kind_from_string(const std::string& name) {
  for (auto k : {CounterexampleKind::kNonoverlapPhase, CounterexampleKind::kSparseShift,
                 CounterexampleKind::kSparseSign}) {
    if (name == to_string(k)) return k;
  }
  throw Error(Errc::kInvalidArgument, "unknown counterexample kind '" + name + "'");
}

Counterexample make_counterexample(CounterexampleKind kind) {
  switch (kind) {
    case CounterexampleKind::kNonoverlapPhase:
      // L = W: adjacent sections share no sample, so their relative phase is free.
      return {Signal{1.0, 2.0, 3.0}, Signal{1.0, -2.0, -3.0}, StftParams(3, 2, 2, 3)};
    case CounterexampleKind::kSparseShift: {
      // W a multiple of L: no section boundary splits [5, 8], so a signal living
      // on [5, 6] only ever shows its Fourier magnitude.
      const int n = 16;
      Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n);
      Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
      a[5] = {1.0, 0.5};
      a[6] = {-0.75, 2.0};
      b[6] = a[5];
      b[7] = a[6];
      return {Signal(std::move(a)), Signal(std::move(b)), StftParams(n, 8, 4, n)};
    }
    case CounterexampleKind::kSparseSign: {
      // Supports [0, 2] and [8, 10] are further apart than W = 4.
      const int n = 16;
      Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n);
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
      u[0] = {1.0, 0.0};
      u[1] = {0.5, -1.0};
      u[2] = {2.0, 0.25};
      v[8] = {1.5, 0.0};
      v[9] = {-1.0, 0.5};
      v[10] = {0.0, 0.7};
      return {Signal(u + v), Signal(u - v), StftParams(n, 4, 2, n)};
    }
  }
  throw Error(Errc::kInvalidArgument, "unknown counterexample kind");
}

double dist_trivial_ambiguities(const Signal& x1, const Signal& x2) {
  const int n = x1.size();
  if (x2.size() != n) throw Error(Errc::kDimension, "signals differ in length");
  double best = dist_mod_phase(x1, x2);
  for (int flip = 0; flip < 2; ++flip) {
    for (int q = 0; q < n; ++q) {
      Eigen::VectorXcd t(n);
      for (int i = 0; i < n; ++i) {
        const int src = ((i - q) % n + n) % n;
        t[i] = flip ? std::conj(x2[(n - src) % n]) : x2[src];
      }
      best = std::min(best, dist_mod_phase(x1, Signal(std::move(t))));
    }
  }
  return best;
}

}  // namespace stftpr
