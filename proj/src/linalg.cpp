#include "stftpr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "stftpr/error.hpp"

namespace stftpr {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalTol = 1e-12;

double off_diagonal_norm(const Eigen::MatrixXcd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) s += 2.0 * std::norm(a(i, j));
  }
  return std::sqrt(s);
}

// Runs cyclic sweeps on `a` in place, accumulating rotations into `v`.
int jacobi_sweeps(Eigen::MatrixXcd& a, Eigen::MatrixXcd& v) {
  const Eigen::Index n = a.rows();
  const double scale = a.norm();
  if (scale == 0.0 || n < 2) return 0;
  const double target = kOffDiagonalTol * scale;
  const double skip = 1e-3 * target / static_cast<double>(n);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= target) return sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= skip) continue;
        const cplx e = apq / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const cplx ce = std::conj(e);

        // A <- U^* A U with U = [[c, s], [-s conj(e), c conj(e)]] on (p, q).
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          const cplx nkp = c * akp - s * ce * akq;
          const cplx nkq = s * akp + c * ce * akq;
          a(k, p) = nkp;
          a(k, q) = nkq;
          a(p, k) = std::conj(nkp);
          a(q, k) = std::conj(nkq);
        }
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = c * vkp - s * ce * vkq;
          v(k, q) = s * vkp + c * ce * vkq;
        }
      }
    }
  }
  const double residual = off_diagonal_norm(a);
  if (residual <= target) return kMaxSweeps;
  throw Error(Errc::kConvergence, "Jacobi did not converge in " + std::to_string(kMaxSweeps) +
                                      " sweeps; off-diagonal residual " + std::to_string(residual / scale) +
                                      " (relative)");
}

EigenDecomposition finish(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& v, int sweeps) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() > a(j, j).real(); });
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweeps;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

HermitianMatrix HermitianMatrix::from_entries(const Eigen::MatrixXcd& a, double tol) {
  if (a.rows() != a.cols()) throw Error(Errc::kDimension, "Hermitian matrix must be square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    throw Error(Errc::kInvalidArgument, "matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");
  }
  return symmetrized(a);
}

HermitianMatrix HermitianMatrix::symmetrized(const Eigen::MatrixXcd& a) {
  HermitianMatrix out;
  out.entries_ = 0.5 * (a + a.adjoint());
  for (Eigen::Index i = 0; i < out.entries_.rows(); ++i) out.entries_(i, i) = out.entries_(i, i).real();
  return out;
}

HermitianMatrix HermitianMatrix::outer(const Signal& x) {
  return symmetrized(x.values() * x.values().adjoint());
}

HermitianMatrix HermitianMatrix::identity(int n) {
  HermitianMatrix out;
  out.entries_ = Eigen::MatrixXcd::Identity(n, n);
  return out;
}

// ---------------------------------------------------------------------------

EigenDecomposition hermitian_eig(const HermitianMatrix& a) {
  Eigen::MatrixXcd work = a.entries();
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(a.dim(), a.dim());
  const int sweeps = jacobi_sweeps(work, v);
  return finish(work, v, sweeps);
}

EigenDecomposition hermitian_eig(const HermitianMatrix& a, const Eigen::MatrixXcd& warm_basis) {
  if (warm_basis.rows() != a.dim() || warm_basis.cols() != a.dim()) {
    throw Error(Errc::kDimension, "warm-start basis has the wrong shape");
  }
  Eigen::MatrixXcd work = warm_basis.adjoint() * a.entries() * warm_basis;
  work = 0.5 * (work + work.adjoint()).eval();
  Eigen::MatrixXcd v = warm_basis;
  const int sweeps = jacobi_sweeps(work, v);
  return finish(work, v, sweeps);
}

HermitianMatrix psd_project(const EigenDecomposition& eig) {
  const Eigen::Index n = eig.values.size();
  Eigen::Index positive = 0;
  while (positive < n && eig.values[positive] > 0.0) ++positive;
  Eigen::MatrixXcd factor = eig.vectors.leftCols(positive);
  for (Eigen::Index k = 0; k < positive; ++k) factor.col(k) *= std::sqrt(eig.values[k]);
  return HermitianMatrix::symmetrized(factor * factor.adjoint());
}

HermitianMatrix psd_project(const HermitianMatrix& a) { return psd_project(hermitian_eig(a)); }

RankOneApproximation best_rank_one(const EigenDecomposition& eig) {
  const Eigen::Index n = eig.values.size();
  RankOneApproximation out;
  out.top_eigenvalue = n > 0 ? eig.values[0] : 0.0;
  out.second_eigenvalue = n > 1 ? eig.values[1] : 0.0;
  if (!(out.top_eigenvalue > 0.0)) {
    out.x = Signal::zeros(static_cast<int>(n));
    out.degenerate = true;
    return out;
  }
  Eigen::VectorXcd v = eig.vectors.col(0);
  Eigen::Index pivot = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      pivot = i;
    }
  }
  v *= std::conj(v[pivot]) / std::abs(v[pivot]);
  v[pivot] = std::abs(v[pivot]);
  out.x = Signal(std::sqrt(out.top_eigenvalue) * v);
  return out;
}

RankOneApproximation best_rank_one(const HermitianMatrix& a) { return best_rank_one(hermitian_eig(a)); }

// ---------------------------------------------------------------------------

BandSamples::BandSamples(int n, int bandwidth) : n_(n), bandwidth_(bandwidth) {
  if (n < 1) throw Error(Errc::kInvalidArgument, "band dimension must be positive");
  if (bandwidth < 0 || bandwidth > n - 1) {
    throw Error(Errc::kInvalidArgument, "bandwidth must lie in [0, N-1]");
  }
  for (int d = 0; d <= bandwidth; ++d) diagonals_.emplace_back(Eigen::VectorXcd::Zero(n - d));
}

BandSamples BandSamples::from_matrix(const HermitianMatrix& x, int bandwidth) {
  BandSamples band(x.dim(), std::min(bandwidth, x.dim() - 1));
  for (int d = 0; d <= band.bandwidth(); ++d) {
    for (int row = 0; row + d < band.dim(); ++row) band.set(row, row + d, x(row, row + d));
  }
  return band;
}

cplx BandSamples::at(int row, int col) const {
  const int d = std::abs(col - row);
  if (row < 0 || col < 0 || row >= n_ || col >= n_ || d > bandwidth_) {
    throw Error(Errc::kInvalidArgument, "entry outside the sampled band");
  }
  return col >= row ? diagonals_[d][row] : std::conj(diagonals_[d][col]);
}

void BandSamples::set(int row, int col, cplx value) {
  const int d = std::abs(col - row);
  if (row < 0 || col < 0 || row >= n_ || col >= n_ || d > bandwidth_) {
    throw Error(Errc::kInvalidArgument, "entry outside the sampled band");
  }
  if (d == 0) value = value.real();
  if (col >= row) {
    diagonals_[d][row] = value;
  } else {
    diagonals_[d][col] = std::conj(value);
  }
}

HermitianMatrix rank_one_band_completion(const BandSamples& band) {
  constexpr double kTol = 1e-8;
  const int n = band.dim();
  const int b = band.bandwidth();
  if (b < 1 && n > 1) throw Error(Errc::kInvalidArgument, "bandwidth must be at least 1");

  Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double d = band.at(i, i).real();
    if (!(d > 0.0)) {
      throw Error(Errc::kNonCompletable, "diagonal entry " + std::to_string(i) +
                                             " is not strictly positive; the rank-one completion is not unique");
    }
    f(i, i) = d;
  }
  auto scale = [&](int i, int j) { return std::sqrt(f(i, i).real() * f(j, j).real()); };

  for (int d = 1; d <= b; ++d) {
    for (int i = 0; i + d < n; ++i) {
      const int j = i + d;
      f(i, j) = band.at(i, j);
      f(j, i) = std::conj(f(i, j));
      if (d == 1) {
        const double minor = std::norm(f(i, j)) - f(i, i).real() * f(j, j).real();
        if (std::abs(minor) > kTol * f(i, i).real() * f(j, j).real()) {
          throw Error(Errc::kInconsistent, "band is not sampled from a rank-one matrix at (" +
                                               std::to_string(i) + ", " + std::to_string(j) + ")");
        }
      } else {
        const cplx chained = f(i, j - 1) * f(j - 1, j) / f(j - 1, j - 1).real();
        if (std::abs(chained - f(i, j)) > kTol * scale(i, j)) {
          throw Error(Errc::kInconsistent, "band entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                               ") disagrees with its rank-one chain");
        }
      }
    }
  }

  for (int d = b + 1; d < n; ++d) {
    for (int i = 0; i + d < n; ++i) {
      const int j = i + d;
      const cplx via_prev = f(i, j - 1) * f(j - 1, j) / f(j - 1, j - 1).real();
      const cplx via_next = f(i, i + 1) * f(i + 1, j) / f(i + 1, i + 1).real();
      if (std::abs(via_prev - via_next) > kTol * scale(i, j)) {
        throw Error(Errc::kInconsistent, "completion paths disagree at (" + std::to_string(i) + ", " +
                                             std::to_string(j) + ")");
      }
      f(i, j) = via_prev;
      f(j, i) = std::conj(via_prev);
    }
  }
  return HermitianMatrix::symmetrized(f);
}

// ---------------------------------------------------------------------------

std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs) {
  constexpr int kMaxDegree = 16;
  constexpr int kMaxIters = 500;
  if (coeffs.empty()) throw Error(Errc::kInvalidArgument, "polynomial needs at least one coefficient");
  const int d = static_cast<int>(coeffs.size()) - 1;
  if (coeffs[d] == cplx{}) throw Error(Errc::kInvalidArgument, "leading coefficient is zero");
  if (d > kMaxDegree) {
    throw Error(Errc::kDegreeCap, "degree " + std::to_string(d) + " exceeds " + std::to_string(kMaxDegree));
  }
  if (d == 0) return {};

  double max_ratio = 0.0;
  double max_coeff = 0.0;
  for (int k = 0; k <= d; ++k) {
    max_coeff = std::max(max_coeff, std::abs(coeffs[k]));
    if (k < d) max_ratio = std::max(max_ratio, std::abs(coeffs[k] / coeffs[d]));
  }
  if (max_ratio == 0.0) return std::vector<cplx>(static_cast<std::size_t>(d), cplx{});

  auto eval = [&](cplx z, cplx& dp) {
    cplx p = coeffs[d];
    dp = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      dp = dp * z + p;
      p = p * z + coeffs[k];
    }
    return p;
  };

  const double radius = std::pow(max_ratio, 1.0 / d);
  std::vector<cplx> z(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / d + 0.4;
    z[k] = std::polar(radius * (1.0 + 0.01 * k), angle);
  }

  for (int iter = 0; iter < kMaxIters; ++iter) {
    double worst = 0.0;
    for (int k = 0; k < d; ++k) {
      cplx dp;
      const cplx p = eval(z[k], dp);
      if (p == cplx{}) continue;
      const cplx ratio = p / dp;
      cplx repulsion{};
      for (int j = 0; j < d; ++j) {
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      }
      const cplx step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[k] -= step;
      worst = std::max(worst, std::abs(step) / std::max(1.0, std::abs(z[k])));
    }
    if (worst < 1e-15) break;
  }

  for (int k = 0; k < d; ++k) {
    for (int polish = 0; polish < 3; ++polish) {
      cplx dp;
      const cplx p = eval(z[k], dp);
      if (p == cplx{} || dp == cplx{}) break;
      z[k] -= p / dp;
    }
    cplx dp;
    const double residual = std::abs(eval(z[k], dp));
    const double bound = 1e-8 * max_coeff * std::pow(std::max(1.0, std::abs(z[k])), d);
    if (!(residual <= bound)) {
      throw Error(Errc::kConvergence, "Aberth iteration left residual " + std::to_string(residual));
    }
  }
  return z;
}

}  // namespace stftpr
