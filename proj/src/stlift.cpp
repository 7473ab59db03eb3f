#include "stftpr/stlift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "stftpr/error.hpp"

namespace stftpr {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : (num > 0.0 ? 1.0 : 0.0); }

void require_shape(const MagnitudeMeasurements& zm, const StftParams& p) {
  if (zm.rows() != p.rows() || zm.sections() != p.sections()) {
    throw Error(Errc::kDimension, "measurements are " + std::to_string(zm.rows()) + "x" +
                                      std::to_string(zm.sections()) + ", params expect " +
                                      std::to_string(p.rows()) + "x" + std::to_string(p.sections()));
  }
}

// Plateau: the last `window` combined residuals shrank by less than 1%.
bool plateaued(const std::vector<double>& history, std::size_t window) {
  if (history.size() < 2 * window) return false;
  const double recent = history.back();
  const double earlier = history[history.size() - window];
  return recent > 0.99 * earlier;
}

// Shared ADMM bookkeeping: PSD step with warm-started eigendecompositions.
class PsdStep {
 public:
  HermitianMatrix operator()(const HermitianMatrix& v) {
    EigenDecomposition eig = basis_.size() == 0 ? hermitian_eig(v) : hermitian_eig(v, basis_);
    basis_ = eig.vectors;
    last_ = std::move(eig);
    return psd_project(last_);
  }

 private:
  Eigen::MatrixXcd basis_;
  EigenDecomposition last_;
};

void finalize(SolveReport& report, const HermitianMatrix& y, const AffineMeasurementOperator& op,
              const Eigen::VectorXd& b) {
  const EigenDecomposition eig = hermitian_eig(y);
  report.top_eigenvalue = eig.values.size() > 0 ? eig.values[0] : 0.0;
  report.second_eigenvalue = eig.values.size() > 1 ? eig.values[1] : 0.0;
  report.objective_trace = y.trace();
  report.affine_residual = safe_ratio((op.apply(y) - b).norm(), b.norm());
}

// Residual balancing: returns the factor applied to rho (1 when unchanged).
double balance_rho(const SolverOptions& opts, int k, const SolveReport& report, double& rho) {
  if (opts.adapt_every <= 0 || k % opts.adapt_every != 0 || k > opts.adapt_until) return 1.0;
  double factor = 1.0;
  if (report.primal_residual > 10.0 * report.dual_residual) factor = 2.0;
  if (report.dual_residual > 10.0 * report.primal_residual) factor = 0.5;
  rho *= factor;
  return factor;
}


// Type-II Anderson acceleration of a fixed-point map x -> T(x).
class Anderson {
 public:
  explicit Anderson(int memory) : memory_(std::max(memory, 0)) {}

  bool enabled() const { return memory_ > 0; }

  void reset() {
    dt_.clear();
    dg_.clear();
    prev_t_ = Eigen::VectorXd();
  }

  // `mapped` = T(current). Returns the next point.
  Eigen::VectorXd next(const Eigen::VectorXd& current, const Eigen::VectorXd& mapped) {
    const Eigen::VectorXd g = mapped - current;
    if (prev_t_.size() > 0) {
      dt_.push_back(mapped - prev_t_);
      dg_.push_back(g - prev_g_);
      if (static_cast<int>(dg_.size()) > memory_) {
        dt_.erase(dt_.begin());
        dg_.erase(dg_.begin());
      }
    }
    prev_t_ = mapped;
    prev_g_ = g;
    if (dg_.empty()) return mapped;

    const auto cols = static_cast<Eigen::Index>(dg_.size());
    Eigen::MatrixXd dg(g.size(), cols);
    Eigen::MatrixXd dt(g.size(), cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      dg.col(j) = dg_[static_cast<std::size_t>(j)];
      dt.col(j) = dt_[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd gamma = dg.completeOrthogonalDecomposition().solve(g);
    if (!gamma.allFinite()) return mapped;
    return mapped - dt * gamma;
  }

 private:
  int memory_;
  std::vector<Eigen::VectorXd> dt_;
  std::vector<Eigen::VectorXd> dg_;
  Eigen::VectorXd prev_t_;
  Eigen::VectorXd prev_g_;
};

Eigen::VectorXd pack(const AffineMeasurementOperator& op, const HermitianMatrix& y, const HermitianMatrix& u) {
  const Eigen::VectorXd a = op.to_params(y);
  Eigen::VectorXd out(2 * a.size());
  out << a, op.to_params(u);
  return out;
}

void unpack(const AffineMeasurementOperator& op, const Eigen::VectorXd& s, HermitianMatrix& y, HermitianMatrix& u) {
  const Eigen::Index half = s.size() / 2;
  y = op.from_params(s.head(half));
  u = op.from_params(s.tail(half));
}
}  // namespace

// ---------------------------------------------------------------------------

AffineMeasurementOperator::AffineMeasurementOperator(const StftParams& p) : params_(p) {
  const int n = p.n();
  const int m_rows = p.rows();
  const int dim = n * n;
  const Dft dft(n);
  rows_.reserve(static_cast<std::size_t>(m_rows * p.sections()));
  matrix_.resize(m_rows * p.sections(), dim);

  int i = 0;
  for (int r = 0; r < p.sections(); ++r) {
    for (int m = 1; m <= m_rows; ++m, ++i) {
      rows_.push_back({r, m});
      // c[k] = conj(w_r[k]) f_m[k], f_m[k] = exp(+i 2 pi m k / N)
      Eigen::VectorXcd c(n);
      for (int k = 0; k < n; ++k) {
        c[k] = std::conj(p.section_weight(r, k)) * std::conj(dft.twiddle(static_cast<long long>(m) * k));
      }
      int col = n;
      for (int a = 0; a < n; ++a) {
        matrix_(i, a) = std::norm(c[a]);
        for (int bcol = a + 1; bcol < n; ++bcol, col += 2) {
          const cplx z = std::conj(c[a]) * c[bcol];
          matrix_(i, col) = kSqrt2 * z.real();
          matrix_(i, col + 1) = -kSqrt2 * z.imag();
        }
      }
      sensing_.push_back(std::move(c));
    }
  }

  // JacobiSVD rather than BDCSVD: Eigen 3.4.0's BDCSVD returns wrong factors
  // (or trips internal asserts) on these strongly rank-deficient matrices.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::Index keep = 0;
  const double cutoff = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
  while (keep < sv.size() && sv[keep] > cutoff) ++keep;
  left_ = svd.matrixU().leftCols(keep);
  right_ = svd.matrixV().leftCols(keep);
  singular_values_ = sv.head(keep);
}

Eigen::VectorXd AffineMeasurementOperator::to_params(const HermitianMatrix& x) const {
  const int n = params_.n();
  Eigen::VectorXd theta(dim());
  int col = n;
  for (int a = 0; a < n; ++a) {
    theta[a] = x(a, a).real();
    for (int b = a + 1; b < n; ++b, col += 2) {
      theta[col] = kSqrt2 * x(a, b).real();
      theta[col + 1] = kSqrt2 * x(a, b).imag();
    }
  }
  return theta;
}

HermitianMatrix AffineMeasurementOperator::from_params(const Eigen::VectorXd& theta) const {
  const int n = params_.n();
  Eigen::MatrixXcd x(n, n);
  int col = n;
  for (int a = 0; a < n; ++a) {
    x(a, a) = theta[a];
    for (int b = a + 1; b < n; ++b, col += 2) {
      const cplx v(theta[col] / kSqrt2, theta[col + 1] / kSqrt2);
      x(a, b) = v;
      x(b, a) = std::conj(v);
    }
  }
  return HermitianMatrix::symmetrized(x);
}

Eigen::VectorXd AffineMeasurementOperator::apply(const HermitianMatrix& x) const {
  return matrix_ * to_params(x);
}

HermitianMatrix AffineMeasurementOperator::adjoint(const Eigen::VectorXd& y) const {
  return from_params(matrix_.transpose() * y);
}

Eigen::VectorXd AffineMeasurementOperator::least_norm_solution(const Eigen::VectorXd& b) const {
  return right_ * ((left_.transpose() * b).cwiseQuotient(singular_values_));
}

Eigen::VectorXd AffineMeasurementOperator::project_affine(const Eigen::VectorXd& theta,
                                                          const Eigen::VectorXd& particular) const {
  return theta - right_ * (right_.transpose() * theta) + particular;
}

Eigen::VectorXd AffineMeasurementOperator::solve_regularized(const Eigen::VectorXd& rhs) const {
  const Eigen::VectorXd s2 = singular_values_.cwiseAbs2();
  const Eigen::VectorXd shrink = s2.cwiseQuotient((s2.array() + 1.0).matrix());
  return rhs - right_ * shrink.cwiseProduct(right_.transpose() * rhs);
}

AffineMeasurementOperator build_affine_operator(const StftParams& p) { return AffineMeasurementOperator(p); }

double default_trace_weight(const MagnitudeMeasurements& zm, const StftParams& p) {
  const double mean = zm.z().size() > 0 ? zm.z().mean() : 0.0;
  return std::max(mean, 0.0) / p.n();
}

// ---------------------------------------------------------------------------

SolveResult stlift_solve(const MagnitudeMeasurements& zm, const AffineMeasurementOperator& op,
                         const SolverOptions& opts) {
  const StftParams& p = op.params();
  require_shape(zm, p);
  if (!(opts.rho > 0.0) || opts.max_iters < 1 || !(opts.relaxation > 0.0 && opts.relaxation < 2.0) ||
      opts.anderson_memory < 0) {
    throw Error(Errc::kInvalidArgument, "invalid solver options");
  }

  const Eigen::VectorXd b = AffineMeasurementOperator::flatten(zm);
  const Eigen::VectorXd particular = op.least_norm_solution(b);
  const double tw = opts.trace_weight.value_or(default_trace_weight(zm, p));
  const Eigen::VectorXd identity = op.to_params(HermitianMatrix::identity(p.n()));
  double rho = opts.rho;

  HermitianMatrix y(p.n());
  HermitianMatrix u(p.n());
  HermitianMatrix y_out(p.n());
  PsdStep psd;
  SolveReport report;
  std::vector<double> history;
  Anderson anderson(opts.anderson_memory);
  Eigen::VectorXd state = anderson.enabled() ? pack(op, y, u) : Eigen::VectorXd();
  Eigen::VectorXd fallback;
  double fallback_norm = 0.0;

  for (int k = 1; k <= opts.max_iters; ++k) {
    const Eigen::VectorXd v = op.to_params(y) - op.to_params(u) - identity * (tw / rho);
    const HermitianMatrix x = op.from_params(op.project_affine(v, particular));
    const Eigen::MatrixXcd relaxed = opts.relaxation * x.entries() + (1.0 - opts.relaxation) * y.entries();
    const HermitianMatrix y_next = psd(HermitianMatrix::symmetrized(relaxed + u.entries()));
    const Eigen::MatrixXcd gap = x.entries() - y_next.entries();
    const HermitianMatrix u_next = HermitianMatrix::symmetrized(u.entries() + relaxed - y_next.entries());

    Eigen::VectorXd mapped;
    if (anderson.enabled()) {
      mapped = pack(op, y_next, u_next);
      const double step = (mapped - state).norm();
      if (fallback.size() > 0 && step > fallback_norm) {
        // The extrapolated point did worse than the plain step it replaced.
        state = std::move(fallback);
        fallback = Eigen::VectorXd();
        unpack(op, state, y, u);
        anderson.reset();
        report.iterations = k;
        continue;
      }
      fallback = mapped;
      fallback_norm = step;
    }

    const double primal_abs = gap.norm();
    const double dual_abs = (y_next.entries() - y.entries()).norm();
    y_out = y_next;
    report.iterations = k;
    report.primal_residual = safe_ratio(primal_abs, std::max(x.frobenius_norm(), y_next.frobenius_norm()));
    report.dual_residual = safe_ratio(dual_abs, y_next.frobenius_norm());
    history.push_back(std::hypot(primal_abs, dual_abs));

    if (report.primal_residual <= opts.eps_primal && report.dual_residual <= opts.eps_dual) {
      report.converged = true;
      break;
    }
    if (anderson.enabled()) {
      state = anderson.next(state, mapped);
      unpack(op, state, y, u);
    } else {
      y = y_next;
      u = u_next;
    }
    if (const double f = balance_rho(opts, k, report, rho); f != 1.0) {
      u = HermitianMatrix::symmetrized(u.entries() / f);
      if (anderson.enabled()) {
        state = pack(op, y, u);
        fallback = Eigen::VectorXd();
        anderson.reset();
      }
    }
  }
  report.stalled = !report.converged && plateaued(history, 500);
  if (opts.record_history) report.combined_residuals = std::move(history);
  finalize(report, y_out, op, b);
  return {std::move(y_out), std::move(report)};
}

SolveResult stlift_solve(const MagnitudeMeasurements& zm, const StftParams& p, const SolverOptions& opts) {
  return stlift_solve(zm, build_affine_operator(p), opts);
}

SolveResult stlift_solve_noisy(const MagnitudeMeasurements& zm, const AffineMeasurementOperator& op,
                               const std::vector<double>& eta, const SolverOptions& opts) {
  const StftParams& p = op.params();
  require_shape(zm, p);
  if (!(opts.rho > 0.0) || opts.max_iters < 1) throw Error(Errc::kInvalidArgument, "invalid solver options");
  if (static_cast<int>(eta.size()) != p.sections()) {
    throw Error(Errc::kDimension, "need one eta per section");
  }
  for (double e : eta) {
    if (!(e >= 0.0)) throw Error(Errc::kInvalidArgument, "eta must be non-negative");
  }

  const int m_rows = p.rows();
  const Eigen::VectorXd b = AffineMeasurementOperator::flatten(zm);
  const double tw = opts.trace_weight.value_or(default_trace_weight(zm, p));
  const Eigen::VectorXd identity = op.to_params(HermitianMatrix::identity(p.n()));
  double rho = opts.rho;

  // z = b + per-section projection of (v - b) onto the eta_r ball.
  auto project_balls = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    for (int r = 0; r < p.sections(); ++r) {
      auto seg = out.segment(r * m_rows, m_rows);
      const auto base = b.segment(r * m_rows, m_rows);
      Eigen::VectorXd resid = seg - base;
      const double norm = resid.norm();
      if (norm > eta[static_cast<std::size_t>(r)]) resid *= eta[static_cast<std::size_t>(r)] / norm;
      seg = base + resid;
    }
    return out;
  };

  HermitianMatrix y(p.n());
  HermitianMatrix u(p.n());
  Eigen::VectorXd z = project_balls(Eigen::VectorXd::Zero(b.size()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(b.size());
  PsdStep psd;
  SolveReport report;
  std::vector<double> history;

  for (int k = 1; k <= opts.max_iters; ++k) {
    const Eigen::VectorXd rhs =
        op.to_params(y) - op.to_params(u) - identity * (tw / rho) + op.matrix().transpose() * (z - w);
    const Eigen::VectorXd theta = op.solve_regularized(rhs);
    const HermitianMatrix x = op.from_params(theta);
    const Eigen::VectorXd ax = op.apply(theta);

    const HermitianMatrix y_next = psd(HermitianMatrix::symmetrized(x.entries() + u.entries()));
    const Eigen::VectorXd z_next = project_balls(ax + w);

    const Eigen::MatrixXcd gap = x.entries() - y_next.entries();
    const Eigen::VectorXd meas_gap = ax - z_next;
    u = HermitianMatrix::symmetrized(u.entries() + gap);
    w += meas_gap;

    const double primal_abs = std::hypot(gap.norm(), meas_gap.norm());
    const double dual_abs = std::hypot((y_next.entries() - y.entries()).norm(), (z_next - z).norm());
    y = y_next;
    z = z_next;
    report.iterations = k;
    report.primal_residual =
        safe_ratio(primal_abs, std::max({x.frobenius_norm(), y.frobenius_norm(), ax.norm(), z.norm()}));
    report.dual_residual = safe_ratio(dual_abs, std::hypot(y.frobenius_norm(), z.norm()));
    history.push_back(std::hypot(primal_abs, dual_abs));

    if (report.primal_residual <= opts.eps_primal && report.dual_residual <= opts.eps_dual) {
      report.converged = true;
      break;
    }
    if (const double f = balance_rho(opts, k, report, rho); f != 1.0) {
      u = HermitianMatrix::symmetrized(u.entries() / f);
      w /= f;
    }
  }
  report.stalled = !report.converged && plateaued(history, 500);
  if (opts.record_history) report.combined_residuals = std::move(history);
  finalize(report, y, op, b);
  return {std::move(y), std::move(report)};
}

SolveResult stlift_solve_noisy(const MagnitudeMeasurements& zm, const StftParams& p, double eta,
                               const SolverOptions& opts) {
  return stlift_solve_noisy(zm, build_affine_operator(p),
                            std::vector<double>(static_cast<std::size_t>(p.sections()), eta), opts);
}

RecoveryResult recover_signal(const MagnitudeMeasurements& zm, const AffineMeasurementOperator& op,
                              const SolverOptions& opts) {
  SolveResult solved = stlift_solve(zm, op, opts);
  RankOneApproximation r1 = best_rank_one(solved.x);
  return {std::move(r1.x), std::move(solved.report)};
}

RecoveryResult recover_signal(const MagnitudeMeasurements& zm, const StftParams& p, const SolverOptions& opts) {
  return recover_signal(zm, build_affine_operator(p), opts);
}

}  // namespace stftpr
