#include "stftpr/classic_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "stftpr/error.hpp"

namespace stftpr {

namespace {

void require_shape(const MagnitudeMeasurements& zm, const StftParams& p) {
  if (zm.rows() != p.rows() || zm.sections() != p.sections()) {
    throw Error(Errc::kDimension, "measurement matrix does not match params");
  }
}

void require_autocorr_shape(const ShortTimeAutocorrelation& a, const StftParams& p) {
  if (a.n() != p.n() || a.sections() != p.sections()) {
    throw Error(Errc::kDimension, "autocorrelation matrix does not match params");
  }
}

}  // namespace

double gl_objective(const Signal& x, const MagnitudeMeasurements& zm, const StftParams& p) {
  require_shape(zm, p);
  return (zm.z() - magnitude_measurements(x, p).z()).squaredNorm();
}

GlResult griffin_lim(const MagnitudeMeasurements& zm, const StftParams& p, const Signal& init, int iters,
                     bool safeguard) {
  require_shape(zm, p);
  if (init.size() != p.n()) throw Error(Errc::kDimension, "initial estimate has wrong length");
  if (iters < 0) throw Error(Errc::kInvalidArgument, "iteration count must be non-negative");

  const int n = p.n();
  const int sections = p.sections();
  const Dft dft(n);

  Eigen::VectorXd denom = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < sections; ++r) {
    for (int k = 0; k < n; ++k) denom[k] += std::norm(p.section_weight(r, k));
  }
  for (int k = 0; k < n; ++k) {
    if (denom[k] == 0.0) {
      throw Error(Errc::kUncoveredSample, "sample " + std::to_string(k) + " is not covered by any section");
    }
  }

  const Eigen::MatrixXd target = zm.z().cwiseMax(0.0).cwiseSqrt();
  // Objectives at the level of roundoff are compared against this floor.
  const double floor = 1e-20 * std::max(zm.z().squaredNorm(), 1e-300);

  GlState state;
  state.window_vanishing = !p.window_non_vanishing();
  Signal x = init;
  state.objective = gl_objective(x, zm, p);
  state.history.push_back(state.objective);

  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXcd y = stft_forward(x, p);
    for (int r = 0; r < sections; ++r) {
      for (int i = 0; i < p.rows(); ++i) {
        const int bin = (i + 1) % n;
        const cplx v = y(bin, r);
        const double mag = std::abs(v);
        y(bin, r) = target(i, r) * (mag > 0.0 ? v / mag : cplx{1.0, 0.0});
      }
    }
    Eigen::VectorXcd num = Eigen::VectorXcd::Zero(n);
    for (int r = 0; r < sections; ++r) {
      const Eigen::VectorXcd s = dft.inverse(y.col(r));
      for (int k = 0; k < n; ++k) num[k] += std::conj(p.section_weight(r, k)) * s[k];
    }
    const Eigen::VectorXcd proposal = num.cwiseQuotient(denom.cast<cplx>());

    const double previous = state.objective;
    Signal next(proposal);
    double value = gl_objective(next, zm, p);
    if (safeguard && value > previous) {
      // Backtrack along the projection step until the objective does not grow.
      ++state.damped_steps;
      double t = 0.5;
      for (; t >= 0x1p-30; t *= 0.5) {
        next = Signal(x.values() + t * (proposal - x.values()));
        value = gl_objective(next, zm, p);
        if (value <= previous) break;
      }
      if (t < 0x1p-30) {
        state.stalled = true;
        break;
      }
    }
    x = std::move(next);
    state.objective = value;
    state.history.push_back(value);
    state.iterations = it + 1;
    const double rel = (value - previous) / std::max(previous, floor);
    state.max_relative_increase = std::max(state.max_relative_increase, rel);
  }
  state.monotone = state.max_relative_increase <= 1e-9;
  state.x = x;
  return {std::move(x), std::move(state)};
}

GlResult griffin_lim(const MagnitudeMeasurements& zm, const StftParams& p, std::uint64_t seed, int iters,
                     bool safeguard) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::VectorXcd v(p.n());
  for (int k = 0; k < p.n(); ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    v[k] = {re, im};
  }
  return griffin_lim(zm, p, Signal(std::move(v)), iters, safeguard);
}

Signal sequential_recover_L1(const ShortTimeAutocorrelation& a, const StftParams& p) {
  require_autocorr_shape(a, p);
  const int n = p.n();
  const int wl = p.window_length();
  if (p.shift() != 1) throw Error(Errc::kPrecondition, "sequential L=1 recovery needs L = 1");
  if (wl < 2) throw Error(Errc::kPrecondition, "sequential L=1 recovery needs W >= 2");
  if (wl >= n) throw Error(Errc::kPrecondition, "sequential L=1 recovery needs W < N");
  if (!p.window_non_vanishing()) throw Error(Errc::kPrecondition, "window has zero entries");

  const cplx w0 = p.window_at(0);
  const cplx w1 = p.window_at(1);
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);

  auto magnitude = [&](int r) {
    double known = 0.0;
    for (int k = std::max(0, r - wl + 1); k < r; ++k) known += std::norm(x[k] * p.section_weight(r, k));
    const double diag = a(0, r).real();
    const double m2 = (diag - known) / std::norm(w0);
    if (m2 < -1e-9 * std::max(1.0, diag / std::norm(w0))) {
      throw Error(Errc::kInconsistent, "negative energy at sample " + std::to_string(r));
    }
    return std::max(m2, 0.0);
  };

  x[0] = std::sqrt(magnitude(0));
  for (int r = 1; r < n; ++r) {
    if (std::abs(x[r - 1]) < 1e-12) {
      throw Error(Errc::kVanishingSignal, "sample " + std::to_string(r - 1) + " vanishes");
    }
    const double m2 = magnitude(r);
    // a[1][r] = sum_k u[k] conj(u[k+1]); only k = r-1 involves x[r].
    cplx known{};
    for (int k = std::max(0, r - wl + 1); k < r - 1; ++k) {
      known += x[k] * p.section_weight(r, k) * std::conj(x[k + 1] * p.section_weight(r, k + 1));
    }
    const cplx cross = (a(1, r) - known) / (w1 * std::conj(w0));  // x[r-1] conj(x[r])
    const cplx xr = std::conj(cross / x[r - 1]);
    const double mag = std::abs(xr);
    x[r] = mag > 0.0 ? xr * (std::sqrt(m2) / mag) : cplx{};
  }
  if (std::abs(x[n - 1]) < 1e-12) {
    throw Error(Errc::kVanishingSignal, "sample " + std::to_string(n - 1) + " vanishes");
  }
  return Signal(std::move(x));
}

BandSamples sequential_band_fill(const ShortTimeAutocorrelation& a, const StftParams& p,
                                 const std::vector<cplx>& prefix) {
  require_autocorr_shape(a, p);
  const int n = p.n();
  const int wl = p.window_length();
  const int l = p.shift();
  if (!(2 * l <= wl && 2 * wl <= n)) throw Error(Errc::kPrecondition, "band fill needs 2L <= W <= N/2");
  if (!p.window_non_vanishing()) throw Error(Errc::kPrecondition, "window has zero entries");
  const int known_len = l / 2 + 1;
  if (static_cast<int>(prefix.size()) != known_len) {
    throw Error(Errc::kDimension, "prefix must hold floor(L/2)+1 = " + std::to_string(known_len) + " samples");
  }

  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < known_len; ++k) x[k] = prefix[static_cast<std::size_t>(k)];
  int known = known_len;  // samples [0, known) are fixed
  const double scale = std::max(a.a().cwiseAbs().maxCoeff(), 1e-300);

  // Lags m = 0..W-1 of section r evaluated on the current estimate.
  auto lag_value = [&](int r, int m) {
    cplx s{};
    for (int k = 0; k + m < n; ++k) {
      s += x[k] * p.section_weight(r, k) * std::conj(x[k + m] * p.section_weight(r, k + m));
    }
    return s;
  };
  auto check_section = [&](int r) {
    for (int m = 0; m < wl; ++m) {
      if (std::abs(lag_value(r, m) - a(m, r)) > 1e-7 * scale) {
        throw Error(Errc::kInconsistent, "section " + std::to_string(r) + " lag " + std::to_string(m) +
                                             " disagrees with the data");
      }
    }
  };

  for (int r = 0; r < p.sections(); ++r) {
    const int last = std::min(r * l, n - 1);
    if (last >= known) {
      // Unknowns conj(x[j]) for j in [known, last]. A lag m is linear in
      // them when no pair (k, k+m) has both indices unknown.
      const int unknowns = last - known + 1;
      const int first = std::max(0, r * l - wl + 1);
      std::vector<Eigen::VectorXcd> rows;
      std::vector<cplx> rhs;
      for (int m = unknowns; m < wl; ++m) {
        Eigen::VectorXcd row = Eigen::VectorXcd::Zero(unknowns);
        cplx constant{};
        bool touches = false;
        for (int k = first; k + m <= last; ++k) {
          const cplx lhs = x[k] * p.section_weight(r, k) * std::conj(p.section_weight(r, k + m));
          if (k + m >= known) {
            row[k + m - known] += lhs;
            touches = true;
          } else {
            constant += lhs * std::conj(x[k + m]);
          }
        }
        if (!touches) continue;
        rows.push_back(std::move(row));
        rhs.push_back(a(m, r) - constant);
      }
      Eigen::MatrixXcd sys(static_cast<Eigen::Index>(rows.size()), unknowns);
      Eigen::VectorXcd b(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sys.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        b[static_cast<Eigen::Index>(i)] = rhs[i];
      }
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(sys);
      if (sys.rows() < unknowns || qr.rank() < unknowns) {
        throw Error(Errc::kUnderDetermined, "section " + std::to_string(r) + " leaves samples undetermined");
      }
      const Eigen::VectorXcd sol = qr.solve(b);
      for (int j = 0; j < unknowns; ++j) x[known + j] = std::conj(sol[j]);
      known = last + 1;
    }
    check_section(r);
  }

  const int bandwidth = wl - l;
  BandSamples band(n, bandwidth);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j <= std::min(n - 1, i + bandwidth); ++j) band.set(i, j, x[i] * std::conj(x[j]));
  }
  return band;
}

Signal sequential_recover(const ShortTimeAutocorrelation& a, const StftParams& p,
                          const std::vector<cplx>& prefix) {
  const HermitianMatrix full = rank_one_band_completion(sequential_band_fill(a, p, prefix));
  const RankOneApproximation r1 = best_rank_one(full);
  // Align the global phase with the supplied first sample.
  const cplx ref = prefix.front();
  const cplx got = r1.x[0];
  if (std::abs(ref) == 0.0 || std::abs(got) == 0.0) return r1.x;
  const cplx rot = (ref / std::abs(ref)) / (got / std::abs(got));
  return Signal(r1.x.values() * rot);
}

}  // namespace stftpr
