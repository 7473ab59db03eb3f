#pragma once

// Forward model for STFT magnitude measurements: signals, sliding windows,
// the STFT itself, squared-magnitude measurements and the per-section
// (short-time) autocorrelation.
//
// Conventions used throughout the library:
//   w_r[n]   = w[rL - n], with w[k] = 0 outside [0, W-1]
//   Y[m][r]  = sum_n x[n] w_r[n] exp(-i 2 pi m n / N),  m = 0..N-1
//   z(i, r)  = |Y[(i + 1) mod N][r]|^2  for i = 0..M-1  (measured rows m = 1..M)
//   a[m][r]  = sum_n u[n] conj(u[(n + m) mod N]),  u = x o w_r

#include <complex>
#include <initializer_list>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace stftpr {

using cplx = std::complex<double>;

class Signal {
 public:
  Signal() = default;
  explicit Signal(Eigen::VectorXcd values);
  Signal(std::initializer_list<cplx> values);

  static Signal zeros(int n);

  int size() const { return static_cast<int>(values_.size()); }
  const Eigen::VectorXcd& values() const { return values_; }
  cplx operator[](int n) const { return values_[n]; }
  double norm() const { return values_.norm(); }

  // Exact zero test; meant for constructed data.
  bool is_non_vanishing() const;

 private:
  Eigen::VectorXcd values_;
};

struct SectionSupport {
  int first = 0;  // u_r
  int last = 0;   // v_r
};

class StftParams {
 public:
  // All-ones window of length `window_length`.
  StftParams(int n, int window_length, int shift, int rows);
  StftParams(int n, int shift, int rows, Eigen::VectorXcd window);

  int n() const { return n_; }
  int window_length() const { return static_cast<int>(window_.size()); }
  int shift() const { return shift_; }
  int rows() const { return rows_; }
  // R = ceil((N + W - 1) / L)
  int sections() const { return sections_; }
  const Eigen::VectorXcd& window() const { return window_; }

  cplx window_at(int k) const {
    return (k < 0 || k >= window_length()) ? cplx{} : window_[k];
  }
  // w_r[n]
  cplx section_weight(int r, int n) const { return window_at(r * shift_ - n); }
  SectionSupport support(int r) const;

  bool window_non_vanishing() const;
  bool overlap() const { return shift_ < window_length(); }
  bool conjecture_regime() const;
  bool autocorr_regime() const;

  StftParams with_rows(int rows) const;

 private:
  int n_;
  int shift_;
  int rows_;
  int sections_;
  Eigen::VectorXcd window_;
};

class MagnitudeMeasurements {
 public:
  MagnitudeMeasurements() = default;
  explicit MagnitudeMeasurements(Eigen::MatrixXd z);

  // File/noisy ingestion: negative entries are zeroed and `clamped()` records it.
  static MagnitudeMeasurements ingest(Eigen::MatrixXd z);

  int rows() const { return static_cast<int>(z_.rows()); }
  int sections() const { return static_cast<int>(z_.cols()); }
  // Row index i = m - 1 for measured DFT row m.
  double operator()(int i, int r) const { return z_(i, r); }
  const Eigen::MatrixXd& z() const { return z_; }
  bool clamped() const { return clamped_; }

 private:
  Eigen::MatrixXd z_;
  bool clamped_ = false;
};

class ShortTimeAutocorrelation {
 public:
  ShortTimeAutocorrelation() = default;
  explicit ShortTimeAutocorrelation(Eigen::MatrixXcd a, double condition_estimate = 1.0);

  int n() const { return static_cast<int>(a_.rows()); }
  int sections() const { return static_cast<int>(a_.cols()); }
  cplx operator()(int m, int r) const { return a_(m, r); }
  const Eigen::MatrixXcd& a() const { return a_; }

  // Largest condition number met while reconstructing from measurements.
  double condition_estimate() const { return condition_estimate_; }
  bool ill_conditioned() const { return condition_estimate_ > 1e12; }

 private:
  Eigen::MatrixXcd a_;
  double condition_estimate_ = 1.0;
};

struct WindowedSection {
  Signal values;  // x o w_r
  SectionSupport support;
};

// Direct N-point DFT against a precomputed twiddle table.
class Dft {
 public:
  explicit Dft(int n);

  int size() const { return static_cast<int>(twiddle_.size()); }
  // exp(-i 2 pi k / N)
  cplx twiddle(long long k) const;
  Eigen::VectorXcd forward(const Eigen::VectorXcd& u) const;
  // (1/N) sum_k U[k] exp(+i 2 pi k n / N)
  Eigen::VectorXcd inverse(const Eigen::VectorXcd& spectrum) const;

 private:
  std::vector<cplx> twiddle_;
};

Eigen::MatrixXcd stft_forward(const Signal& x, const StftParams& p);

MagnitudeMeasurements magnitude_measurements(const Signal& x, const StftParams& p);

// Circular per-section autocorrelation; agrees with the linear lag sum for
// lags below W whenever N >= 2W - 1.
ShortTimeAutocorrelation short_time_autocorrelation(const Signal& x, const StftParams& p);

// Inverse of the Fourier pair Z-column <-> a-column using rows 1..M only.
// Requires M >= 2W - 1 and N >= 2W - 1.
ShortTimeAutocorrelation autocorr_from_measurements(const MagnitudeMeasurements& zm,
                                                    const StftParams& p);

WindowedSection windowed_section(const Signal& x, const StftParams& p, int r);

// min_{|c|=1} ||x0 - c xhat||^2 / ||x0||^2
double dist_mod_phase(const Signal& x0, const Signal& xhat);

// Phase factor c attaining dist_mod_phase.
cplx optimal_phase(const Signal& x0, const Signal& xhat);

}  // namespace stftpr
