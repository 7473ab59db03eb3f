#include "stftpr/signal_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stftpr/error.hpp"

namespace stftpr {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::kDimension: return "dimension error";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kInsufficientMeasurements: return "insufficient measurements";
    case Errc::kUndefinedReference: return "undefined reference";
    case Errc::kConvergence: return "convergence error";
    case Errc::kNonCompletable: return "non-completable";
    case Errc::kInconsistent: return "inconsistent data";
    case Errc::kDegreeCap: return "degree cap exceeded";
    case Errc::kVanishingSignal: return "vanishing signal";
    case Errc::kUncoveredSample: return "uncovered sample";
    case Errc::kUnderDetermined: return "under-determined";
    case Errc::kPrecondition: return "precondition violated";
    case Errc::kCertificateInvalid: return "certificate invalid";
    case Errc::kDegenerateInstance: return "degenerate instance";
    case Errc::kUnsupportedInstance: return "unsupported instance";
    case Errc::kConfig: return "config error";
    case Errc::kIo: return "I/O error";
  }
  return "error";
}

namespace {

void require_length(const Signal& x, const StftParams& p) {
  if (x.size() != p.n()) {
    throw Error(Errc::kDimension, "signal length " + std::to_string(x.size()) +
                                      " does not match N = " + std::to_string(p.n()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Signal::Signal(Eigen::VectorXcd values) : values_(std::move(values)) {
  if (values_.size() < 1) throw Error(Errc::kInvalidArgument, "signal must be non-empty");
}

Signal::Signal(std::initializer_list<cplx> values) : values_(static_cast<Eigen::Index>(values.size())) {
  if (values.size() < 1) throw Error(Errc::kInvalidArgument, "signal must be non-empty");
  Eigen::Index i = 0;
  for (const cplx& v : values) values_[i++] = v;
}

Signal Signal::zeros(int n) { return Signal(Eigen::VectorXcd::Zero(n)); }

bool Signal::is_non_vanishing() const {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (values_[i] == cplx{}) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

StftParams::StftParams(int n, int window_length, int shift, int rows)
    : StftParams(n, shift, rows, Eigen::VectorXcd::Ones(std::max(window_length, 0))) {}

StftParams::StftParams(int n, int shift, int rows, Eigen::VectorXcd window)
    : n_(n), shift_(shift), rows_(rows), sections_(0), window_(std::move(window)) {
  const int w = window_length();
  if (n_ < 1 || w < 1 || w > n_) {
    throw Error(Errc::kInvalidArgument, "need 1 <= W <= N (N=" + std::to_string(n_) +
                                            ", W=" + std::to_string(w) + ")");
  }
  if (shift_ < 1) throw Error(Errc::kInvalidArgument, "need L >= 1");
  if (rows_ < 1 || rows_ > n_) {
    throw Error(Errc::kInvalidArgument, "need 1 <= M <= N (M=" + std::to_string(rows_) + ")");
  }
  sections_ = (n_ + w - 1 + shift_ - 1) / shift_;
}

SectionSupport StftParams::support(int r) const {
  return {std::max(0, r * shift_ - window_length() + 1), std::min(n_ - 1, r * shift_)};
}

bool StftParams::window_non_vanishing() const {
  for (Eigen::Index k = 0; k < window_.size(); ++k) {
    if (window_[k] == cplx{}) return false;
  }
  return true;
}

bool StftParams::conjecture_regime() const {
  const int w = window_length();
  return 2 * shift_ <= w && 2 * w <= n_ && 4 * shift_ <= rows_ && rows_ <= n_;
}

bool StftParams::autocorr_regime() const {
  return 2 * window_length() <= rows_ && rows_ <= n_;
}

StftParams StftParams::with_rows(int rows) const { return StftParams(n_, shift_, rows, window_); }

// ---------------------------------------------------------------------------

MagnitudeMeasurements::MagnitudeMeasurements(Eigen::MatrixXd z) : z_(std::move(z)) {}

MagnitudeMeasurements MagnitudeMeasurements::ingest(Eigen::MatrixXd z) {
  bool clamped = false;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (z(i, j) < 0.0) {
        z(i, j) = 0.0;
        clamped = true;
      }
    }
  }
  MagnitudeMeasurements out(std::move(z));
  out.clamped_ = clamped;
  return out;
}

ShortTimeAutocorrelation::ShortTimeAutocorrelation(Eigen::MatrixXcd a, double condition_estimate)
    : a_(std::move(a)), condition_estimate_(condition_estimate) {}

// ---------------------------------------------------------------------------

Dft::Dft(int n) : twiddle_(static_cast<std::size_t>(n)) {
  for (int k = 0; k < n; ++k) {
    const double angle = -2.0 * std::numbers::pi * k / n;
    twiddle_[k] = {std::cos(angle), std::sin(angle)};
  }
}

cplx Dft::twiddle(long long k) const {
  const long long n = size();
  long long idx = k % n;
  if (idx < 0) idx += n;
  return twiddle_[static_cast<std::size_t>(idx)];
}

Eigen::VectorXcd Dft::forward(const Eigen::VectorXcd& u) const {
  const int n = size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int m = 0; m < n; ++m) {
    cplx acc{};
    for (int k = 0; k < n; ++k) {
      if (u[k] != cplx{}) acc += u[k] * twiddle_[static_cast<std::size_t>((m * k) % n)];
    }
    out[m] = acc;
  }
  return out;
}

Eigen::VectorXcd Dft::inverse(const Eigen::VectorXcd& spectrum) const {
  const int n = size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < n; ++k) {
    cplx acc{};
    for (int m = 0; m < n; ++m) {
      acc += spectrum[m] * std::conj(twiddle_[static_cast<std::size_t>((m * k) % n)]);
    }
    out[k] = acc / static_cast<double>(n);
  }
  return out;
}

// ---------------------------------------------------------------------------

WindowedSection windowed_section(const Signal& x, const StftParams& p, int r) {
  require_length(x, p);
  if (r < 0 || r >= p.sections()) {
    throw Error(Errc::kInvalidArgument, "section index " + std::to_string(r) + " outside [0, " +
                                            std::to_string(p.sections()) + ")");
  }
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(p.n());
  const SectionSupport s = p.support(r);
  for (int n = s.first; n <= s.last; ++n) u[n] = x[n] * p.section_weight(r, n);
  return {Signal(std::move(u)), s};
}

Eigen::MatrixXcd stft_forward(const Signal& x, const StftParams& p) {
  require_length(x, p);
  const Dft dft(p.n());
  Eigen::MatrixXcd y(p.n(), p.sections());
  for (int r = 0; r < p.sections(); ++r) {
    y.col(r) = dft.forward(windowed_section(x, p, r).values.values());
  }
  return y;
}

MagnitudeMeasurements magnitude_measurements(const Signal& x, const StftParams& p) {
  const Eigen::MatrixXcd y = stft_forward(x, p);
  Eigen::MatrixXd z(p.rows(), p.sections());
  for (int r = 0; r < p.sections(); ++r) {
    for (int i = 0; i < p.rows(); ++i) z(i, r) = std::norm(y((i + 1) % p.n(), r));
  }
  return MagnitudeMeasurements(std::move(z));
}

ShortTimeAutocorrelation short_time_autocorrelation(const Signal& x, const StftParams& p) {
  require_length(x, p);
  const int n = p.n();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, p.sections());
  for (int r = 0; r < p.sections(); ++r) {
    const WindowedSection sec = windowed_section(x, p, r);
    const Eigen::VectorXcd& u = sec.values.values();
    for (int m = 0; m < n; ++m) {
      cplx acc{};
      for (int k = sec.support.first; k <= sec.support.last; ++k) {
        acc += u[k] * std::conj(u[(k + m) % n]);
      }
      a(m, r) = acc;
    }
    a(0, r) = a(0, r).real();
  }
  return ShortTimeAutocorrelation(std::move(a));
}

ShortTimeAutocorrelation autocorr_from_measurements(const MagnitudeMeasurements& zm,
                                                    const StftParams& p) {
  const int n = p.n();
  const int w = p.window_length();
  const int k = 2 * w - 1;
  if (zm.rows() != p.rows() || zm.sections() != p.sections()) {
    throw Error(Errc::kDimension, "measurement matrix does not match params");
  }
  if (p.rows() < k) {
    throw Error(Errc::kInsufficientMeasurements,
                "need M >= 2W - 1 = " + std::to_string(k) + ", have M = " + std::to_string(p.rows()));
  }
  if (n < k) {
    throw Error(Errc::kInsufficientMeasurements, "need N >= 2W - 1 for an alias-free autocorrelation");
  }

  // Z[m] = sum_j b[j] exp(+i 2 pi m (j - W + 1) / N) for m = 1..2W-1, where b is
  // a circularly shifted by W-1 so that its support is 0..2W-2.
  const Dft dft(n);
  Eigen::MatrixXcd vander(k, k);
  for (int row = 0; row < k; ++row) {
    const int m = row + 1;
    for (int j = 0; j < k; ++j) vander(row, j) = std::conj(dft.twiddle(static_cast<long long>(m) * (j - w + 1)));
  }
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(vander);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vander);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, p.sections());
  for (int r = 0; r < p.sections(); ++r) {
    Eigen::VectorXcd rhs(k);
    for (int row = 0; row < k; ++row) rhs[row] = zm(row, r);
    const Eigen::VectorXcd b = lu.solve(rhs);
    for (int j = 0; j < k; ++j) a(((j - (w - 1)) % n + n) % n, r) = b[j];
    a(0, r) = a(0, r).real();
  }
  return ShortTimeAutocorrelation(std::move(a), cond);
}

// ---------------------------------------------------------------------------

cplx optimal_phase(const Signal& x0, const Signal& xhat) {
  const cplx inner = xhat.values().dot(x0.values());  // <xhat, x0> = xhat^* x0
  const double mag = std::abs(inner);
  return mag > 0.0 ? inner / mag : cplx{1.0, 0.0};
}

double dist_mod_phase(const Signal& x0, const Signal& xhat) {
  if (x0.size() != xhat.size()) {
    throw Error(Errc::kDimension, "dist_mod_phase needs equal lengths");
  }
  const double ref = x0.values().squaredNorm();
  if (!(ref > 0.0)) throw Error(Errc::kUndefinedReference, "reference signal has zero norm");
  const cplx c = optimal_phase(x0, xhat);
  return (x0.values() - c * xhat.values()).squaredNorm() / ref;
}

}  // namespace stftpr
