#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <cmath>
#include <sstream>

#include "stftpr/io.hpp"

using namespace stftpr;
using testing::error_code;
using testing::random_signal;

namespace {

const double kPi = std::acos(-1.0);

Eigen::VectorXcd direct_dft(const Eigen::VectorXcd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) out[m] += u[k] * std::polar(1.0, -2.0 * kPi * m * k / n);
  return out;
}

}  // namespace

TEST_CASE("section count") {
  CHECK(StftParams(7, 5, 4, 7).sections() == 3);
  CHECK(StftParams(32, 16, 8, 32).sections() == 6);
  CHECK(stft_forward(random_signal(7, 1), StftParams(7, 5, 4, 7)).cols() == 3);
}

TEST_CASE("parameter validation") {
  CHECK(error_code([] { StftParams(4, 5, 1, 4); }) == Errc::kInvalidArgument);
  CHECK(error_code([] { StftParams(4, 2, 0, 4); }) == Errc::kInvalidArgument);
  CHECK(error_code([] { StftParams(4, 2, 1, 5); }) == Errc::kInvalidArgument);
  CHECK(error_code([] { stft_forward(random_signal(5, 1), StftParams(4, 2, 1, 4)); }) == Errc::kDimension);
}

TEST_CASE("regime flags") {
  const StftParams p(32, 16, 4, 16);
  CHECK(p.overlap());
  CHECK(p.conjecture_regime());
  CHECK_FALSE(p.autocorr_regime());
  CHECK(StftParams(32, 8, 2, 16).autocorr_regime());
  CHECK_FALSE(StftParams(8, 2, 2, 8).overlap());
  Eigen::VectorXcd w(3);
  w << 1, 0, 1;
  CHECK_FALSE(StftParams(8, 1, 8, w).window_non_vanishing());
}

TEST_CASE("non-vanishing test is exact") {
  CHECK(Signal{1, {0, 1e-300}}.is_non_vanishing());
  CHECK_FALSE(Signal{1, 0}.is_non_vanishing());
}

TEST_CASE("zero signal gives zero STFT") {
  CHECK(stft_forward(Signal::zeros(8), StftParams(8, 4, 2, 8)).norm() == 0.0);
}

TEST_CASE("impulse window columns are shifted impulse DFTs") {
  const Signal x = random_signal(4, 2);
  const StftParams p(4, 1, 1, 4);
  const Eigen::MatrixXcd y = stft_forward(x, p);
  for (int r = 0; r < 4; ++r) {
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(4);
    u[r] = x[r];
    CHECK((y.col(r) - direct_dft(u)).norm() <= 1e-12);
  }
}

TEST_CASE("STFT matches direct windowed DFT") {
  const Signal x = random_signal(9, 3);
  Eigen::VectorXcd w(4);
  w << cplx(1, 0.5), 2, cplx(0, -1), 0.3;
  const StftParams p(9, 3, 9, w);
  const Eigen::MatrixXcd y = stft_forward(x, p);
  for (int r = 0; r < p.sections(); ++r) {
    Eigen::VectorXcd u(9);
    for (int n = 0; n < 9; ++n) u[n] = x[n] * p.section_weight(r, n);
    CHECK((y.col(r) - direct_dft(u)).norm() <= 1e-11);
  }
}

TEST_CASE("non-overlapping sign flip is invisible") {
  const StftParams p(3, 2, 2, 3);
  const auto z1 = magnitude_measurements(Signal{1, 2, 3}, p).z();
  const auto z2 = magnitude_measurements(Signal{1, -2, -3}, p).z();
  CHECK((z1 - z2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("global phase invariance") {
  const Signal x = random_signal(16, 4);
  const StftParams p(16, 8, 2, 12);
  const Signal y(x.values() * std::polar(1.0, 0.7));
  CHECK((magnitude_measurements(x, p).z() - magnitude_measurements(y, p).z()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("measured rows skip DC") {
  const Signal x = random_signal(8, 5);
  const StftParams p(8, 4, 2, 3);
  const Eigen::MatrixXcd y = stft_forward(x, p);
  const auto z = magnitude_measurements(x, p);
  CHECK(z.rows() == 3);
  for (int r = 0; r < p.sections(); ++r)
    for (int i = 0; i < 3; ++i) CHECK(std::abs(z(i, r) - std::norm(y(i + 1, r))) <= 1e-12);
}

TEST_CASE("Parseval per section") {
  const Signal x = random_signal(12, 6);
  const StftParams p(12, 5, 3, 12);
  const Eigen::MatrixXcd y = stft_forward(x, p);
  for (int r = 0; r < p.sections(); ++r) {
    double energy = 0.0;
    for (int n = 0; n < 12; ++n) energy += std::norm(x[n] * p.section_weight(r, n));
    CHECK(std::abs(y.col(r).squaredNorm() / 12.0 - energy) <= 1e-10 * std::max(1.0, energy));
  }
}

TEST_CASE("autocorrelation: energy, boundary and Fourier pair") {
  const Signal x = random_signal(8, 7);
  const StftParams p(8, 3, 2, 8);
  const auto a = short_time_autocorrelation(x, p);
  const Eigen::MatrixXcd y = stft_forward(x, p);
  const Dft dft(8);
  for (int r = 0; r < p.sections(); ++r) {
    double energy = 0.0;
    for (int n = 0; n < 8; ++n) energy += std::norm(x[n] * p.section_weight(r, n));
    CHECK(std::abs(a(0, r).real() - energy) <= 1e-12);
    CHECK(a(0, r).imag() == 0.0);
    // a[m] = sum u[n] conj(u[n+m]) is the conjugate of the inverse DFT of |Y|^2.
    const Eigen::VectorXcd col = dft.inverse(y.col(r).cwiseAbs2().cast<cplx>()).conjugate();
    CHECK((col - a.a().col(r)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int m = 1; m < 8; ++m) CHECK(std::abs(a(m, r) - std::conj(a(8 - m, r))) <= 1e-10);
  }
  CHECK(std::abs(a(0, 0) - std::norm(x[0])) <= 1e-12);
}

TEST_CASE("autocorrelation from measurements") {
  SUBCASE("round trip on random instances") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
      const int w = 1 + static_cast<int>(rng() % 8);
      const int n = std::max(2 * w - 1, 8 + static_cast<int>(rng() % 25));
      const int nn = std::min(n, 32);
      if (2 * w - 1 > nn) continue;
      const int l = 1 + static_cast<int>(rng() % w);
      const int m = 2 * w - 1 + static_cast<int>(rng() % (nn - 2 * w + 2));
      const StftParams p(nn, w, l, m);
      const Signal x = random_signal(nn, 100 + t);
      const auto got = autocorr_from_measurements(magnitude_measurements(x, p), p);
      const auto want = short_time_autocorrelation(x, p);
      CHECK((got.a() - want.a()).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("unit window reduces to sample energies") {
    const StftParams p(3, 1, 1, 1);
    const auto a = autocorr_from_measurements(magnitude_measurements(Signal{1, 2, 3}, p), p);
    CHECK(std::abs(a(0, 0) - 1.0) <= 1e-12);
    CHECK(std::abs(a(0, 1) - 4.0) <= 1e-12);
    CHECK(std::abs(a(0, 2) - 9.0) <= 1e-12);
    CHECK(a.a().bottomRows(2).norm() == 0.0);
  }
  SUBCASE("too few rows") {
    const StftParams p(16, 4, 2, 6);
    CHECK(error_code([&] { autocorr_from_measurements(magnitude_measurements(random_signal(16, 1), p), p); }) ==
          Errc::kInsufficientMeasurements);
  }
}

TEST_CASE("windowed sections") {
  const Signal x = random_signal(7, 8);
  const StftParams p(7, 5, 4, 7);
  const auto s0 = windowed_section(x, p, 0);
  CHECK(s0.support.first == 0);
  CHECK(s0.support.last == 0);
  CHECK(std::abs(s0.values[0] - x[0]) <= 1e-15);
  const auto s1 = windowed_section(x, p, 1);
  CHECK(s1.support.first == 0);
  CHECK(s1.support.last == 4);
  for (int n = 0; n <= 4; ++n) CHECK(s1.values[n] == x[n]);
  for (int n = 5; n < 7; ++n) CHECK(s1.values[n] == cplx{});
  CHECK(error_code([&] { windowed_section(x, p, 3); }) == Errc::kInvalidArgument);
}

TEST_CASE("distance modulo global phase") {
  const Signal x = random_signal(6, 9);
  CHECK(dist_mod_phase(x, Signal(x.values() * std::polar(1.0, 1.3))) <= 1e-28);
  CHECK(dist_mod_phase(x, Signal::zeros(6)) == doctest::Approx(1.0));
  // Orthogonal pair: ||x0||^2 + ||xhat||^2 over ||x0||^2.
  CHECK(dist_mod_phase(Signal{1, 0}, Signal{0, 1}) == doctest::Approx(2.0));
  CHECK(error_code([] { dist_mod_phase(Signal::zeros(2), Signal{1, 1}); }) == Errc::kUndefinedReference);

  // Closed form against a fine phase scan.
  const Signal y = random_signal(6, 10);
  double best = 1e300;
  for (int k = 0; k < 200000; ++k) {
    const cplx c = std::polar(1.0, 2.0 * kPi * k / 200000.0);
    best = std::min(best, (x.values() - c * y.values()).squaredNorm() / x.values().squaredNorm());
  }
  CHECK(std::abs(dist_mod_phase(x, y) - best) <= 1e-8);

  const Signal xu(x.values() / x.norm());
  const Signal yu(y.values() / y.norm());
  CHECK(std::abs(dist_mod_phase(xu, yu) - dist_mod_phase(yu, xu)) <= 1e-12);
}

TEST_CASE("signal CSV") {
  const Signal x{{1.5, -2}, {0, 1e-17}, 3};
  std::stringstream ss;
  write_signal_csv(ss, x);
  const Signal back = read_signal_csv(ss);
  CHECK(back.values() == x.values());

  std::istringstream bad("1,2\nnan,0\n");
  CHECK(error_code([&] { read_signal_csv(bad); }) == Errc::kIo);
  std::istringstream inf("1,inf\n");
  CHECK(error_code([&] { read_signal_csv(inf); }) == Errc::kIo);
  std::istringstream one("1\n");
  CHECK(error_code([&] { read_signal_csv(one); }) == Errc::kIo);
}

TEST_CASE("measurement CSV") {
  const StftParams p(8, 4, 2, 5);
  const auto z = magnitude_measurements(random_signal(8, 12), p);
  std::stringstream ss;
  write_measurements_csv(ss, p, z);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "# stft-z N=8 W=4 L=2 M=5");
  ss.seekg(0);
  const MeasurementFile f = read_measurements_csv(ss);
  CHECK(f.n == 8);
  CHECK(f.window_length == 4);
  CHECK(f.shift == 2);
  CHECK(f.rows == 5);
  CHECK(f.z.z() == z.z());
  CHECK_FALSE(f.z.clamped());

  std::istringstream neg("# stft-z N=2 W=1 L=1 M=1\n-0.5,1\n");
  const MeasurementFile g = read_measurements_csv(neg);
  CHECK(g.z.clamped());
  CHECK(g.z(0, 0) == 0.0);

  std::istringstream noheader("1,2\n");
  CHECK(error_code([&] { read_measurements_csv(noheader); }) == Errc::kIo);
}
