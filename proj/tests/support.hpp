#pragma once

#include <cstdint>
#include <random>

#include <doctest.h>

#include "stftpr/bench.hpp"
#include "stftpr/error.hpp"
#include "stftpr/signal_core.hpp"

namespace testing {

inline stftpr::Signal random_signal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return stftpr::random_signal(n, rng);
}

inline Eigen::MatrixXcd random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
  return (a + a.adjoint()) / 2.0;
}

template <typename F>
stftpr::Errc error_code(F&& f) {
  try {
    f();
  } catch (const stftpr::Error& e) {
    return e.code();
  }
  FAIL("expected an stftpr::Error");
  return stftpr::Errc::kIo;
}

}  // namespace testing
