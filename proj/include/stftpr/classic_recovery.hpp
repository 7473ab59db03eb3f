#pragma once

// Recovery without the SDP: Griffin-Lim alternating projections and the
// exact incremental recovery from the short-time autocorrelation.

#include <cstdint>
#include <vector>

#include "stftpr/linalg.hpp"
#include "stftpr/signal_core.hpp"

namespace stftpr {

struct GlState {
  Signal x;
  int iterations = 0;
  // sum over measured rows of (Z - |Y|^2)^2
  double objective = 0.0;
  std::vector<double> history;  // objective of the initial point, then after each iteration
  // Largest (f_k - f_{k-1}) / max(f_{k-1}, floor) seen, 0 when never increasing.
  double max_relative_increase = 0.0;
  bool monotone = true;  // max_relative_increase <= 1e-9
  int damped_steps = 0;   // iterations where the safeguard shortened the step
  bool stalled = false;   // no non-increasing step found; iteration stopped early
  bool window_vanishing = false;
};

struct GlResult {
  Signal x;
  GlState state;
};

double gl_objective(const Signal& x, const MagnitudeMeasurements& zm, const StftParams& p);

// Each iteration replaces the magnitudes of the measured rows, inverts each
// section and merges by windowed least squares. The intensity objective is
// not guaranteed to decrease under that map once sections are coupled, so by
// default a rejected step is retried on the segment towards it with halving
// step length. `safeguard = false` gives the plain iteration.
GlResult griffin_lim(const MagnitudeMeasurements& zm, const StftParams& p, const Signal& init, int iters,
                     bool safeguard = true);
// Random start: complex normal entries, unit variance.
GlResult griffin_lim(const MagnitudeMeasurements& zm, const StftParams& p, std::uint64_t seed, int iters,
                     bool safeguard = true);

// L = 1 only. Global phase: x[0] real positive.
Signal sequential_recover_L1(const ShortTimeAutocorrelation& a, const StftParams& p);

// Requires 2L <= W <= N/2 and the true leading samples x[0..floor(L/2)].
// Returns the band of x x^* of half-width W - L.
BandSamples sequential_band_fill(const ShortTimeAutocorrelation& a, const StftParams& p,
                                 const std::vector<cplx>& prefix);

// Full pipeline: band fill, completion, rank-one extraction.
Signal sequential_recover(const ShortTimeAutocorrelation& a, const StftParams& p,
                          const std::vector<cplx>& prefix);

}  // namespace stftpr
