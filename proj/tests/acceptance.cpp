// End-to-end acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (all when none given)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stftpr/bench.hpp"
#include "stftpr/certify.hpp"
#include "stftpr/classic_recovery.hpp"
#include "stftpr/config.hpp"
#include "stftpr/error.hpp"
#include "stftpr/signal_core.hpp"
#include "stftpr/stlift.hpp"

using namespace stftpr;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

Signal draw(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_signal(n, rng);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

void print_grid(const GridResult& g) {
  std::cout << "    " << g.row_axis << '\\' << g.col_axis;
  for (int c : g.col_values) std::cout << '\t' << c;
  std::cout << '\n';
  for (std::size_t i = 0; i < g.row_values.size(); ++i) {
    std::cout << "    " << g.row_values[i];
    for (std::size_t j = 0; j < g.col_values.size(); ++j) std::cout << '\t' << fmt(g.at(i, j).success_probability);
    std::cout << '\n';
  }
}

// (1) L-W phase transition, N = 32, M = 4L.
Verdict criterion1() {
  Verdict v;
  ExperimentConfig cfg;
  cfg.shifts = {1, 2, 4, 8, 12};
  cfg.window_lengths = {4, 8, 16};
  const GridResult g = run_phase_transition_LW(cfg);
  print_grid(g);
  for (const auto& c : g.cells) {
    const std::string name = "L=" + std::to_string(c.row_value) + ",W=" + std::to_string(c.col_value);
    if (2 * c.row_value <= c.col_value) v.require(c.success_probability >= 0.9, name + " p=" + fmt(c.success_probability));
    else v.require(c.success_probability <= 0.2, name + " p=" + fmt(c.success_probability));
  }
  v.detail << " cells=" << g.cells.size() << " wall=" << fmt(g.wall_seconds) << "s";
  return v;
}

// (2) Super-resolution cells of the L-M grid at W = 16.
Verdict criterion2() {
  Verdict v;
  for (auto [l, m] : {std::pair{4, 16}, std::pair{2, 8}}) {
    ExperimentConfig cfg;
    cfg.window_length = 16;
    cfg.shifts = {l};
    cfg.rows = {m};
    const GridResult g = run_phase_transition_LM(cfg);
    const double p = g.cells.front().success_probability;
    v.detail << " (L=" << l << ",M=" << m << ") p=" << fmt(p);
    v.require(p >= 0.9, "L=" + std::to_string(l) + " below 0.9");
  }
  return v;
}

// (3) L = 1, M = 4: sequential recovery and the convex program agree.
Verdict criterion3() {
  Verdict v;
  double worst_seq = 0.0, worst_sdp = 0.0, worst_agree = 0.0;
  const int ns[] = {8, 16, 32};
  const int ws[] = {2, 4, 8};
  // M = 4 is the smallest row count; some instances converge sublinearly and
  // need far more than the default iteration cap to reach the tolerance.
  SolverOptions opts;
  opts.max_iters = 200000;
  for (int t = 0; t < 50; ++t) {
    const int w = ws[(t / 3) % 3];
    // The L = 1 recursion needs W < N; N = W wraps the window around the circle.
    const int n = std::max(ns[t % 3], 2 * w);
    const StftParams p(n, w, 1, 4);
    const Signal x = draw(n, 3000 + static_cast<std::uint64_t>(t));
    const Signal seq = sequential_recover_L1(short_time_autocorrelation(x, p), p);
    const Signal sdp = recover_signal(magnitude_measurements(x, p), p, opts).x;
    worst_seq = std::max(worst_seq, dist_mod_phase(x, seq));
    worst_sdp = std::max(worst_sdp, dist_mod_phase(x, sdp));
    worst_agree = std::max(worst_agree, dist_mod_phase(seq, sdp));
  }
  v.require(worst_seq <= 1e-8, "sequential");
  v.require(worst_sdp <= 1e-4, "convex");
  v.require(worst_agree <= 1e-4, "agreement");
  v.detail << " worst sequential=" << fmt(worst_seq) << " convex=" << fmt(worst_sdp) << " agreement=" << fmt(worst_agree);
  return v;
}

// (4) Band fill plus rank-one completion with a known prefix.
Verdict criterion4() {
  Verdict v;
  std::mt19937_64 rng(4000);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = (t % 2) ? 32 : 16;
    const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n / 4));
    const int w = 2 * l + static_cast<int>(rng() % static_cast<std::uint64_t>(n / 2 - 2 * l + 1));
    const StftParams p(n, w, l, n);
    const Signal x = draw(n, 4100 + static_cast<std::uint64_t>(t));
    std::vector<cplx> prefix(x.values().data(), x.values().data() + l / 2 + 1);
    try {
      const Signal out = sequential_recover(short_time_autocorrelation(x, p), p, prefix);
      worst = std::max(worst, dist_mod_phase(x, out));
    } catch (const Error& e) {
      v.require(false, "N=" + std::to_string(n) + ",W=" + std::to_string(w) + ",L=" + std::to_string(l) + ": " +
                           e.what());
    }
  }
  v.require(worst <= 1e-8, "worst " + fmt(worst));
  v.detail << " worst=" << fmt(worst);
  return v;
}

// (5) Noisy sweep: monotone NMSE with slope near -1, and the noiseless limit.
Verdict criterion5() {
  Verdict v;
  ExperimentConfig cfg;
  cfg.curves = {{2, 8}, {4, 16}};
  cfg.snr_db = {20, 30, 40, 50, 60};
  const NmseTable t = run_nmse_vs_snr(cfg);
  for (const auto& c : t.curves) {
    const std::string name = "L=" + std::to_string(c.shift) + ",W=" + std::to_string(c.window_length);
    std::cout << "    " << name << ",M=" << c.rows << ':';
    for (std::size_t s = 0; s < c.snr_db.size(); ++s) std::cout << ' ' << c.snr_db[s] << "->" << fmt(c.mean_nmse_db[s]);
    std::cout << " noiseless=" << fmt(c.noiseless_nmse_db) << " slope=" << fmt(c.slope) << '\n';
    v.require(c.monotone, name + " not monotone");
    v.require(c.slope >= -1.3 && c.slope <= -0.7, name + " slope " + fmt(c.slope));
    v.require(c.noiseless_nmse_db <= -40.0, name + " noiseless " + fmt(c.noiseless_nmse_db) + " dB");
    v.require(c.solver_errors == 0, name + " solver errors");
    v.detail << ' ' << name << " slope=" << fmt(c.slope);
  }
  return v;
}

// (6) Griffin-Lim objective is non-increasing.
Verdict criterion6() {
  Verdict v;
  std::mt19937_64 rng(6000);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 8 << (t % 3);
    const int w = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(n, 16) - 1));
    const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(w - 1));
    const int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const StftParams p(n, w, l, m);
    const Signal x = draw(n, 6100 + static_cast<std::uint64_t>(t));
    const GlResult r = griffin_lim(magnitude_measurements(x, p), p, 6200 + static_cast<std::uint64_t>(t), 200);
    worst = std::max(worst, r.state.max_relative_increase);
  }
  v.require(worst <= 1e-9, "relative increase " + fmt(worst));
  v.detail << " worst relative increase=" << fmt(worst);
  return v;
}

// (7) Dual certificates and super-resolution vectors.
Verdict criterion7() {
  Verdict v;
  std::mt19937_64 rng(7000);
  int passed = 0;
  for (int t = 0; t < 100; ++t) {
    const int l = 1 + t % 4;
    const Signal s0 = draw(l + 1, 7100 + static_cast<std::uint64_t>(t));
    try {
      if (build_dual_certificate(s0, l).checks.passed()) ++passed;
    } catch (const Error& e) {
      v.detail << " [L=" << l << " draw " << t << ": " << e.what() << ']';
    }
  }
  v.require(passed == 100, "certificates passed " + std::to_string(passed) + "/100");

  double worst = 0.0;
  int built = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = (t % 2) ? 32 : 16;
    const int l = 1 << (t % 3);
    const int half = (l + 1) / 2;
    const int m = 4 * half + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 4 * half + 1));
    const StftParams p(n, std::min(n, 2 * l), l, m);
    try {
      const SuperresVector s = build_superres_vector(draw(n, 7200 + static_cast<std::uint64_t>(t)), p, m);
      worst = std::max({worst, s.residual_unit, s.residual_annihilate, s.residual_spectrum});
      ++built;
    } catch (const Error& e) {
      v.detail << " [superres N=" << n << ",L=" << l << ",M=" << m << ": " << e.what() << ']';
    }
  }
  v.require(built == 20, "superres built " + std::to_string(built) + "/20");
  v.require(worst <= 1e-8, "superres residual " + fmt(worst));
  v.detail << " certificates=" << passed << "/100 superres=" << built << "/20 worst residual=" << fmt(worst);
  return v;
}

// (8) Counterexamples and magnitude-equivalent enumeration.
Verdict criterion8() {
  Verdict v;
  for (auto kind : {CounterexampleKind::kNonoverlapPhase, CounterexampleKind::kSparseShift,
                    CounterexampleKind::kSparseSign}) {
    const Counterexample c = make_counterexample(kind);
    const double diff =
        (magnitude_measurements(c.x1, c.params).z() - magnitude_measurements(c.x2, c.params).z()).cwiseAbs().maxCoeff();
    const double dist = dist_mod_phase(c.x1, c.x2);
    v.require(diff <= 1e-10, std::string(to_string(kind)) + " measurements differ by " + fmt(diff));
    v.require(dist > 1e-3, std::string(to_string(kind)) + " equal up to phase");
    if (kind != CounterexampleKind::kSparseShift) {
      v.require(dist_trivial_ambiguities(c.x1, c.x2) > 1e-3, std::string(to_string(kind)) + " trivially equivalent");
    }
    v.detail << ' ' << to_string(kind) << " diff=" << fmt(diff) << " dist=" << fmt(dist);
  }
  double worst = 0.0;
  bool bounded = true;
  for (int n = 2; n <= 8; ++n) {
    for (int t = 0; t < 3; ++t) {
      const Signal s = draw(n, 8000 + 10 * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(t));
      const auto out = enumerate_magnitude_equivalent(s);
      bounded = bounded && out.size() <= (std::size_t{1} << (n - 1));
      const Eigen::VectorXcd ref = aperiodic_autocorrelation(s);
      for (const auto& e : out) worst = std::max(worst, (aperiodic_autocorrelation(e) - ref).cwiseAbs().maxCoeff());
    }
  }
  v.require(bounded, "enumeration count bound");
  v.require(worst <= 1e-6, "autocorrelation deviation " + fmt(worst));
  v.detail << " enumeration worst=" << fmt(worst);
  return v;
}

// (9) Parseval, global-phase invariance and the autocorrelation round trip.
Verdict criterion9() {
  Verdict v;
  std::mt19937_64 rng(9000);
  double parseval = 0.0, phase = 0.0, roundtrip = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = 4 + static_cast<int>(rng() % 29);
    const int w = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>((n + 1) / 2));
    const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(w));
    const int m = 2 * w - 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 2 * w + 2));
    const StftParams p(n, w, l, m);
    const Signal x = draw(n, 9100 + static_cast<std::uint64_t>(t));

    const Eigen::MatrixXcd y = stft_forward(x, p);
    for (int r = 0; r < p.sections(); ++r) {
      double energy = 0.0;
      for (int k = 0; k < n; ++k) energy += std::norm(x[k] * p.section_weight(r, k));
      parseval = std::max(parseval, std::abs(y.col(r).squaredNorm() / n - energy) / std::max(1.0, energy));
    }

    const double phi = 2.0 * std::acos(-1.0) * static_cast<double>(rng() % 1000) / 1000.0;
    const Eigen::MatrixXd z = magnitude_measurements(x, p).z();
    const Eigen::MatrixXd zp = magnitude_measurements(Signal(x.values() * std::polar(1.0, phi)), p).z();
    phase = std::max(phase, (z - zp).cwiseAbs().maxCoeff() / std::max(1.0, z.cwiseAbs().maxCoeff()));

    const auto a = autocorr_from_measurements(MagnitudeMeasurements(z), p);
    roundtrip = std::max(roundtrip, (a.a() - short_time_autocorrelation(x, p).a()).cwiseAbs().maxCoeff());
  }
  v.require(parseval <= 1e-10, "Parseval " + fmt(parseval));
  v.require(phase <= 1e-12, "phase invariance " + fmt(phase));
  v.require(roundtrip <= 1e-8, "round trip " + fmt(roundtrip));
  v.detail << " Parseval=" << fmt(parseval) << " phase=" << fmt(phase) << " round trip=" << fmt(roundtrip);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << v.detail.str() << " (" << fmt(secs)
              << " s)" << std::endl;
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
