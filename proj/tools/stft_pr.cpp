#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stftpr/bench.hpp"
#include "stftpr/certify.hpp"
#include "stftpr/classic_recovery.hpp"
#include "stftpr/config.hpp"
#include "stftpr/error.hpp"
#include "stftpr/io.hpp"
#include "stftpr/signal_core.hpp"
#include "stftpr/stlift.hpp"

using namespace stftpr;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kConfig:
    case Errc::kInvalidArgument:
    case Errc::kPrecondition:
    case Errc::kDimension:
    case Errc::kInsufficientMeasurements:
      return kExitConfig;
    case Errc::kIo:
      return kExitIo;
    default:
      return kExitFailure;
  }
}

struct SolverFlags {
  std::optional<double> rho;
  std::optional<int> max_iters;
  std::optional<double> eps;
  std::optional<double> trace_weight;

  void attach(CLI::App* app) {
    app->add_option("--rho", rho, "ADMM penalty")->check(CLI::PositiveNumber);
    app->add_option("--max-iters", max_iters, "ADMM iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--eps", eps, "relative primal and dual tolerance")->check(CLI::PositiveNumber);
    app->add_option("--trace-weight", trace_weight, "trace penalty (default mean(Z)/N)")
        ->check(CLI::NonNegativeNumber);
  }

  void apply(SolverOptions& opts) const {
    if (rho) opts.rho = *rho;
    if (max_iters) opts.max_iters = *max_iters;
    if (eps) opts.eps_primal = opts.eps_dual = *eps;
    if (trace_weight) opts.trace_weight = *trace_weight;
  }
};

struct ExperimentFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string out_dir;
  SolverFlags solver;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "TOML file with [experiment], [solver], [output]");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--trials", trials, "trials per cell")->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app->add_option("--out-dir", out_dir, "output directory");
    solver.attach(app);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (threads) cfg.threads = *threads;
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    solver.apply(cfg.solver);
    cfg.validate();
    return cfg;
  }
};

StftParams make_params(int n, int w, int l, int m, const std::string& window_file) {
  if (window_file.empty()) return StftParams(n, w, l, m);
  Signal win = read_signal_csv(std::filesystem::path(window_file));
  if (win.size() != w) throw Error(Errc::kInvalidArgument, "window file length differs from -W");
  return StftParams(n, l, m, win.values());
}

void write_signal_to(const std::string& path, const Signal& x) {
  if (path.empty() || path == "-") write_signal_csv(std::cout, x);
  else write_signal_csv(std::filesystem::path(path), x);
}

void write_json_to(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::kIo, "write failed: " + path);
}

json to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_json(const CertificateChecks& c) {
  return {{"eigenvalues", to_json(c.eigenvalues)},
          {"kernel_residual", c.kernel_residual},
          {"numerical_rank", c.numerical_rank},
          {"min_eigenvalue_ratio", c.min_eigenvalue_ratio},
          {"kernel_ok", c.kernel_ok},
          {"rank_ok", c.rank_ok},
          {"psd_ok", c.psd_ok},
          {"passed", c.passed()}};
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  int n = 32, w = 16, l = 4, m = 16;
  std::string window, signal, signal_out, out;
  std::uint64_t seed = 1;
  std::optional<double> snr_db;
};

int run_simulate(const SimulateArgs& a) {
  const StftParams p = make_params(a.n, a.w, a.l, a.m, a.window);
  std::mt19937_64 rng(a.seed);
  Signal x;
  if (!a.signal.empty()) {
    x = read_signal_csv(std::filesystem::path(a.signal));
    if (x.size() != a.n) throw Error(Errc::kInvalidArgument, "signal length differs from -N");
  } else {
    x = random_signal(a.n, rng);
  }
  Eigen::MatrixXd z = magnitude_measurements(x, p).z();
  if (a.snr_db) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd noise(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
    noise *= z.norm() / (noise.norm() * std::pow(10.0, *a.snr_db / 20.0));
    z += noise;
  }
  const MagnitudeMeasurements zm(z);
  if (a.out.empty() || a.out == "-") write_measurements_csv(std::cout, p, zm);
  else write_measurements_csv(std::filesystem::path(a.out), p, zm);
  if (!a.signal_out.empty()) write_signal_csv(std::filesystem::path(a.signal_out), x);
  return kExitOk;
}

// --- recover ----------------------------------------------------------------

struct RecoverArgs {
  std::string measurements, method = "stlift", prefix_file, truth, out, window;
  int iters = 500;
  std::uint64_t seed = 1;
  SolverFlags solver;
};

int run_recover(const RecoverArgs& a) {
  const MeasurementFile file = read_measurements_csv(std::filesystem::path(a.measurements));
  const StftParams p = make_params(file.n, file.window_length, file.shift, file.rows, a.window);
  json report{{"method", a.method}, {"N", p.n()}, {"W", p.window_length()}, {"L", p.shift()}, {"M", p.rows()}};
  if (file.z.clamped()) report["clamped_negative_entries"] = true;

  Signal x;
  if (a.method == "stlift") {
    SolverOptions opts;
    a.solver.apply(opts);
    const RecoveryResult r = recover_signal(file.z, p, opts);
    x = r.x;
    report["iterations"] = r.report.iterations;
    report["converged"] = r.report.converged;
    report["primal_residual"] = r.report.primal_residual;
    report["dual_residual"] = r.report.dual_residual;
    report["eigenvalue_gap"] = r.report.eigenvalue_gap();
  } else if (a.method == "gl") {
    const GlResult r = griffin_lim(file.z, p, a.seed, a.iters);
    x = r.x;
    report["iterations"] = r.state.iterations;
    report["objective"] = r.state.objective;
    report["monotone"] = r.state.monotone;
    report["stalled"] = r.state.stalled;
  } else if (a.method == "sequential") {
    const ShortTimeAutocorrelation ac = autocorr_from_measurements(file.z, p);
    if (p.shift() == 1 && a.prefix_file.empty()) {
      x = sequential_recover_L1(ac, p);
    } else {
      if (a.prefix_file.empty()) throw Error(Errc::kInvalidArgument, "--prefix-file is required when L > 1");
      const Signal prefix = read_signal_csv(std::filesystem::path(a.prefix_file));
      std::vector<cplx> samples(prefix.values().data(), prefix.values().data() + prefix.size());
      x = sequential_recover(ac, p, samples);
    }
  } else {
    throw Error(Errc::kInvalidArgument, "unknown method '" + a.method + "'");
  }

  if (!a.truth.empty()) {
    const Signal x0 = read_signal_csv(std::filesystem::path(a.truth));
    if (x0.size() != x.size()) throw Error(Errc::kInvalidArgument, "truth length differs from N");
    report["nmse"] = dist_mod_phase(x0, x);
  }
  write_signal_to(a.out, x);
  std::cerr << report.dump() << '\n';
  return kExitOk;
}

// --- experiments ------------------------------------------------------------

void print_grid(const GridResult& g, const OutputFiles& files) {
  std::cout << g.kind << ": N=" << g.n << " seed=" << g.seed << " trials=" << g.trials << '\n';
  std::cout << std::setw(4) << g.row_axis;
  for (int c : g.col_values) std::cout << std::setw(8) << (g.col_axis + "=" + std::to_string(c));
  std::cout << '\n';
  for (std::size_t i = 0; i < g.row_values.size(); ++i) {
    std::cout << std::setw(4) << g.row_values[i];
    for (std::size_t j = 0; j < g.col_values.size(); ++j) {
      std::cout << std::setw(8) << std::fixed << std::setprecision(2) << g.at(i, j).success_probability;
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << files.csv.string() << '\n';
}

int run_experiment(const std::string& command, const ExperimentFlags& flags, const std::vector<std::string>& argv) {
  const ExperimentConfig cfg = flags.resolve();
  const RunInfo info{command, command, argv};
  if (command == "nmse-snr") {
    const NmseTable t = run_nmse_vs_snr(cfg);
    const OutputFiles files = emit_outputs(t, cfg, info);
    for (const auto& c : t.curves) {
      std::cout << "L=" << c.shift << " W=" << c.window_length << " M=" << c.rows << ':';
      for (std::size_t s = 0; s < c.snr_db.size(); ++s) {
        std::cout << ' ' << c.snr_db[s] << "dB->" << std::fixed << std::setprecision(1) << c.mean_nmse_db[s];
      }
      std::cout << " slope=" << std::setprecision(3) << c.slope << (c.monotone ? " monotone" : " NOT monotone")
                << '\n';
    }
    std::cout << "wrote " << files.csv.string() << '\n';
    return kExitOk;
  }
  const GridResult g = command == "phase-transition-lw" ? run_phase_transition_LW(cfg) : run_phase_transition_LM(cfg);
  print_grid(g, emit_outputs(g, cfg, info));
  return kExitOk;
}

// --- certify ----------------------------------------------------------------

struct CertifyArgs {
  int shift = 4;
  std::uint64_t seed = 1;
  std::string section, out;
  bool superres = false;
  int n = 16, w = 8, m = 8;
  bool counterexamples = false;
  int enumerate = 0;
};

template <typename F>
json guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return {{"error", e.what()}, {"passed", false}};
  }
}

int run_certify(const CertifyArgs& a) {
  std::mt19937_64 rng(a.seed);
  json report;
  Signal s0 = a.section.empty() ? random_signal(a.shift + 1, rng)
                                : read_signal_csv(std::filesystem::path(a.section));
  if (s0.size() != a.shift + 1) throw Error(Errc::kInvalidArgument, "section must have L + 1 samples");
  report["dual_certificate"] = guarded([&] {
    const DualCertificate d = build_dual_certificate(s0, a.shift);
    json j = to_json(d.checks);
    j["L"] = a.shift;
    return j;
  });

  if (a.superres) {
    report["superres"] = guarded([&] {
      const StftParams p(a.n, a.w, a.shift, a.m);
      const Signal x0 = random_signal(a.n, rng);
      const SuperresVector v = build_superres_vector(x0, p, a.m);
      const double worst = std::max({v.residual_unit, v.residual_annihilate, v.residual_spectrum});
      return json{{"N", a.n},
                  {"W", a.w},
                  {"L", a.shift},
                  {"M", a.m},
                  {"residual_unit", v.residual_unit},
                  {"residual_annihilate", v.residual_annihilate},
                  {"residual_spectrum", v.residual_spectrum},
                  {"symmetry_residual", v.symmetry_residual},
                  {"smallest_singular_ratio", v.smallest_singular_ratio},
                  {"equations", v.equations},
                  {"passed", worst <= 1e-8}};
    });
  }

  if (a.counterexamples) {
    json list = json::array();
    for (auto kind : {CounterexampleKind::kNonoverlapPhase, CounterexampleKind::kSparseShift,
                      CounterexampleKind::kSparseSign}) {
      list.push_back(guarded([&] {
        const Counterexample c = make_counterexample(kind);
        const double diff =
            (magnitude_measurements(c.x1, c.params).z() - magnitude_measurements(c.x2, c.params).z())
                .cwiseAbs()
                .maxCoeff();
        const double dist = dist_mod_phase(c.x1, c.x2);
        return json{{"kind", to_string(kind)},
                    {"measurement_difference", diff},
                    {"dist_mod_phase", dist},
                    {"dist_trivial_ambiguities", dist_trivial_ambiguities(c.x1, c.x2)},
                    {"passed", diff <= 1e-10 && dist > 1e-3}};
      }));
    }
    report["counterexamples"] = list;
  }

  if (a.enumerate > 0) {
    report["enumeration"] = guarded([&] {
      const Signal v = random_signal(a.enumerate, rng);
      const std::vector<Signal> out = enumerate_magnitude_equivalent(v);
      const Eigen::VectorXcd ref = aperiodic_autocorrelation(v);
      double worst = 0.0;
      for (const auto& s : out) worst = std::max(worst, (aperiodic_autocorrelation(s) - ref).cwiseAbs().maxCoeff());
      const std::size_t bound = std::size_t{1} << (a.enumerate - 1);
      return json{{"n", a.enumerate},
                  {"count", out.size()},
                  {"bound", bound},
                  {"autocorrelation_deviation", worst},
                  {"passed", out.size() <= bound && worst <= 1e-6}};
    });
  }
  write_json_to(a.out, report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STFT phase retrieval: simulation, recovery, experiments and certificates"};
  app.set_version_flag("--version", stftpr::version());
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "write STFT magnitude measurements of a signal");
  simulate->add_option("-N,--n", sim.n, "signal length")->check(CLI::PositiveNumber);
  simulate->add_option("-W,--window-length", sim.w, "window length")->check(CLI::PositiveNumber);
  simulate->add_option("-L,--shift", sim.l, "section shift")->check(CLI::PositiveNumber);
  simulate->add_option("-M,--rows", sim.m, "measured DFT rows 1..M")->check(CLI::PositiveNumber);
  simulate->add_option("--window", sim.window, "window file (re,im rows); all-ones when omitted");
  simulate->add_option("--signal", sim.signal, "signal file; random complex normal when omitted");
  simulate->add_option("--seed", sim.seed, "seed for the random signal and noise");
  simulate->add_option("--snr-db", sim.snr_db, "add Gaussian noise at this total-energy SNR");
  simulate->add_option("-o,--out", sim.out, "measurement file (stdout when omitted)");
  simulate->add_option("--signal-out", sim.signal_out, "also write the signal here");

  RecoverArgs rec;
  auto* recover = app.add_subcommand("recover", "recover a signal from a measurement file");
  recover->add_option("--measurements", rec.measurements, "measurement file")->required();
  recover->add_option("--method", rec.method, "stlift, gl or sequential")
      ->check(CLI::IsMember({"stlift", "gl", "sequential"}));
  recover->add_option("--iters", rec.iters, "Griffin-Lim iterations")->check(CLI::PositiveNumber);
  recover->add_option("--seed", rec.seed, "Griffin-Lim initialization seed");
  recover->add_option("--prefix-file", rec.prefix_file, "known leading samples x[0..floor(L/2)] (sequential)");
  recover->add_option("--window", rec.window, "window file; all-ones when omitted");
  recover->add_option("--truth", rec.truth, "ground-truth signal; reports NMSE");
  recover->add_option("-o,--out", rec.out, "output signal file (stdout when omitted)");
  rec.solver.attach(recover);

  std::vector<std::pair<CLI::App*, ExperimentFlags>> experiments;
  experiments.reserve(3);
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"phase-transition-lw", "success probability over (L, W) with M = 4L"},
           {"phase-transition-lm", "success probability over (L, M) at fixed W"},
           {"nmse-snr", "NMSE (dB) against SNR (dB) with M = 2W"}}) {
    experiments.emplace_back(app.add_subcommand(name, help), ExperimentFlags{});
  }
  for (auto& [sub, flags] : experiments) flags.attach(sub);

  CertifyArgs cert;
  auto* certify = app.add_subcommand("certify", "JSON report on dual certificates and ambiguities");
  certify->add_option("-L,--shift", cert.shift, "section shift")->check(CLI::PositiveNumber);
  certify->add_option("--seed", cert.seed, "seed for random sections and signals");
  certify->add_option("--section", cert.section, "section vector s0 (L + 1 samples); random when omitted");
  certify->add_flag("--superres", cert.superres, "also build a super-resolution vector");
  certify->add_option("-N,--n", cert.n, "signal length for --superres")->check(CLI::PositiveNumber);
  certify->add_option("-W,--window-length", cert.w, "window length for --superres")->check(CLI::PositiveNumber);
  certify->add_option("-M,--rows", cert.m, "measured rows for --superres")->check(CLI::PositiveNumber);
  certify->add_flag("--counterexamples", cert.counterexamples, "check the three counterexample kinds");
  certify->add_option("--enumerate", cert.enumerate, "enumerate magnitude-equivalent signals of this length")
      ->check(CLI::Range(2, 8));
  certify->add_option("-o,--out", cert.out, "report file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (*simulate) return run_simulate(sim);
    if (*recover) return run_recover(rec);
    if (*certify) return run_certify(cert);
    for (auto& [sub, flags] : experiments) {
      if (*sub) return run_experiment(sub->get_name(), flags, args);
    }
  } catch (const Error& e) {
    std::cerr << "stft-pr: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "stft-pr: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
