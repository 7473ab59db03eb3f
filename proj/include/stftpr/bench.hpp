#pragma once

// Monte Carlo harness: success-probability grids over (L, W) and (L, M),
// NMSE-versus-SNR sweeps, and their CSV / PGM / JSON outputs.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "stftpr/config.hpp"
#include "stftpr/signal_core.hpp"

namespace stftpr {

// Library version string.
const char* version();

// splitmix64-style mix of (seed, a, b, c); the same inputs always give the
// same stream regardless of the order cells or trials are visited in.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

// i.i.d. standard complex normal entries (real, imaginary parts N(0, 1/2)).
Signal random_signal(int n, std::mt19937_64& rng);

// Window from the config: all-ones of length w, or the file contents
// (whose length must then equal w).
Eigen::VectorXcd make_window(const ExperimentConfig& cfg, int w);

struct CellResult {
  int row_value = 0;  // L
  int col_value = 0;  // W or M
  int window_length = 0;
  int rows = 0;  // M actually used
  int trials = 0;
  bool precondition_failure = false;  // L >= W or M > N: not run, probability 0
  double success_probability = 0.0;
  double mean_nmse = 0.0;
  double mean_iterations = 0.0;
  int solver_errors = 0;
  int not_converged = 0;
  double wall_seconds = 0.0;
  std::vector<double> nmse;  // per trial
};

struct GridResult {
  std::string kind;      // "phase-transition-lw" or "phase-transition-lm"
  std::string row_axis;  // "L"
  std::string col_axis;  // "W" or "M"
  std::vector<int> row_values;
  std::vector<int> col_values;
  std::vector<CellResult> cells;  // row-major
  int n = 0;
  std::uint64_t seed = 0;
  int trials = 0;
  double threshold = 0.0;
  double wall_seconds = 0.0;

  const CellResult& at(std::size_t row, std::size_t col) const { return cells[row * col_values.size() + col]; }
  const CellResult* find(int row_value, int col_value) const;
};

// Cells (L, W) with M = min(4L, N).
GridResult run_phase_transition_LW(const ExperimentConfig& cfg);
// Cells (L, M) with W = cfg.window_length.
GridResult run_phase_transition_LM(const ExperimentConfig& cfg);

struct NmseCurve {
  int shift = 0;
  int window_length = 0;
  int rows = 0;
  std::vector<double> snr_db;
  std::vector<double> mean_nmse_db;  // mean over trials of 10 log10(NMSE)
  double noiseless_nmse_db = 0.0;
  double slope = 0.0;  // least-squares slope of mean_nmse_db against snr_db
  bool monotone = false;  // strictly decreasing in SNR
  int solver_errors = 0;
};

struct NmseTable {
  std::vector<NmseCurve> curves;
  int n = 0;
  std::uint64_t seed = 0;
  int trials = 0;
  double wall_seconds = 0.0;
};

// Real Gaussian noise on Z scaled so ||Z||^2 / ||noise||^2 hits the target
// SNR; eta per section is the realized noise norm.
NmseTable run_nmse_vs_snr(const ExperimentConfig& cfg);

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

struct OutputFiles {
  std::filesystem::path csv;
  std::filesystem::path heatmap;  // empty when not written
  std::filesystem::path manifest;
};

struct RunInfo {
  std::string command;
  std::string stem;
  std::vector<std::string> argv;
};

OutputFiles emit_outputs(const GridResult& grid, const ExperimentConfig& cfg, const RunInfo& info);
OutputFiles emit_outputs(const NmseTable& table, const ExperimentConfig& cfg, const RunInfo& info);

// Building blocks, exposed for tests.
void write_grid_csv(std::ostream& out, const GridResult& grid);
// Probabilities laid out rows x cols from a CSV written by write_grid_csv.
std::vector<std::vector<double>> read_grid_csv(std::istream& in);
// Binary P5; pixel = round(255 p), L downwards, W or M rightwards.
void write_pgm(std::ostream& out, const std::vector<std::vector<double>>& probabilities, int scale = 1);
std::vector<std::vector<double>> probability_matrix(const GridResult& grid);

}  // namespace stftpr
