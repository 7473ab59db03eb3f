#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stftpr/stlift.hpp"

namespace stftpr {

struct OutputConfig {
  std::filesystem::path dir = "results";
  std::string stem;  // file name stem; defaults to the subcommand name
  bool heatmap = true;
  int heatmap_scale = 1;  // pixels per grid cell along each axis
};

struct ExperimentConfig {
  int n = 32;
  std::string window = "ones";  // "ones" or path to a re,im CSV holding w
  std::vector<int> shifts{1, 2, 4, 8, 12};
  std::vector<int> window_lengths{4, 8, 16};
  int window_length = 16;  // fixed W of the L-M grid
  std::vector<int> rows{4, 8, 16, 32};
  std::vector<std::array<int, 2>> curves{{2, 8}, {4, 16}};  // (L, W), M = 2W
  std::vector<double> snr_db{20, 30, 40, 50, 60};
  int trials = 20;
  std::uint64_t seed = 1;
  double threshold = 1e-4;
  int threads = 0;  // 0 = hardware concurrency
  SolverOptions solver;
  OutputConfig output;

  // Throws kConfig on out-of-range values.
  void validate() const;
  // Stable text form; the manifest hash is taken over it.
  std::string canonical() const;
};

// TOML subset: [experiment], [solver], [output]; scalar, string, boolean and
// (nested) array values; '#' comments. Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
// kIo when the file cannot be read, kConfig for bad content.
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a over canonical().
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace stftpr
