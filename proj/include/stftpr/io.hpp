#pragma once

#include <filesystem>
#include <iosfwd>

#include "stftpr/signal_core.hpp"

namespace stftpr {

// Signal files: one `re,im` row per sample, no header. NaN/Inf are rejected.
Signal read_signal_csv(std::istream& in);
Signal read_signal_csv(const std::filesystem::path& path);
void write_signal_csv(std::ostream& out, const Signal& x);
void write_signal_csv(const std::filesystem::path& path, const Signal& x);

struct MeasurementFile {
  int n = 0;
  int window_length = 0;
  int shift = 0;
  int rows = 0;
  MagnitudeMeasurements z;
};

// Measurement files: `# stft-z N=<N> W=<W> L=<L> M=<M>` followed by M rows of
// R comma-separated values. Negative entries are clamped on read.
MeasurementFile read_measurements_csv(std::istream& in);
MeasurementFile read_measurements_csv(const std::filesystem::path& path);
void write_measurements_csv(std::ostream& out, const StftParams& p, const MagnitudeMeasurements& z);
void write_measurements_csv(const std::filesystem::path& path, const StftParams& p,
                            const MagnitudeMeasurements& z);

}  // namespace stftpr
