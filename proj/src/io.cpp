#include "stftpr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "stftpr/error.hpp"

namespace stftpr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_finite(const std::string& token, int line_no) {
  const std::string t = trim(token);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(Errc::kIo, "line " + std::to_string(line_no) + ": cannot parse '" + t + "'");
  }
  if (!std::isfinite(v)) {
    throw Error(Errc::kIo, "line " + std::to_string(line_no) + ": non-finite value");
  }
  return v;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

Signal read_signal_csv(std::istream& in) {
  std::vector<cplx> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != 2) {
      throw Error(Errc::kIo, "line " + std::to_string(line_no) + ": expected 're,im'");
    }
    samples.emplace_back(parse_finite(cells[0], line_no), parse_finite(cells[1], line_no));
  }
  if (samples.empty()) throw Error(Errc::kIo, "signal file is empty");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) v[static_cast<Eigen::Index>(i)] = samples[i];
  return Signal(std::move(v));
}

Signal read_signal_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_signal_csv(in);
}

void write_signal_csv(std::ostream& out, const Signal& x) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < x.size(); ++i) out << x[i].real() << ',' << x[i].imag() << '\n';
}

void write_signal_csv(const std::filesystem::path& path, const Signal& x) {
  auto out = open_out(path);
  write_signal_csv(out, x);
  if (!out) throw Error(Errc::kIo, "write failed: " + path.string());
}

MeasurementFile read_measurements_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::kIo, "measurement file is empty");
  static const std::regex header(R"(^#\s*stft-z\s+N=(\d+)\s+W=(\d+)\s+L=(\d+)\s+M=(\d+)\s*$)");
  std::smatch match;
  const std::string first = trim(line);
  if (!std::regex_match(first, match, header)) {
    throw Error(Errc::kIo, "missing '# stft-z N=.. W=.. L=.. M=..' header");
  }
  MeasurementFile file;
  file.n = std::stoi(match[1]);
  file.window_length = std::stoi(match[2]);
  file.shift = std::stoi(match[3]);
  file.rows = std::stoi(match[4]);

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split_commas(line)) row.push_back(parse_finite(cell, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::kIo, "line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != file.rows) {
    throw Error(Errc::kIo, "expected " + std::to_string(file.rows) + " rows, found " +
                               std::to_string(rows.size()));
  }
  Eigen::MatrixXd z(file.rows, rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (int i = 0; i < file.rows; ++i) {
    for (Eigen::Index r = 0; r < z.cols(); ++r) z(i, r) = rows[i][static_cast<std::size_t>(r)];
  }
  file.z = MagnitudeMeasurements::ingest(std::move(z));
  return file;
}

MeasurementFile read_measurements_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_measurements_csv(in);
}

void write_measurements_csv(std::ostream& out, const StftParams& p, const MagnitudeMeasurements& z) {
  out << "# stft-z N=" << p.n() << " W=" << p.window_length() << " L=" << p.shift()
      << " M=" << p.rows() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < z.rows(); ++i) {
    for (int r = 0; r < z.sections(); ++r) {
      if (r) out << ',';
      out << z(i, r);
    }
    out << '\n';
  }
}

void write_measurements_csv(const std::filesystem::path& path, const StftParams& p,
                            const MagnitudeMeasurements& z) {
  auto out = open_out(path);
  write_measurements_csv(out, p, z);
  if (!out) throw Error(Errc::kIo, "write failed: " + path.string());
}

}  // namespace stftpr
