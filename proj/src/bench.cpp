#include "stftpr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <boost/version.hpp>
#include <json.hpp>

#include "stftpr/error.hpp"
#include "stftpr/io.hpp"
#include "stftpr/stlift.hpp"

namespace stftpr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs task(i) for i in [0, count) on up to `threads` workers. Each task
// writes only its own result slot, so the outcome is order-independent.
template <typename Task>
void parallel_for(int count, int threads, Task&& task) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

double to_db(double ratio) { return 10.0 * std::log10(std::max(ratio, 1e-30)); }

struct TrialOutcome {
  double nmse = 1.0;
  int iterations = 0;
  bool converged = false;
  bool error = false;
  double seconds = 0.0;
};

struct CellPlan {
  CellResult result;
  std::optional<StftParams> params;
  std::shared_ptr<const AffineMeasurementOperator> op;
  std::uint64_t key = 0;
};

std::uint64_t cell_key(int row_value, int col_value) {
  return (static_cast<std::uint64_t>(row_value) << 32) | static_cast<std::uint32_t>(col_value);
}

GridResult run_grid(const ExperimentConfig& cfg, const std::string& kind, std::uint64_t tag,
                    const std::vector<int>& col_values, const std::string& col_axis,
                    const std::function<std::optional<StftParams>(int, int, CellResult&)>& plan_cell) {
  cfg.validate();
  const auto start = Clock::now();
  GridResult grid;
  grid.kind = kind;
  grid.row_axis = "L";
  grid.col_axis = col_axis;
  grid.row_values = cfg.shifts;
  grid.col_values = col_values;
  grid.n = cfg.n;
  grid.seed = cfg.seed;
  grid.trials = cfg.trials;
  grid.threshold = cfg.threshold;

  std::vector<CellPlan> plans;
  for (int l : cfg.shifts) {
    for (int c : col_values) {
      CellPlan plan;
      plan.result.row_value = l;
      plan.result.col_value = c;
      plan.result.trials = cfg.trials;
      plan.key = cell_key(l, c);
      plan.params = plan_cell(l, c, plan.result);
      if (plan.params) {
        plan.op = std::make_shared<const AffineMeasurementOperator>(*plan.params);
        plan.result.window_length = plan.params->window_length();
        plan.result.rows = plan.params->rows();
      } else {
        plan.result.precondition_failure = true;
      }
      plans.push_back(std::move(plan));
    }
  }

  std::vector<int> runnable;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (plans[i].params) runnable.push_back(static_cast<int>(i));
  }
  const int trials = cfg.trials;
  std::vector<TrialOutcome> outcomes(runnable.size() * static_cast<std::size_t>(trials));
  parallel_for(static_cast<int>(outcomes.size()), cfg.threads, [&](int task) {
    const CellPlan& plan = plans[static_cast<std::size_t>(runnable[static_cast<std::size_t>(task / trials)])];
    const int trial = task % trials;
    TrialOutcome& out = outcomes[static_cast<std::size_t>(task)];
    const auto t0 = Clock::now();
    std::mt19937_64 rng(derive_seed(cfg.seed, tag, plan.key, static_cast<std::uint64_t>(trial)));
    try {
      const Signal x0 = random_signal(cfg.n, rng);
      const MagnitudeMeasurements z = magnitude_measurements(x0, *plan.params);
      const RecoveryResult rec = recover_signal(z, *plan.op, cfg.solver);
      out.nmse = dist_mod_phase(x0, rec.x);
      out.iterations = rec.report.iterations;
      out.converged = rec.report.converged;
    } catch (const std::exception&) {
      out.error = true;
    }
    out.seconds = seconds_since(t0);
  });

  for (std::size_t k = 0; k < runnable.size(); ++k) {
    CellResult& cell = plans[static_cast<std::size_t>(runnable[k])].result;
    int successes = 0;
    double nmse_sum = 0.0;
    double iter_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      const TrialOutcome& o = outcomes[k * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)];
      cell.nmse.push_back(o.nmse);
      nmse_sum += o.nmse;
      iter_sum += o.iterations;
      cell.wall_seconds += o.seconds;
      if (o.error) ++cell.solver_errors;
      else if (!o.converged) ++cell.not_converged;
      if (!o.error && o.nmse <= cfg.threshold) ++successes;
    }
    cell.success_probability = static_cast<double>(successes) / trials;
    cell.mean_nmse = nmse_sum / trials;
    cell.mean_iterations = iter_sum / trials;
  }
  for (auto& plan : plans) grid.cells.push_back(std::move(plan.result));
  grid.wall_seconds = seconds_since(start);
  return grid;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

nlohmann::json base_manifest(const ExperimentConfig& cfg, const RunInfo& info, double wall_seconds) {
  nlohmann::json m;
  m["tool"] = "stft-pr";
  m["version"] = STFTPR_VERSION;
  m["command"] = info.command;
  m["argv"] = info.argv;
  m["config_hash"] = hex64(config_hash(cfg));
  m["config"] = cfg.canonical();
  m["seed"] = cfg.seed;
  m["trials"] = cfg.trials;
  m["n"] = cfg.n;
  m["wall_time_seconds"] = wall_seconds;
  m["versions"] = {
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"boost", BOOST_LIB_VERSION},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"compiler", __VERSION__},
  };
  return m;
}

std::filesystem::path prepare_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output.dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + cfg.output.dir.string() + ": " + ec.message());
  return cfg.output.dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::kIo, "write failed: " + path.string());
}

std::string stem_of(const ExperimentConfig& cfg, const RunInfo& info) {
  if (!cfg.output.stem.empty()) return cfg.output.stem;
  return info.stem.empty() ? info.command : info.stem;
}

}  // namespace

const char* version() { return STFTPR_VERSION; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  return mix(h ^ c);
}

Signal random_signal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::VectorXcd v(n);
  for (int k = 0; k < n; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    v[k] = {re, im};
  }
  return Signal(std::move(v));
}

Eigen::VectorXcd make_window(const ExperimentConfig& cfg, int w) {
  if (cfg.window == "ones") return Eigen::VectorXcd::Ones(w);
  const Signal file = read_signal_csv(std::filesystem::path(cfg.window));
  if (file.size() != w) {
    throw Error(Errc::kConfig, "window file has length " + std::to_string(file.size()) + ", grid asks for " +
                                   std::to_string(w));
  }
  return file.values();
}

const CellResult* GridResult::find(int row_value, int col_value) const {
  for (const auto& c : cells) {
    if (c.row_value == row_value && c.col_value == col_value) return &c;
  }
  return nullptr;
}

GridResult run_phase_transition_LW(const ExperimentConfig& cfg) {
  return run_grid(cfg, "phase-transition-lw", 1, cfg.window_lengths, "W",
                  [&](int l, int w, CellResult&) -> std::optional<StftParams> {
                    if (l >= w) return std::nullopt;
                    return StftParams(cfg.n, l, std::min(4 * l, cfg.n), make_window(cfg, w));
                  });
}

GridResult run_phase_transition_LM(const ExperimentConfig& cfg) {
  return run_grid(cfg, "phase-transition-lm", 2, cfg.rows, "M",
                  [&](int l, int m, CellResult&) -> std::optional<StftParams> {
                    if (l >= cfg.window_length || m > cfg.n) return std::nullopt;
                    return StftParams(cfg.n, l, m, make_window(cfg, cfg.window_length));
                  });
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(Errc::kInvalidArgument, "need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(Errc::kInvalidArgument, "x values are all equal");
  return sxy / sxx;
}

NmseTable run_nmse_vs_snr(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  std::vector<double> snrs = cfg.snr_db;
  std::sort(snrs.begin(), snrs.end());
  const int trials = cfg.trials;
  const std::size_t levels = snrs.size() + 1;  // last slot: noiseless

  struct CurvePlan {
    StftParams params;
    std::shared_ptr<const AffineMeasurementOperator> op;
    std::uint64_t key;
  };
  std::vector<CurvePlan> plans;
  for (const auto& c : cfg.curves) {
    StftParams p(cfg.n, c[0], std::min(2 * c[1], cfg.n), make_window(cfg, c[1]));
    plans.push_back({p, std::make_shared<const AffineMeasurementOperator>(p), cell_key(c[0], c[1])});
  }

  // nmse[(curve * trials + trial) * levels + level]; negative marks a solver error.
  std::vector<double> nmse(plans.size() * static_cast<std::size_t>(trials) * levels, 1.0);
  std::vector<char> failed(nmse.size(), 0);
  parallel_for(static_cast<int>(plans.size()) * trials, cfg.threads, [&](int task) {
    const CurvePlan& plan = plans[static_cast<std::size_t>(task / trials)];
    const int trial = task % trials;
    const std::size_t base = static_cast<std::size_t>(task) * levels;
    std::mt19937_64 rng(derive_seed(cfg.seed, 3, plan.key, static_cast<std::uint64_t>(trial)));
    const Signal x0 = random_signal(cfg.n, rng);
    const Eigen::MatrixXd z = magnitude_measurements(x0, plan.params).z();
    for (std::size_t s = 0; s < snrs.size(); ++s) {
      std::mt19937_64 noise_rng(derive_seed(cfg.seed, 4, plan.key,
                                            (static_cast<std::uint64_t>(trial) << 16) ^ static_cast<std::uint64_t>(s)));
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::MatrixXd noise(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(noise_rng);
      noise *= z.norm() / (noise.norm() * std::pow(10.0, snrs[s] / 20.0));
      std::vector<double> eta(static_cast<std::size_t>(z.cols()));
      for (Eigen::Index r = 0; r < z.cols(); ++r) eta[static_cast<std::size_t>(r)] = noise.col(r).norm();
      try {
        const SolveResult solved = stlift_solve_noisy(MagnitudeMeasurements(z + noise), *plan.op, eta, cfg.solver);
        nmse[base + s] = dist_mod_phase(x0, best_rank_one(solved.x).x);
      } catch (const std::exception&) {
        failed[base + s] = 1;
      }
    }
    try {
      nmse[base + snrs.size()] = dist_mod_phase(x0, recover_signal(MagnitudeMeasurements(z), *plan.op, cfg.solver).x);
    } catch (const std::exception&) {
      failed[base + snrs.size()] = 1;
    }
  });

  NmseTable table;
  table.n = cfg.n;
  table.seed = cfg.seed;
  table.trials = trials;
  for (std::size_t c = 0; c < plans.size(); ++c) {
    NmseCurve curve;
    curve.shift = plans[c].params.shift();
    curve.window_length = plans[c].params.window_length();
    curve.rows = plans[c].params.rows();
    curve.snr_db = snrs;
    for (std::size_t s = 0; s < levels; ++s) {
      double acc = 0.0;
      for (int t = 0; t < trials; ++t) {
        const std::size_t idx = (c * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)) * levels + s;
        acc += to_db(nmse[idx]);
        curve.solver_errors += failed[idx];
      }
      if (s < snrs.size()) curve.mean_nmse_db.push_back(acc / trials);
      else curve.noiseless_nmse_db = acc / trials;
    }
    curve.monotone = true;
    for (std::size_t s = 1; s < curve.mean_nmse_db.size(); ++s) {
      if (!(curve.mean_nmse_db[s] < curve.mean_nmse_db[s - 1])) curve.monotone = false;
    }
    curve.slope = snrs.size() >= 2 ? least_squares_slope(snrs, curve.mean_nmse_db) : 0.0;
    table.curves.push_back(std::move(curve));
  }
  table.wall_seconds = seconds_since(start);
  return table;
}

std::vector<std::vector<double>> probability_matrix(const GridResult& grid) {
  std::vector<std::vector<double>> out(grid.row_values.size(), std::vector<double>(grid.col_values.size()));
  for (std::size_t i = 0; i < grid.row_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.col_values.size(); ++j) out[i][j] = grid.at(i, j).success_probability;
  }
  return out;
}

void write_grid_csv(std::ostream& out, const GridResult& grid) {
  out << "# stft-pr " << grid.kind << " rows=" << grid.row_axis << " cols=" << grid.col_axis << " N=" << grid.n
      << " seed=" << grid.seed << " trials=" << grid.trials << " threshold=" << grid.threshold << '\n';
  out << grid.row_axis << ',' << grid.col_axis
      << ",W_used,M_used,success_probability,mean_nmse,mean_iterations,trials,precondition_failure,"
         "solver_errors,not_converged\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& c : grid.cells) {
    out << c.row_value << ',' << c.col_value << ',' << c.window_length << ',' << c.rows << ','
        << c.success_probability << ',' << c.mean_nmse << ',' << c.mean_iterations << ',' << c.trials << ','
        << (c.precondition_failure ? 1 : 0) << ',' << c.solver_errors << ',' << c.not_converged << '\n';
  }
}

std::vector<std::vector<double>> read_grid_csv(std::istream& in) {
  std::string line;
  std::vector<int> rows, cols;
  std::map<std::pair<int, int>, double> values;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> parts;
    while (std::getline(ss, cell, ',')) parts.push_back(cell);
    if (parts.size() < 5) throw Error(Errc::kIo, "malformed grid row: " + line);
    const int r = std::stoi(parts[0]);
    const int c = std::stoi(parts[1]);
    if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    values[{r, c}] = std::stod(parts[4]);
  }
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(cols.size(), 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto it = values.find({rows[i], cols[j]});
      if (it == values.end()) throw Error(Errc::kIo, "grid CSV is missing a cell");
      out[i][j] = it->second;
    }
  }
  return out;
}

void write_pgm(std::ostream& out, const std::vector<std::vector<double>>& probabilities, int scale) {
  if (scale < 1) throw Error(Errc::kInvalidArgument, "heatmap scale must be positive");
  const std::size_t h = probabilities.size();
  const std::size_t w = h ? probabilities.front().size() : 0;
  out << "P5\n" << w * static_cast<std::size_t>(scale) << ' ' << h * static_cast<std::size_t>(scale) << "\n255\n";
  for (std::size_t i = 0; i < h; ++i) {
    if (probabilities[i].size() != w) throw Error(Errc::kInvalidArgument, "ragged probability matrix");
    std::string row;
    for (std::size_t j = 0; j < w; ++j) {
      const double p = std::clamp(probabilities[i][j], 0.0, 1.0);
      row.append(static_cast<std::size_t>(scale), static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * p))));
    }
    for (int s = 0; s < scale; ++s) out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

OutputFiles emit_outputs(const GridResult& grid, const ExperimentConfig& cfg, const RunInfo& info) {
  const std::filesystem::path dir = prepare_dir(cfg);
  const std::string stem = stem_of(cfg, info);
  OutputFiles files;
  files.csv = dir / (stem + ".csv");
  {
    auto out = open_out(files.csv);
    write_grid_csv(out, grid);
    finish(out, files.csv);
  }
  if (cfg.output.heatmap) {
    files.heatmap = dir / (stem + ".pgm");
    auto out = open_out(files.heatmap);
    write_pgm(out, probability_matrix(grid), cfg.output.heatmap_scale);
    finish(out, files.heatmap);
  }
  files.manifest = dir / (stem + ".json");
  nlohmann::json m = base_manifest(cfg, info, grid.wall_seconds);
  m["grid"] = {{"rows", grid.row_axis}, {"cols", grid.col_axis}, {"row_values", grid.row_values},
               {"col_values", grid.col_values}, {"threshold", grid.threshold}};
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : grid.cells) {
    cells.push_back({{grid.row_axis, c.row_value},
                     {grid.col_axis, c.col_value},
                     {"success_probability", c.success_probability},
                     {"precondition_failure", c.precondition_failure},
                     {"wall_seconds", c.wall_seconds}});
  }
  m["cells"] = cells;
  m["outputs"] = {{"csv", files.csv.filename().string()},
                  {"heatmap", files.heatmap.empty() ? "" : files.heatmap.filename().string()}};
  auto out = open_out(files.manifest);
  out << m.dump(2) << '\n';
  finish(out, files.manifest);
  return files;
}

OutputFiles emit_outputs(const NmseTable& table, const ExperimentConfig& cfg, const RunInfo& info) {
  const std::filesystem::path dir = prepare_dir(cfg);
  const std::string stem = stem_of(cfg, info);
  OutputFiles files;
  files.csv = dir / (stem + ".csv");
  {
    auto out = open_out(files.csv);
    out << "# stft-pr nmse-snr rows=curve cols=snr_db N=" << table.n << " seed=" << table.seed
        << " trials=" << table.trials << " snr=total-energy\n";
    out << "L,W,M,snr_db,mean_nmse_db\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& c : table.curves) {
      for (std::size_t s = 0; s < c.snr_db.size(); ++s) {
        out << c.shift << ',' << c.window_length << ',' << c.rows << ',' << c.snr_db[s] << ',' << c.mean_nmse_db[s]
            << '\n';
      }
      out << c.shift << ',' << c.window_length << ',' << c.rows << ",inf," << c.noiseless_nmse_db << '\n';
    }
    finish(out, files.csv);
  }
  files.manifest = dir / (stem + ".json");
  nlohmann::json m = base_manifest(cfg, info, table.wall_seconds);
  m["snr_normalization"] = "total energy: ||Z||^2 / ||noise||^2";
  m["eta"] = "realized noise norm per section";
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : table.curves) {
    curves.push_back({{"L", c.shift},
                      {"W", c.window_length},
                      {"M", c.rows},
                      {"slope", c.slope},
                      {"monotone", c.monotone},
                      {"noiseless_nmse_db", c.noiseless_nmse_db},
                      {"solver_errors", c.solver_errors}});
  }
  m["curves"] = curves;
  m["outputs"] = {{"csv", files.csv.filename().string()}};
  auto out = open_out(files.manifest);
  out << m.dump(2) << '\n';
  finish(out, files.manifest);
  return files;
}

}  // namespace stftpr
