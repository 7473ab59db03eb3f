#include "stftpr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <iterator>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stftpr/error.hpp"

namespace stftpr {

namespace {

// Values are handed over as raw text by the INI reader and parsed here.
struct Value {
  enum class Kind { kNumber, kString, kBool, kArray } kind = Kind::kNumber;
  double number = 0.0;
  bool integral = false;
  std::string text;
  bool boolean = false;
  std::vector<Value> items;
};

class ValueParser {
 public:
  ValueParser(std::string src, std::string key) : src_(std::move(src)), key_(std::move(key)) {}

  Value parse() {
    Value v = parse_value();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::kConfig, "key '" + key_ + "': " + what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
  }

  Value parse_value() {
    skip_ws();
    if (pos_ >= src_.size()) fail("missing value");
    const char c = src_[pos_];
    if (c == '[') return parse_array();
    if (c == '"' || c == '\'') return parse_string(c);
    if (src_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      Value v;
      v.kind = Value::Kind::kBool;
      v.boolean = true;
      return v;
    }
    if (src_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      Value v;
      v.kind = Value::Kind::kBool;
      return v;
    }
    return parse_number();
  }

  Value parse_array() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::kArray;
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(parse_value());
      skip_ws();
      if (pos_ >= src_.size()) fail("unterminated array");
      if (src_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == ']') {
          ++pos_;
          return v;
        }
        continue;
      }
      if (src_[pos_] == ']') {
        ++pos_;
        return v;
      }
      fail("expected ',' or ']'");
    }
  }

  Value parse_string(char quote) {
    ++pos_;
    Value v;
    v.kind = Value::Kind::kString;
    while (pos_ < src_.size() && src_[pos_] != quote) {
      if (quote == '"' && src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
      v.text.push_back(src_[pos_++]);
    }
    if (pos_ >= src_.size()) fail("unterminated string");
    ++pos_;
    return v;
  }

  Value parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::string_view("+-0123456789.eE_").find(src_[pos_]) != std::string_view::npos) {
      ++pos_;
    }
    std::string token;
    for (std::size_t i = start; i < pos_; ++i) {
      if (src_[i] != '_') token.push_back(src_[i]);
    }
    if (!token.empty() && token[0] == '+') token.erase(0, 1);
    Value v;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v.number);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v.number)) {
      fail("cannot parse '" + src_.substr(start) + "'");
    }
    v.integral = token.find_first_of(".eE") == std::string::npos;
    return v;
  }

  std::string src_;
  std::string key_;
  std::size_t pos_ = 0;
};

// Drops a trailing '# comment' that is not inside a string.
std::string strip_comment(const std::string& raw) {
  char quote = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return raw.substr(0, i);
    }
  }
  return raw;
}

int as_int(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kNumber || !v.integral) throw Error(Errc::kConfig, "key '" + key + "' must be an integer");
  if (std::abs(v.number) > static_cast<double>(std::numeric_limits<int>::max())) {
    throw Error(Errc::kConfig, "key '" + key + "' is out of range");
  }
  return static_cast<int>(v.number);
}

double as_double(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kNumber) throw Error(Errc::kConfig, "key '" + key + "' must be a number");
  return v.number;
}

std::string as_string(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kString) throw Error(Errc::kConfig, "key '" + key + "' must be a string");
  return v.text;
}

bool as_bool(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kBool) throw Error(Errc::kConfig, "key '" + key + "' must be true or false");
  return v.boolean;
}

std::vector<int> as_int_list(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kArray) throw Error(Errc::kConfig, "key '" + key + "' must be an array");
  std::vector<int> out;
  for (const auto& item : v.items) out.push_back(as_int(item, key));
  return out;
}

std::vector<double> as_double_list(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kArray) throw Error(Errc::kConfig, "key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& item : v.items) out.push_back(as_double(item, key));
  return out;
}

std::vector<std::array<int, 2>> as_pair_list(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::kArray) throw Error(Errc::kConfig, "key '" + key + "' must be an array of pairs");
  std::vector<std::array<int, 2>> out;
  for (const auto& item : v.items) {
    const std::vector<int> pair = as_int_list(item, key);
    if (pair.size() != 2) throw Error(Errc::kConfig, "key '" + key + "' entries must be [L, W] pairs");
    out.push_back({pair[0], pair[1]});
  }
  return out;
}

void apply_experiment(ExperimentConfig& cfg, const std::string& key, const Value& v) {
  const std::string full = "experiment." + key;
  if (key == "n") cfg.n = as_int(v, full);
  else if (key == "window") cfg.window = as_string(v, full);
  else if (key == "shifts") cfg.shifts = as_int_list(v, full);
  else if (key == "window_lengths") cfg.window_lengths = as_int_list(v, full);
  else if (key == "window_length") cfg.window_length = as_int(v, full);
  else if (key == "rows") cfg.rows = as_int_list(v, full);
  else if (key == "curves") cfg.curves = as_pair_list(v, full);
  else if (key == "snr_db") cfg.snr_db = as_double_list(v, full);
  else if (key == "trials") cfg.trials = as_int(v, full);
  else if (key == "seed") {
    if (v.kind != Value::Kind::kNumber || !v.integral || v.number < 0) {
      throw Error(Errc::kConfig, "key '" + full + "' must be a non-negative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(v.number);
  } else if (key == "threshold") cfg.threshold = as_double(v, full);
  else if (key == "threads") cfg.threads = as_int(v, full);
  else throw Error(Errc::kConfig, "unknown key '" + full + "'");
}

void apply_solver(ExperimentConfig& cfg, const std::string& key, const Value& v) {
  const std::string full = "solver." + key;
  SolverOptions& s = cfg.solver;
  if (key == "rho") s.rho = as_double(v, full);
  else if (key == "max_iters") s.max_iters = as_int(v, full);
  else if (key == "eps") s.eps_primal = s.eps_dual = as_double(v, full);
  else if (key == "eps_primal") s.eps_primal = as_double(v, full);
  else if (key == "eps_dual") s.eps_dual = as_double(v, full);
  else if (key == "trace_weight") s.trace_weight = as_double(v, full);
  else if (key == "adapt_every") s.adapt_every = as_int(v, full);
  else if (key == "relaxation") s.relaxation = as_double(v, full);
  else if (key == "anderson_memory") s.anderson_memory = as_int(v, full);
  else throw Error(Errc::kConfig, "unknown key '" + full + "'");
}

void apply_output(ExperimentConfig& cfg, const std::string& key, const Value& v) {
  const std::string full = "output." + key;
  if (key == "dir") cfg.output.dir = as_string(v, full);
  else if (key == "stem") cfg.output.stem = as_string(v, full);
  else if (key == "heatmap") cfg.output.heatmap = as_bool(v, full);
  else if (key == "heatmap_scale") cfg.output.heatmap_scale = as_int(v, full);
  else throw Error(Errc::kConfig, "unknown key '" + full + "'");
}

template <typename T>
void join(std::ostream& os, const std::vector<T>& values) {
  os << '[';
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  os << ']';
}

}  // namespace

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw Error(Errc::kConfig, what);
  };
  need(n >= 1, "experiment.n must be positive");
  need(trials >= 1, "experiment.trials must be at least 1");
  need(threshold > 0.0, "experiment.threshold must be positive");
  need(threads >= 0, "experiment.threads must be non-negative");
  need(!shifts.empty() && !window_lengths.empty() && !rows.empty(), "grid axes must be non-empty");
  for (int v : shifts) need(v >= 1, "shifts must be positive");
  for (int v : window_lengths) need(v >= 1 && v <= n, "window lengths must lie in [1, N]");
  for (int v : rows) need(v >= 1, "rows must be positive");
  need(window_length >= 1 && window_length <= n, "experiment.window_length must lie in [1, N]");
  for (const auto& c : curves) need(c[0] >= 1 && c[1] >= 1 && c[1] <= n, "curves need 1 <= L and 1 <= W <= N");
  for (double s : snr_db) need(std::isfinite(s), "snr_db entries must be finite");
  need(solver.rho > 0.0, "solver.rho must be positive");
  need(solver.max_iters >= 1, "solver.max_iters must be positive");
  need(solver.eps_primal > 0.0 && solver.eps_dual > 0.0, "solver tolerances must be positive");
  need(!solver.trace_weight || *solver.trace_weight >= 0.0, "solver.trace_weight must be non-negative");
  need(solver.adapt_every >= 0, "solver.adapt_every must be non-negative");
  need(solver.relaxation > 0.0 && solver.relaxation < 2.0, "solver.relaxation must lie in (0, 2)");
  need(solver.anderson_memory >= 0, "solver.anderson_memory must be non-negative");
  need(output.heatmap_scale >= 1, "output.heatmap_scale must be at least 1");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "n=" << n << ";window=" << window << ";shifts=";
  join(os, shifts);
  os << ";window_lengths=";
  join(os, window_lengths);
  os << ";window_length=" << window_length << ";rows=";
  join(os, rows);
  os << ";curves=[";
  for (std::size_t i = 0; i < curves.size(); ++i) os << (i ? "," : "") << curves[i][0] << ':' << curves[i][1];
  os << "];snr_db=";
  join(os, snr_db);
  os << ";trials=" << trials << ";seed=" << seed << ";threshold=" << threshold;
  os << ";rho=" << solver.rho << ";max_iters=" << solver.max_iters << ";eps_primal=" << solver.eps_primal
     << ";eps_dual=" << solver.eps_dual << ";trace_weight=";
  if (solver.trace_weight) os << *solver.trace_weight;
  else os << "auto";
  os << ";adapt_every=" << solver.adapt_every << ";relaxation=" << solver.relaxation
     << ";anderson_memory=" << solver.anderson_memory;
  return os.str();
}

ExperimentConfig parse_config(std::istream& in) {
  // The INI reader silently drops empty sections, so headers are checked here.
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] != '[') continue;
    const auto close = line.find(']', first);
    const std::string name = line.substr(first + 1, close == std::string::npos ? std::string::npos : close - first - 1);
    if (name != "experiment" && name != "solver" && name != "output") {
      throw Error(Errc::kConfig, "unknown section [" + name + "]");
    }
  }
  std::istringstream body(text);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(body, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::kConfig, e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw Error(Errc::kConfig, "key '" + section + "' outside a section");
    if (section != "experiment" && section != "solver" && section != "output") {
      throw Error(Errc::kConfig, "unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      const Value v = ValueParser(strip_comment(node.data()), section + "." + key).parse();
      if (section == "experiment") apply_experiment(cfg, key, v);
      else if (section == "solver") apply_solver(cfg, key, v);
      else apply_output(cfg, key, v);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open config " + path.string());
  return parse_config(in);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : cfg.canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace stftpr
