#include "prunemip/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "prunemip/error.hpp"

namespace prunemip {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!item.empty()) out.push_back(item), item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

double toDouble(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw Error(ErrorKind::Parse, key + ": expected a number, got '" + v + "'");
  return d;
}

long toLong(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long d = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw Error(ErrorKind::Parse, key + ": expected an integer, got '" + v + "'");
  return d;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, "line " + std::to_string(no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(no) + ": empty key");
    if (cfg.values_.count(key)) throw Error(ErrorKind::Parse, "line " + std::to_string(no) + ": duplicate key " + key);
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KeyValueConfig::getString(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  return it->second;
}

double KeyValueConfig::getDouble(const std::string& key, double fallback) const {
  return has(key) ? toDouble(key, getString(key, "")) : fallback;
}

long KeyValueConfig::getInt(const std::string& key, long fallback) const {
  return has(key) ? toLong(key, getString(key, "")) : fallback;
}

bool KeyValueConfig::getBool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = getString(key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::Parse, key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> KeyValueConfig::getDoubles(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : splitList(getString(key, ""))) out.push_back(toDouble(key, item));
  return out;
}

std::vector<std::string> KeyValueConfig::getStrings(const std::string& key,
                                                    const std::vector<std::string>& fallback) const {
  return has(key) ? splitList(getString(key, "")) : fallback;
}

std::vector<std::string> KeyValueConfig::unusedKeys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> parseArchitecture(const std::string& text) {
  std::vector<std::size_t> widths;
  auto fail = [&] { throw Error(ErrorKind::Parse, "bad architecture '" + text + "'"); };
  std::size_t pos = 0;
  auto number = [&]() {
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (start == pos) fail();
    return static_cast<std::size_t>(std::stoul(text.substr(start, pos - start)));
  };
  while (pos < text.size()) {
    if (text[pos] == '(') {
      ++pos;
      const std::size_t w = number();
      if (pos >= text.size() || (text[pos] != 'x' && text[pos] != '*')) fail();
      ++pos;
      const std::size_t count = number();
      if (pos >= text.size() || text[pos] != ')') fail();
      ++pos;
      if (count == 0) fail();
      widths.insert(widths.end(), count, w);
    } else {
      widths.push_back(number());
    }
    if (pos < text.size()) {
      if (text[pos] != '-') fail();
      ++pos;
      if (pos == text.size()) fail();
    }
  }
  if (widths.size() < 2) fail();
  for (std::size_t w : widths) {
    if (w == 0) fail();
  }
  return widths;
}

std::string formatArchitecture(const std::vector<std::size_t>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) out += (i ? "-" : "") + std::to_string(widths[i]);
  return out;
}

void ExperimentSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, "experiment: " + m); };
  if (architecture.size() < 3) fail("architecture needs at least one hidden layer");
  if (seeds.empty()) fail("seeds must be non-empty");
  if (methods.empty()) fail("methods must be non-empty");
  for (double s : sparsities) {
    if (!(s > 0.0 && s < 1.0)) fail("sparsities must lie in (0,1)");
  }
  if (!(relative_rate > 0.0 && relative_rate < 1.0)) fail("relative_rate must lie in (0,1)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must lie in (0,1)");
  if (function == "peaks") {
    if (architecture.front() != 2 || architecture.back() != 1) fail("peaks needs a 2-...-1 architecture");
    if (n < 2) fail("n must be at least 2");
    if (!(box_lo < box_hi)) fail("box must satisfy lo < hi");
  } else if (function == "csv") {
    if (csv.empty() || input_cols.empty() || target_cols.empty()) fail("csv needs csv, inputs and targets");
  } else {
    fail("unknown function '" + function + "'");
  }
  if (!(limits.time_limit > 0.0)) fail("time_limit must be positive");
  if (!(report_mape_epsilon > 0.0)) fail("report_mape_epsilon must be positive");
  train.validate();
  retrain_cfg.validate();
  fine_tune_cfg.validate();
}

ExperimentSpec experimentSpecFromConfig(const KeyValueConfig& cfg) {
  ExperimentSpec s;
  s.architecture = parseArchitecture(cfg.getString("architecture", formatArchitecture(s.architecture)));
  s.function = cfg.getString("function", s.function);
  s.csv = cfg.getString("csv", "");
  s.input_cols = cfg.getStrings("inputs", {});
  s.target_cols = cfg.getStrings("targets", {});
  s.n = static_cast<std::size_t>(cfg.getInt("n", static_cast<long>(s.n)));
  s.test_n = static_cast<std::size_t>(cfg.getInt("test_n", static_cast<long>(s.test_n)));
  s.train_fraction = cfg.getDouble("train_fraction", s.train_fraction);
  const auto box = cfg.getDoubles("box", {s.box_lo, s.box_hi});
  if (box.size() != 2) throw Error(ErrorKind::Parse, "box: expected two numbers");
  s.box_lo = box[0];
  s.box_hi = box[1];
  s.scale = cfg.getBool("scale", s.scale);

  s.methods.clear();
  for (const auto& m : cfg.getStrings("methods", {"weight"})) s.methods.push_back(parsePruneMethod(m));
  s.sparsities = cfg.getDoubles("sparsities", s.sparsities);
  s.seeds.clear();
  for (double v : cfg.getDoubles("seeds", {1, 2, 3, 4, 5})) {
    if (v < 0 || v != std::floor(v)) throw Error(ErrorKind::Parse, "seeds: expected non-negative integers");
    s.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  s.relative_rate = cfg.getDouble("relative_rate", s.relative_rate);
  s.fine_tune = cfg.getBool("fine_tune", s.fine_tune);
  s.pure_prune = cfg.getBool("pure_prune", s.pure_prune);

  s.train.epochs = static_cast<int>(cfg.getInt("epochs", s.train.epochs));
  s.train.learning_rate = cfg.getDouble("learning_rate", s.train.learning_rate);
  s.train.batch_size = static_cast<std::size_t>(cfg.getInt("batch_size", static_cast<long>(s.train.batch_size)));
  s.train.l2_lambda = cfg.getDouble("l2", s.train.l2_lambda);
  s.train.patience = static_cast<int>(cfg.getInt("patience", s.train.patience));
  s.train.early_stop_tolerance = cfg.getDouble("early_stop_tolerance", s.train.early_stop_tolerance);
  s.train.mape_epsilon = cfg.getDouble("mape_epsilon", s.train.mape_epsilon);
  s.report_mape_epsilon = cfg.getDouble("report_mape_epsilon", s.report_mape_epsilon);
  s.retrain_cfg = s.train;
  s.retrain_cfg.epochs = static_cast<int>(cfg.getInt("retrain_epochs", s.train.epochs));
  s.fine_tune_cfg = s.train;
  s.fine_tune_cfg.epochs = static_cast<int>(cfg.getInt("fine_tune_epochs", s.train.epochs));

  s.limits.time_limit = cfg.getDouble("time_limit", s.limits.time_limit);
  s.limits.gap = cfg.getDouble("gap", s.limits.gap);
  s.problem = cfg.getString("problem", "");
  s.output = cfg.getString("output", s.output.string());

  const auto unused = cfg.unusedKeys();
  if (!unused.empty()) throw Error(ErrorKind::Schema, "unknown config key '" + unused.front() + "'");
  s.validate();
  return s;
}

ExperimentSpec loadExperimentSpec(const std::filesystem::path& path) {
  return experimentSpecFromConfig(KeyValueConfig::load(path));
}

}  // namespace prunemip
