#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prunemip/prune.hpp"
#include "prunemip/solve.hpp"
#include "prunemip/train.hpp"

namespace prunemip {

/// Parsed `key = value` text. Blank lines and `#` comments are skipped.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string getString(const std::string& key, const std::string& fallback) const;
  double getDouble(const std::string& key, double fallback) const;
  long getInt(const std::string& key, long fallback) const;
  bool getBool(const std::string& key, bool fallback) const;
  std::vector<double> getDoubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> getStrings(const std::string& key, const std::vector<std::string>& fallback) const;
  /// Keys that no getter has asked for.
  std::vector<std::string> unusedKeys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

/// Layer widths from "2-16-16-1" or "2-(8x6)-1" (six hidden layers of 8).
std::vector<std::size_t> parseArchitecture(const std::string& text);
std::string formatArchitecture(const std::vector<std::size_t>& widths);

struct ExperimentSpec {
  std::vector<std::size_t> architecture{2, 16, 16, 16, 1};
  std::string function = "peaks";
  std::filesystem::path csv;  // used when function == "csv"
  std::vector<std::string> input_cols, target_cols;
  std::size_t n = 5000;
  std::size_t test_n = 500;
  double train_fraction = 0.8;
  double box_lo = -3.0, box_hi = 3.0;
  bool scale = false;

  std::vector<PruneMethod> methods{PruneMethod::Weight};
  std::vector<double> sparsities{0.8, 0.9};  // each in (0,1); the unpruned baseline is always run
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double relative_rate = 0.25;
  bool fine_tune = true;
  bool pure_prune = true;
  TrainConfig train;
  TrainConfig retrain_cfg;  // between pruning rounds
  TrainConfig fine_tune_cfg;
  /// Denominator floor of the reported test MAPE; train.mape_epsilon only
  /// drives early stopping.
  double report_mape_epsilon = 1e-8;

  SolveLimits limits;
  std::filesystem::path problem;  // optional problem file; default minimize y0
  std::filesystem::path output = "report";

  void validate() const;
};

ExperimentSpec experimentSpecFromConfig(const KeyValueConfig& cfg);
ExperimentSpec loadExperimentSpec(const std::filesystem::path& path);

}  // namespace prunemip
