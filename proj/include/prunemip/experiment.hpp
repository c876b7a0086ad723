#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prunemip/bounds.hpp"
#include "prunemip/config.hpp"
#include "prunemip/milp.hpp"
#include "prunemip/solve.hpp"

namespace prunemip {

/// "finetune" retrains between pruning rounds and fine-tunes at the end;
/// "pure" masks the trained base network by magnitude with no training.
enum class CellVariant { Baseline, FineTune, Pure };
const char* toString(CellVariant v);

struct CellResult {
  std::uint64_t seed = 0;
  std::string method = "none";
  CellVariant variant = CellVariant::Baseline;
  double target_sparsity = 0.0;
  double weight_sparsity = 0.0;
  double node_sparsity = 0.0;
  double test_mape = 0.0;
  double mape_increase = 0.0;  // percentage points over the seed's baseline
  double train_seconds = 0.0;
  double solve_seconds = 0.0;
  std::string status;
  double objective = 0.0;
  SolveStats stats;
  WidthSummary widths;
  PresolveStats presolve;
  std::size_t dead_cleaned = 0;
  std::string error;  // non-empty when the cell failed
  std::filesystem::path dir;
};

struct ExperimentReport {
  std::vector<CellResult> cells;
};

/// Number of worker threads: PRUNEMIP_WORKERS if set and positive, else the
/// hardware concurrency.
std::size_t workerCount();

/// Runs every (seed, method, sparsity, variant) cell plus one unpruned
/// baseline per seed and writes cells.csv, layer_widths.csv, summary.csv and
/// one directory per cell under spec.output.
ExperimentReport runExperiment(const ExperimentSpec& spec, std::ostream* progress = nullptr);

void writeCellsCsv(const ExperimentReport& report, const std::filesystem::path& path);
void writeLayerWidthsCsv(const ExperimentReport& report, const std::filesystem::path& path);
void writeSummaryCsv(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace prunemip
