#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "prunemip/data.hpp"
#include "prunemip/network.hpp"
#include "prunemip/train.hpp"

namespace prunemip {

enum class PruneMethod { Weight, Node };

PruneMethod parsePruneMethod(const std::string& text);
const char* toString(PruneMethod method);

struct PruneConfig {
  PruneMethod method = PruneMethod::Weight;
  double final_sparsity = 0.8;
  double relative_rate = 0.25;
  bool fine_tune = false;
  TrainConfig fine_tune_cfg;
  /// Retrain before each scoring step. Off gives pure magnitude pruning of
  /// the given parameters.
  bool retrain = true;
  /// Run dead-neuron cleaning after every iteration instead of once at the end.
  bool clean_each_iteration = false;

  void validate() const;
};

struct IterationSchedule {
  int iterations = 1;
  /// Per-iteration rate actually used: 1 - (1 - s_f)^(1/N).
  double rate = 0.0;
};

IterationSchedule numIterations(double final_sparsity, double relative_rate);

/// Masks the ceil(rate * n_u) smallest-magnitude unmasked weights, ranked
/// globally across layers; ties go to the lower (layer, row, col). Biases are
/// never touched. Returns the number of weights masked.
std::size_t pruneWeightsStep(MaskedNetwork& net, double rate);
/// Same ranking, masking exactly `count` weights.
std::size_t pruneWeightsCount(MaskedNetwork& net, std::size_t count);

/// In every hidden layer, removes the ceil(rate * live) live neurons with the
/// smallest sum of |incoming weight| (bias ignored): all incoming weights, the
/// bias and all outgoing weights are masked. Returns neurons removed.
std::size_t pruneNodesStep(MaskedNetwork& net, double rate);
/// Removes neurons until hidden layer j has live_targets[j] live neurons.
std::size_t pruneNodesToTargets(MaskedNetwork& net, const std::vector<std::size_t>& live_targets);

struct CleanReport {
  std::size_t folded = 0;        // constant neurons folded into downstream biases
  std::size_t disconnected = 0;  // neurons with no live outgoing weights
  std::size_t total() const { return folded + disconnected; }
};

/// Removes dead hidden neurons without changing the network function, to a
/// fixpoint. A neuron with no live incoming weights outputs ReLU(b); that
/// constant is added to each downstream bias through its outgoing weights.
CleanReport cleanDeadNeurons(MaskedNetwork& net);

struct IterationMetrics {
  int iteration = 0;
  double sparsity = 0.0;
  double val_mape = 0.0;
  std::size_t dead_neurons_cleaned = 0;
};

struct PruneResult {
  std::vector<IterationMetrics> iterations;
  CleanReport final_clean;
  TrainResult fine_tune;
};

/// Iterative magnitude pruning: N rounds of {train, score, prune}, then
/// dead-neuron cleaning and optional fine-tuning with masks frozen.
PruneResult iterativePrune(MaskedNetwork& net, const Dataset& train, const Dataset& val,
                           const PruneConfig& prune_cfg, const TrainConfig& train_cfg);

void writeIterationCsv(const PruneResult& result, const std::filesystem::path& path);

}  // namespace prunemip
