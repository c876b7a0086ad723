#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "prunemip/data.hpp"
#include "prunemip/network.hpp"

namespace prunemip {

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  double l2_lambda = 5e-7;
  /// Minimum validation-MAPE improvement (percentage points) that resets patience.
  double early_stop_tolerance = 1e-3;
  int patience = 15;
  std::uint64_t seed = 0;
  double mape_epsilon = 1e-8;

  void validate() const;
};

/// Per-parameter gradients, shaped like the network's layers.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zerosLike(const MaskedNetwork& net);
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// Mean squared error over the selected rows (averaged over rows and output
/// coordinates) plus l2_lambda * sum of squared unmasked weights. Gradients of
/// masked parameters are exactly zero. ReLU'(0) is taken as 0. An empty row
/// selection means every row.
LossAndGradients lossAndGradients(const MaskedNetwork& net, const Matrix& inputs,
                                  const Matrix& targets, double l2_lambda,
                                  std::span<const std::size_t> rows = {});

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Gradients m;
  Gradients v;
  long step = 0;

  static AdamState forNetwork(const MaskedNetwork& net);
};

/// One bias-corrected Adam update; masked parameters are left untouched.
void adamStep(MaskedNetwork& net, const Gradients& grads, AdamState& state, double learning_rate);

/// Xavier-uniform (fan average) weights, zero biases. Masked entries stay 0.
void xavierInitialize(MaskedNetwork& net, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mape = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_mape = 0.0;
  bool stopped_early = false;
};

/// Adam with shuffled mini-batches; validation MAPE is checked once per epoch
/// and training stops after `patience` epochs without an improvement larger
/// than early_stop_tolerance. The network is left at its best-validation
/// parameters. Throws TrainingDivergedError on a non-finite loss.
TrainResult trainToConvergence(MaskedNetwork& net, const Dataset& train, const Dataset& val,
                               const TrainConfig& cfg);

Matrix predict(const MaskedNetwork& net, const Matrix& inputs);

void writeHistoryCsv(const TrainResult& result, const std::filesystem::path& path);

}  // namespace prunemip
