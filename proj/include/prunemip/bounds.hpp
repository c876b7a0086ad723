#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "prunemip/data.hpp"
#include "prunemip/network.hpp"

namespace prunemip {

/// Interval bounds of one affine layer. For hidden layers the activation
/// bounds are the ReLU image of [lower, upper]; for the output layer they are
/// equal to the preactivation bounds.
struct LayerBounds {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> act_lower;
  std::vector<double> act_upper;
  bool is_output = false;

  std::size_t size() const { return lower.size(); }
  double preWidth(std::size_t i) const { return upper[i] - lower[i]; }
  double actWidth(std::size_t i) const { return act_upper[i] - act_lower[i]; }
};

struct BoundsTable {
  Box input;
  std::vector<LayerBounds> layers;  // layers[j] bounds the output of net.layer(j)

  /// Activation bounds feeding layer j (the input box for j == 0).
  const std::vector<double>& sourceLower(std::size_t j) const;
  const std::vector<double>& sourceUpper(std::size_t j) const;
};

/// Interval arithmetic, layer by layer, in plain double precision.
BoundsTable propagateIA(const MaskedNetwork& net, const Box& box);

/// Largest |Δp[j] - |W[j]| Δz[j-1]| over all layers and neurons.
double widthIdentityResidual(const MaskedNetwork& net, const BoundsTable& table);

struct TighteningReport {
  std::vector<double> max_pre_violation;  // per layer, max(Δp' - Δp)
  std::vector<double> max_act_violation;  // per layer, max(Δz' - Δz)
  std::vector<double> max_tightening;     // per layer, max(Δp - Δp')
  double tolerance = 1e-12;
  bool monotone = true;                   // no violation above tolerance
  std::size_t violations = 0;
};

/// Compares IA widths of `before` and `after` where `after` must only mask
/// weight entries of `before`; throws Error(NotPurePruning) otherwise.
TighteningReport checkMonotoneTightening(const MaskedNetwork& before, const MaskedNetwork& after,
                                         const Box& box, double tolerance = 1e-12);

struct WeightRef {
  std::size_t layer = 0;  // index into net.layers()
  std::size_t row = 0;    // neuron i in that layer
  std::size_t col = 0;    // source neuron k in the previous layer
};

struct StrictTighteningVerdict {
  /// nontrivial prune, upstream range, downstream path, no degenerate ReLU on it
  std::array<bool, 4> conditions{};
  bool conditions_held = false;
  bool strict_decrease_observed = false;
  double width_before = 0.0;
  double width_after = 0.0;
  double delta = 0.0;  // width_before - width_after
};

/// Evaluates the four strict-tightening conditions for pruning `weight`, and
/// when they all hold prunes it and compares the output width.
StrictTighteningVerdict checkStrictTightening(const MaskedNetwork& net, const Box& box,
                                              const WeightRef& weight, std::size_t output_index);

struct WidthStats {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct WidthSummary {
  WidthStats hidden;              // all hidden neurons pooled
  std::vector<WidthStats> layer;  // one per layer, output layer last
};

/// Preactivation width statistics (U - L). Pruned neurons are included with
/// their (zero) width so summaries of nested prunings stay comparable.
WidthSummary widthSummary(const BoundsTable& table);

void writeBoundsCsv(const BoundsTable& table, const std::filesystem::path& path);
void writeWidthSummaryCsv(const WidthSummary& summary, const std::filesystem::path& path);

}  // namespace prunemip
