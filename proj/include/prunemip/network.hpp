#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace prunemip {

/// Fully connected layer with per-parameter binary masks. Weights are stored
/// row-major, one row per output neuron. A cleared mask bit always pairs with a
/// stored value of exactly zero.
struct DenseLayer {
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<std::uint8_t> weight_mask;
  std::vector<std::uint8_t> bias_mask;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out);

  double& w(std::size_t row, std::size_t col) { return weights[row * in_width + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in_width + col]; }
  bool live(std::size_t row, std::size_t col) const {
    return weight_mask[row * in_width + col] != 0;
  }
  std::span<const double> row(std::size_t r) const {
    return {weights.data() + r * in_width, in_width};
  }

  void maskWeight(std::size_t row, std::size_t col);
  void maskBias(std::size_t row);
};

/// Optional min-max rescaling of inputs and/or outputs to [0,1]. Stored with
/// the network so that encoders can fold it into the first and last layer.
struct AffineScaling {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Dense ReLU MLP: ReLU on every hidden layer, affine output layer.
class MaskedNetwork {
 public:
  MaskedNetwork() = default;
  /// Zero-initialised, fully unmasked network with the given layer widths,
  /// e.g. {2, 16, 16, 1}.
  explicit MaskedNetwork(const std::vector<std::size_t>& widths);
  MaskedNetwork(std::size_t input_dim, std::size_t output_dim, std::vector<DenseLayer> layers);

  std::size_t inputDim() const { return input_dim_; }
  std::size_t outputDim() const { return output_dim_; }
  std::size_t numLayers() const { return layers_.size(); }
  std::size_t numHiddenLayers() const { return layers_.empty() ? 0 : layers_.size() - 1; }
  std::vector<std::size_t> widths() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const DenseLayer& layer(std::size_t j) const { return layers_[j]; }
  DenseLayer& layer(std::size_t j) { return layers_[j]; }

  const std::optional<AffineScaling>& inputScaling() const { return input_scaling_; }
  const std::optional<AffineScaling>& outputScaling() const { return output_scaling_; }
  void setInputScaling(std::optional<AffineScaling> s) { input_scaling_ = std::move(s); }
  void setOutputScaling(std::optional<AffineScaling> s) { output_scaling_ = std::move(s); }
  /// Copy of this network with any stored scaling composed into the first and
  /// last affine layers; forward() is unchanged, up to rounding.
  MaskedNetwork withScalingFolded() const;

  /// Throws Error(Validation) on shape or mask/value inconsistencies.
  void validate() const;

  std::vector<double> forward(std::span<const double> x) const;
  /// Preactivations of every layer for input x (the last entry is the output).
  std::vector<std::vector<double>> preactivations(std::span<const double> x) const;

  std::size_t totalWeights() const;
  std::size_t unmaskedWeights() const;
  /// Hidden neuron is live unless its bias and all incoming and outgoing
  /// weights are masked.
  bool hiddenNeuronLive(std::size_t layer, std::size_t neuron) const;
  std::size_t liveHiddenNeurons(std::size_t layer) const;
  std::size_t totalHiddenNeurons() const;

 private:
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<DenseLayer> layers_;
  std::optional<AffineScaling> input_scaling_;
  std::optional<AffineScaling> output_scaling_;
};

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Fraction of masked weight entries (biases excluded).
double weightSparsity(const MaskedNetwork& net);
/// Fraction of hidden neurons that are no longer live.
double nodeSparsity(const MaskedNetwork& net);

void saveNetwork(const MaskedNetwork& net, const std::filesystem::path& path);
MaskedNetwork loadNetwork(const std::filesystem::path& path);
std::string networkToJson(const MaskedNetwork& net);
MaskedNetwork networkFromJson(const std::string& text);

}  // namespace prunemip
