#include "prunemip/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "prunemip/error.hpp"
#include "prunemip/kernels.hpp"

namespace prunemip {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidInput, "train config: " + m); };
  if (epochs < 0) fail("epochs must be non-negative");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(l2_lambda >= 0.0)) fail("l2_lambda must be non-negative");
  if (patience < 1) fail("patience must be at least 1");
  if (!(early_stop_tolerance >= 0.0)) fail("early_stop_tolerance must be non-negative");
  if (!(mape_epsilon > 0.0)) fail("mape_epsilon must be positive");
}

Gradients Gradients::zerosLike(const MaskedNetwork& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

AdamState AdamState::forNetwork(const MaskedNetwork& net) {
  return AdamState{Gradients::zerosLike(net), Gradients::zerosLike(net), 0};
}

namespace {

// Inputs and targets mapped into the network's internal (scaled) space.
struct InternalData {
  Matrix inputs;
  Matrix targets;
};

InternalData toInternal(const MaskedNetwork& net, const Matrix& inputs, const Matrix& targets) {
  InternalData d{inputs, targets};
  if (const auto& s = net.inputScaling()) {
    for (std::size_t r = 0; r < d.inputs.rows; ++r) {
      for (std::size_t c = 0; c < d.inputs.cols; ++c) {
        d.inputs(r, c) = (d.inputs(r, c) - s->lo[c]) / (s->hi[c] - s->lo[c]);
      }
    }
  }
  if (const auto& s = net.outputScaling()) {
    for (std::size_t r = 0; r < d.targets.rows; ++r) {
      for (std::size_t c = 0; c < d.targets.cols; ++c) {
        d.targets(r, c) = (d.targets(r, c) - s->lo[c]) / (s->hi[c] - s->lo[c]);
      }
    }
  }
  return d;
}

class Backprop {
 public:
  explicit Backprop(const MaskedNetwork& net) : net_(net) {
    for (const auto& l : net.layers()) {
      pre_.emplace_back(l.out_width);
      act_.emplace_back(l.out_width);
      delta_.emplace_back(l.out_width);
    }
  }

  // Accumulates into grads (unscaled by batch size); returns the summed squared error.
  double accumulate(std::span<const double> x, std::span<const double> y, Gradients& grads) {
    const auto& kt = kernels::active();
    const auto& layers = net_.layers();
    const std::size_t nl = layers.size();
    const double* z = x.data();
    for (std::size_t j = 0; j < nl; ++j) {
      const DenseLayer& l = layers[j];
      kt.affine(l.weights.data(), l.bias.data(), z, pre_[j].data(), l.out_width, l.in_width);
      act_[j] = pre_[j];
      if (j + 1 < nl) kt.relu_inplace(act_[j].data(), act_[j].size());
      z = act_[j].data();
    }
    double sq = 0.0;
    auto& out_delta = delta_[nl - 1];
    for (std::size_t i = 0; i < out_delta.size(); ++i) {
      const double e = act_[nl - 1][i] - y[i];
      sq += e * e;
      out_delta[i] = 2.0 * e;
    }
    for (std::size_t j = nl; j-- > 0;) {
      const DenseLayer& l = layers[j];
      const double* z_prev = j == 0 ? x.data() : act_[j - 1].data();
      auto& gw = grads.weights[j];
      auto& gb = grads.bias[j];
      for (std::size_t i = 0; i < l.out_width; ++i) {
        const double d = delta_[j][i];
        if (d == 0.0) continue;
        kt.axpy(d, z_prev, gw.data() + i * l.in_width, l.in_width);
        gb[i] += d;
      }
      if (j == 0) break;
      auto& prev = delta_[j - 1];
      std::fill(prev.begin(), prev.end(), 0.0);
      for (std::size_t i = 0; i < l.out_width; ++i) {
        const double d = delta_[j][i];
        if (d != 0.0) kt.axpy(d, l.weights.data() + i * l.in_width, prev.data(), l.in_width);
      }
      for (std::size_t k = 0; k < prev.size(); ++k) {
        if (!(pre_[j - 1][k] > 0.0)) prev[k] = 0.0;
      }
    }
    return sq;
  }

 private:
  const MaskedNetwork& net_;
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> delta_;
};

LossAndGradients lossAndGradientsInternal(const MaskedNetwork& net, const Matrix& inputs,
                                          const Matrix& targets, double l2_lambda,
                                          std::span<const std::size_t> rows) {
  LossAndGradients out{0.0, Gradients::zerosLike(net)};
  const std::size_t n = rows.empty() ? inputs.rows : rows.size();
  if (n == 0) throw Error(ErrorKind::InvalidInput, "lossAndGradients: empty batch");
  Backprop bp(net);
  double sq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = rows.empty() ? s : rows[s];
    sq += bp.accumulate(inputs.row(r), targets.row(r), out.grads);
  }
  const double scale = 1.0 / static_cast<double>(n * targets.cols);
  out.loss = sq * scale;
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const DenseLayer& l = net.layer(j);
    auto& gw = out.grads.weights[j];
    auto& gb = out.grads.bias[j];
    for (std::size_t k = 0; k < gw.size(); ++k) {
      if (!l.weight_mask[k]) {
        gw[k] = 0.0;
        continue;
      }
      gw[k] = gw[k] * scale + 2.0 * l2_lambda * l.weights[k];
      out.loss += l2_lambda * l.weights[k] * l.weights[k];
    }
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = l.bias_mask[i] ? gb[i] * scale : 0.0;
  }
  return out;
}

}  // namespace

LossAndGradients lossAndGradients(const MaskedNetwork& net, const Matrix& inputs,
                                  const Matrix& targets, double l2_lambda,
                                  std::span<const std::size_t> rows) {
  if (inputs.cols != net.inputDim() || targets.cols != net.outputDim() ||
      inputs.rows != targets.rows) {
    throw Error(ErrorKind::InvalidInput, "lossAndGradients: data shape does not match network");
  }
  for (auto r : rows) {
    if (r >= inputs.rows) throw Error(ErrorKind::InvalidInput, "lossAndGradients: row out of range");
  }
  if (!net.inputScaling() && !net.outputScaling()) {
    return lossAndGradientsInternal(net, inputs, targets, l2_lambda, rows);
  }
  const InternalData d = toInternal(net, inputs, targets);
  return lossAndGradientsInternal(net, d.inputs, d.targets, l2_lambda, rows);
}

void adamStep(MaskedNetwork& net, const Gradients& grads, AdamState& state, double learning_rate) {
  ++state.step;
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& param, const std::vector<std::uint8_t>& mask,
                    const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      if (!mask[k]) continue;
      m[k] = AdamState::kBeta1 * m[k] + (1.0 - AdamState::kBeta1) * g[k];
      v[k] = AdamState::kBeta2 * v[k] + (1.0 - AdamState::kBeta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      param[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  };
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    DenseLayer& l = net.layer(j);
    update(l.weights, l.weight_mask, grads.weights[j], state.m.weights[j], state.v.weights[j]);
    update(l.bias, l.bias_mask, grads.bias[j], state.m.bias[j], state.v.bias[j]);
  }
}

void xavierInitialize(MaskedNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : net.layers()) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(l.in_width + l.out_width));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < l.weights.size(); ++k) {
      const double w = dist(rng);
      l.weights[k] = l.weight_mask[k] ? w : 0.0;
    }
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

Matrix predict(const MaskedNetwork& net, const Matrix& inputs) {
  Matrix out(inputs.rows, net.outputDim());
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    const auto y = net.forward(inputs.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

TrainResult trainToConvergence(MaskedNetwork& net, const Dataset& train, const Dataset& val,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (train.inputs.cols != net.inputDim() || train.targets.cols != net.outputDim() ||
      val.inputs.cols != net.inputDim() || val.targets.cols != net.outputDim()) {
    throw Error(ErrorKind::InvalidInput, "trainToConvergence: dataset dimensions do not match network");
  }
  TrainResult result;
  if (cfg.epochs == 0) return result;
  if (train.size() == 0 || val.size() == 0) {
    throw Error(ErrorKind::InvalidInput, "trainToConvergence: empty dataset");
  }

  const InternalData data = toInternal(net, train.inputs, train.targets);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam = AdamState::forNetwork(net);

  MaskedNetwork best = net;
  double best_mape = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, len);
      const auto lg = lossAndGradientsInternal(net, data.inputs, data.targets, cfg.l2_lambda, batch);
      if (!std::isfinite(lg.loss)) {
        throw TrainingDivergedError(epoch - 1, "non-finite loss in epoch " + std::to_string(epoch));
      }
      loss_sum += lg.loss * static_cast<double>(len);
      adamStep(net, lg.grads, adam, cfg.learning_rate);
    }
    const double val_mape = mape(val.targets, predict(net, val.inputs), cfg.mape_epsilon);
    if (!std::isfinite(val_mape)) {
      throw TrainingDivergedError(epoch - 1, "non-finite validation MAPE in epoch " +
                                                 std::to_string(epoch));
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), val_mape});
    if (val_mape < best_mape - cfg.early_stop_tolerance) {
      best_mape = val_mape;
      best = net;
      result.best_epoch = epoch;
      since_improvement = 0;
    } else if (++since_improvement >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  net = std::move(best);
  result.best_val_mape = best_mape;
  return result;
}

void writeHistoryCsv(const TrainResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_loss,val_mape\n";
  for (const auto& r : result.history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_mape << '\n';
  }
}

}  // namespace prunemip
