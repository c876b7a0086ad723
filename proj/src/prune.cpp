#include "prunemip/prune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include "prunemip/error.hpp"

namespace prunemip {

PruneMethod parsePruneMethod(const std::string& text) {
  if (text == "weight") return PruneMethod::Weight;
  if (text == "node") return PruneMethod::Node;
  throw Error(ErrorKind::InvalidInput, "unknown prune method '" + text + "' (expected weight|node)");
}

const char* toString(PruneMethod method) {
  return method == PruneMethod::Weight ? "weight" : "node";
}

void PruneConfig::validate() const {
  if (!(final_sparsity > 0.0 && final_sparsity < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "final sparsity must lie in (0,1)");
  }
  if (!(relative_rate > 0.0 && relative_rate < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "relative pruning rate must lie in (0,1)");
  }
  if (fine_tune) fine_tune_cfg.validate();
}

IterationSchedule numIterations(double final_sparsity, double relative_rate) {
  if (!(final_sparsity > 0.0 && final_sparsity < 1.0) ||
      !(relative_rate > 0.0 && relative_rate < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "numIterations: fractions must lie in (0,1)");
  }
  const double exact = std::log(1.0 - final_sparsity) / std::log(1.0 - relative_rate);
  IterationSchedule s;
  s.iterations = std::max(1, static_cast<int>(std::lround(exact)));
  s.rate = 1.0 - std::pow(1.0 - final_sparsity, 1.0 / s.iterations);
  return s;
}

namespace {

// ceil(rate * n), ignoring representation error of products such as 0.2 * 40.
std::size_t ceilCount(double rate, std::size_t n) {
  const double x = rate * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

void removeNode(MaskedNetwork& net, std::size_t layer, std::size_t neuron) {
  DenseLayer& l = net.layer(layer);
  for (std::size_t k = 0; k < l.in_width; ++k) l.maskWeight(neuron, k);
  l.maskBias(neuron);
  DenseLayer& next = net.layer(layer + 1);
  for (std::size_t r = 0; r < next.out_width; ++r) next.maskWeight(r, neuron);
}

double nodeScore(const DenseLayer& l, std::size_t neuron) {
  double s = 0.0;
  for (std::size_t k = 0; k < l.in_width; ++k) {
    if (l.live(neuron, k)) s += std::fabs(l.w(neuron, k));
  }
  return s;
}

// Live neurons of hidden layer j ordered by ascending score, ties by index.
std::vector<std::size_t> rankLiveNodes(const MaskedNetwork& net, std::size_t j) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < net.layer(j).out_width; ++i) {
    if (net.hiddenNeuronLive(j, i)) scored.emplace_back(nodeScore(net.layer(j), i), i);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> order;
  for (const auto& s : scored) order.push_back(s.second);
  return order;
}

}  // namespace

std::size_t pruneWeightsCount(MaskedNetwork& net, std::size_t count) {
  struct Entry {
    double magnitude;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Entry> entries;
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const DenseLayer& l = net.layer(j);
    for (std::size_t k = 0; k < l.weights.size(); ++k) {
      if (l.weight_mask[k]) entries.push_back({std::fabs(l.weights[k]), j, k});
    }
  }
  if (entries.empty()) throw Error(ErrorKind::NothingToPrune, "every weight is already masked");
  count = std::min(count, entries.size());
  auto less = [](const Entry& a, const Entry& b) {
    return std::tie(a.magnitude, a.layer, a.index) < std::tie(b.magnitude, b.layer, b.index);
  };
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(count),
                    entries.end(), less);
  for (std::size_t e = 0; e < count; ++e) {
    DenseLayer& l = net.layer(entries[e].layer);
    l.weight_mask[entries[e].index] = 0;
    l.weights[entries[e].index] = 0.0;
  }
  return count;
}

std::size_t pruneWeightsStep(MaskedNetwork& net, double rate) {
  if (!(rate > 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidInput, "prune rate must lie in (0,1)");
  const std::size_t unmasked = net.unmaskedWeights();
  if (unmasked == 0) throw Error(ErrorKind::NothingToPrune, "every weight is already masked");
  return pruneWeightsCount(net, ceilCount(rate, unmasked));
}

std::size_t pruneNodesToTargets(MaskedNetwork& net, const std::vector<std::size_t>& live_targets) {
  if (live_targets.size() != net.numHiddenLayers()) {
    throw Error(ErrorKind::InvalidInput, "node targets must list every hidden layer");
  }
  for (std::size_t j = 0; j < live_targets.size(); ++j) {
    if (live_targets[j] == 0) {
      throw Error(ErrorKind::LayerCollapse, "hidden layer " + std::to_string(j) +
                                                " would lose all of its neurons");
    }
  }
  std::size_t removed = 0;
  for (std::size_t j = 0; j < live_targets.size(); ++j) {
    const auto order = rankLiveNodes(net, j);
    if (order.size() <= live_targets[j]) continue;
    const std::size_t k = order.size() - live_targets[j];
    for (std::size_t e = 0; e < k; ++e) removeNode(net, j, order[e]);
    removed += k;
  }
  return removed;
}

std::size_t pruneNodesStep(MaskedNetwork& net, double rate) {
  if (!(rate > 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidInput, "prune rate must lie in (0,1)");
  std::vector<std::size_t> targets;
  for (std::size_t j = 0; j < net.numHiddenLayers(); ++j) {
    const std::size_t live = net.liveHiddenNeurons(j);
    const std::size_t k = ceilCount(rate, live);
    if (k >= live) {
      throw Error(ErrorKind::LayerCollapse, "hidden layer " + std::to_string(j) + " has " +
                                                std::to_string(live) + " live neurons; removing " +
                                                std::to_string(k) + " would empty it");
    }
    targets.push_back(live - k);
  }
  return pruneNodesToTargets(net, targets);
}

CleanReport cleanDeadNeurons(MaskedNetwork& net) {
  CleanReport report;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j + 1 < net.numLayers(); ++j) {
      DenseLayer& l = net.layer(j);
      DenseLayer& next = net.layer(j + 1);
      for (std::size_t i = 0; i < l.out_width; ++i) {
        bool incoming = false;
        for (std::size_t k = 0; k < l.in_width && !incoming; ++k) incoming = l.live(i, k);
        bool outgoing = false;
        for (std::size_t r = 0; r < next.out_width && !outgoing; ++r) outgoing = next.live(r, i);

        if (!outgoing) {
          if (!incoming && !l.bias_mask[i]) continue;
          for (std::size_t k = 0; k < l.in_width; ++k) l.maskWeight(i, k);
          l.maskBias(i);
          ++report.disconnected;
          changed = true;
        } else if (!incoming) {
          const double constant = relu(l.bias[i]);
          for (std::size_t r = 0; r < next.out_width; ++r) {
            if (!next.live(r, i)) continue;
            const double shift = next.w(r, i) * constant;
            if (shift != 0.0) {
              next.bias[r] += shift;
              next.bias_mask[r] = 1;
            }
            next.maskWeight(r, i);
          }
          l.maskBias(i);
          ++report.folded;
          changed = true;
        }
      }
    }
  }
  return report;
}

PruneResult iterativePrune(MaskedNetwork& net, const Dataset& train, const Dataset& val,
                           const PruneConfig& prune_cfg, const TrainConfig& train_cfg) {
  prune_cfg.validate();
  if (prune_cfg.retrain) train_cfg.validate();
  const IterationSchedule sched = numIterations(prune_cfg.final_sparsity, prune_cfg.relative_rate);

  // Targets are set relative to the unpruned architecture, so rounding never
  // accumulates across iterations and the last one lands on s_f.
  const std::size_t total_weights = net.totalWeights();
  std::vector<std::size_t> hidden_widths;
  for (std::size_t j = 0; j < net.numHiddenLayers(); ++j) hidden_widths.push_back(net.layer(j).out_width);

  PruneResult result;
  for (int it = 1; it <= sched.iterations; ++it) {
    if (prune_cfg.retrain) {
      TrainConfig cfg = train_cfg;
      cfg.seed = train_cfg.seed + static_cast<std::uint64_t>(it);
      trainToConvergence(net, train, val, cfg);
    }
    const double keep = it == sched.iterations
                            ? 1.0 - prune_cfg.final_sparsity
                            : std::pow(1.0 - sched.rate, static_cast<double>(it));
    if (prune_cfg.method == PruneMethod::Weight) {
      const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total_weights) * keep));
      const std::size_t unmasked = net.unmaskedWeights();
      if (unmasked > target) pruneWeightsCount(net, unmasked - target);
    } else {
      std::vector<std::size_t> targets;
      for (std::size_t w : hidden_widths) {
        targets.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(w) * keep)));
      }
      pruneNodesToTargets(net, targets);
    }
    IterationMetrics m;
    m.iteration = it;
    m.sparsity = prune_cfg.method == PruneMethod::Weight ? weightSparsity(net) : nodeSparsity(net);
    if (prune_cfg.clean_each_iteration) m.dead_neurons_cleaned = cleanDeadNeurons(net).total();
    m.val_mape = mape(val.targets, predict(net, val.inputs), train_cfg.mape_epsilon);
    result.iterations.push_back(m);
  }
  result.final_clean = cleanDeadNeurons(net);
  if (!result.iterations.empty()) {
    result.iterations.back().dead_neurons_cleaned += result.final_clean.total();
  }
  if (prune_cfg.fine_tune) {
    result.fine_tune = trainToConvergence(net, train, val, prune_cfg.fine_tune_cfg);
  }
  return result;
}

void writeIterationCsv(const PruneResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  out << "iteration,sparsity,val_mape,dead_neurons_cleaned\n";
  for (const auto& m : result.iterations) {
    out << m.iteration << ',' << m.sparsity << ',' << m.val_mape << ',' << m.dead_neurons_cleaned << '\n';
  }
}

}  // namespace prunemip
