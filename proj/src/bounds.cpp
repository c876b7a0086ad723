#include "prunemip/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "prunemip/error.hpp"
#include "prunemip/kernels.hpp"

namespace prunemip {

const std::vector<double>& BoundsTable::sourceLower(std::size_t j) const {
  return j == 0 ? input.lo : layers[j - 1].act_lower;
}

const std::vector<double>& BoundsTable::sourceUpper(std::size_t j) const {
  return j == 0 ? input.hi : layers[j - 1].act_upper;
}

namespace {

void checkBox(const MaskedNetwork& net, const Box& box) {
  if (box.lo.size() != net.inputDim() || box.hi.size() != net.inputDim()) {
    throw Error(ErrorKind::InvalidInput, "box dimension does not match network input");
  }
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]) || box.lo[i] > box.hi[i]) {
      throw Error(ErrorKind::InvalidDomain, "box dimension " + std::to_string(i) +
                                                " must be finite with lo <= hi");
    }
  }
}

void checkFinite(const MaskedNetwork& net) {
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const DenseLayer& l = net.layer(j);
    const bool ok = std::all_of(l.weights.begin(), l.weights.end(), [](double v) { return std::isfinite(v); }) &&
                    std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); });
    if (!ok) throw Error(ErrorKind::InvalidNetwork, "layer " + std::to_string(j) + " has non-finite parameters");
  }
}

WidthStats stats(std::vector<double> widths) {
  WidthStats s;
  s.count = widths.size();
  if (widths.empty()) return s;
  s.mean = std::accumulate(widths.begin(), widths.end(), 0.0) / static_cast<double>(widths.size());
  s.max = *std::max_element(widths.begin(), widths.end());
  std::sort(widths.begin(), widths.end());
  const std::size_t n = widths.size();
  s.median = n % 2 ? widths[n / 2] : 0.5 * (widths[n / 2 - 1] + widths[n / 2]);
  return s;
}

}  // namespace

BoundsTable propagateIA(const MaskedNetwork& raw, const Box& box) {
  checkBox(raw, box);
  checkFinite(raw);
  const MaskedNetwork net =
      raw.inputScaling() || raw.outputScaling() ? raw.withScalingFolded() : raw;
  const auto& kt = kernels::active();
  BoundsTable table;
  table.input = box;
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const DenseLayer& l = net.layer(j);
    LayerBounds lb;
    lb.lower.resize(l.out_width);
    lb.upper.resize(l.out_width);
    kt.interval_affine(l.weights.data(), l.bias.data(), table.sourceLower(j).data(),
                       table.sourceUpper(j).data(), lb.lower.data(), lb.upper.data(), l.out_width,
                       l.in_width);
    lb.is_output = j + 1 == net.numLayers();
    lb.act_lower = lb.lower;
    lb.act_upper = lb.upper;
    if (!lb.is_output) {
      kt.relu_inplace(lb.act_lower.data(), lb.act_lower.size());
      kt.relu_inplace(lb.act_upper.data(), lb.act_upper.size());
    }
    table.layers.push_back(std::move(lb));
  }
  return table;
}

double widthIdentityResidual(const MaskedNetwork& raw, const BoundsTable& table) {
  const MaskedNetwork net =
      raw.inputScaling() || raw.outputScaling() ? raw.withScalingFolded() : raw;
  if (table.layers.size() != net.numLayers()) {
    throw Error(ErrorKind::InvalidInput, "bounds table does not match network depth");
  }
  const auto& kt = kernels::active();
  double residual = 0.0;
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const DenseLayer& l = net.layer(j);
    const auto& lo = table.sourceLower(j);
    const auto& hi = table.sourceUpper(j);
    std::vector<double> dz(lo.size());
    for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = hi[k] - lo[k];
    std::vector<double> predicted(l.out_width);
    kt.abs_affine(l.weights.data(), dz.data(), predicted.data(), l.out_width, l.in_width);
    for (std::size_t i = 0; i < l.out_width; ++i) {
      residual = std::max(residual, std::fabs(table.layers[j].preWidth(i) - predicted[i]));
    }
  }
  return residual;
}

TighteningReport checkMonotoneTightening(const MaskedNetwork& before, const MaskedNetwork& after,
                                         const Box& box, double tolerance) {
  if (before.widths() != after.widths()) {
    throw Error(ErrorKind::NotPurePruning, "networks have different architectures");
  }
  for (std::size_t j = 0; j < before.numLayers(); ++j) {
    const DenseLayer& b = before.layer(j);
    const DenseLayer& a = after.layer(j);
    for (std::size_t k = 0; k < b.weights.size(); ++k) {
      if (!a.weight_mask[k]) continue;
      if (!b.weight_mask[k] || a.weights[k] != b.weights[k]) {
        throw Error(ErrorKind::NotPurePruning, "layer " + std::to_string(j) + " weight " +
                                                   std::to_string(k) + " survived with a changed value");
      }
    }
    if (a.bias != b.bias || a.bias_mask != b.bias_mask) {
      throw Error(ErrorKind::NotPurePruning, "layer " + std::to_string(j) + " biases differ");
    }
  }
  const BoundsTable tb = propagateIA(before, box);
  const BoundsTable ta = propagateIA(after, box);
  TighteningReport report;
  report.tolerance = tolerance;
  for (std::size_t j = 0; j < tb.layers.size(); ++j) {
    double pre_v = -std::numeric_limits<double>::infinity();
    double act_v = -std::numeric_limits<double>::infinity();
    double tight = 0.0;
    for (std::size_t i = 0; i < tb.layers[j].size(); ++i) {
      const double dp = ta.layers[j].preWidth(i) - tb.layers[j].preWidth(i);
      const double dz = ta.layers[j].actWidth(i) - tb.layers[j].actWidth(i);
      pre_v = std::max(pre_v, dp);
      act_v = std::max(act_v, dz);
      tight = std::max(tight, -dp);
      if (dp > tolerance) ++report.violations;
      if (dz > tolerance) ++report.violations;
    }
    report.max_pre_violation.push_back(pre_v);
    report.max_act_violation.push_back(act_v);
    report.max_tightening.push_back(tight);
  }
  report.monotone = report.violations == 0;
  return report;
}

StrictTighteningVerdict checkStrictTightening(const MaskedNetwork& net, const Box& box,
                                              const WeightRef& weight, std::size_t output_index) {
  if (weight.layer >= net.numLayers() || weight.row >= net.layer(weight.layer).out_width ||
      weight.col >= net.layer(weight.layer).in_width || output_index >= net.outputDim()) {
    throw Error(ErrorKind::InvalidInput, "checkStrictTightening: index out of range");
  }
  const BoundsTable table = propagateIA(net, box);
  const std::size_t last = net.numLayers() - 1;
  StrictTighteningVerdict v;

  const DenseLayer& l = net.layer(weight.layer);
  v.conditions[0] = l.live(weight.row, weight.col) && l.w(weight.row, weight.col) != 0.0;
  const double source_width = table.sourceUpper(weight.layer)[weight.col] -
                              table.sourceLower(weight.layer)[weight.col];
  v.conditions[1] = source_width > 0.0;

  // Forward reachability from (layer, row) to the output coordinate over
  // nonzero live weights; `strict` additionally requires every neuron on the
  // path to be neither always off nor of zero preactivation width.
  auto reachable = [&](bool strict) {
    auto ok = [&](std::size_t j, std::size_t i) {
      if (!strict) return true;
      const LayerBounds& lb = table.layers[j];
      if (lb.preWidth(i) <= 0.0) return false;
      return lb.is_output || lb.upper[i] > 0.0;
    };
    std::vector<char> frontier(l.out_width, 0);
    frontier[weight.row] = ok(weight.layer, weight.row);
    for (std::size_t j = weight.layer; j < last; ++j) {
      const DenseLayer& next = net.layer(j + 1);
      std::vector<char> reach(next.out_width, 0);
      for (std::size_t r = 0; r < next.out_width; ++r) {
        if (!ok(j + 1, r)) continue;
        for (std::size_t a = 0; a < next.in_width && !reach[r]; ++a) {
          reach[r] = frontier[a] && next.live(r, a) && next.w(r, a) != 0.0;
        }
      }
      frontier = std::move(reach);
    }
    return frontier[output_index] != 0;
  };
  v.conditions[2] = reachable(false);
  v.conditions[3] = reachable(true);
  v.conditions_held = std::all_of(v.conditions.begin(), v.conditions.end(), [](bool c) { return c; });

  v.width_before = table.layers[last].actWidth(output_index);
  if (v.conditions[0]) {
    MaskedNetwork pruned = net;
    pruned.layer(weight.layer).maskWeight(weight.row, weight.col);
    const BoundsTable after = propagateIA(pruned, box);
    v.width_after = after.layers[last].actWidth(output_index);
    v.delta = v.width_before - v.width_after;
    v.strict_decrease_observed = v.width_after < v.width_before;
  } else {
    v.width_after = v.width_before;
  }
  return v;
}

WidthSummary widthSummary(const BoundsTable& table) {
  WidthSummary s;
  std::vector<double> hidden;
  for (const auto& lb : table.layers) {
    std::vector<double> w(lb.size());
    for (std::size_t i = 0; i < lb.size(); ++i) w[i] = lb.preWidth(i);
    if (!lb.is_output) hidden.insert(hidden.end(), w.begin(), w.end());
    s.layer.push_back(stats(std::move(w)));
  }
  s.hidden = stats(std::move(hidden));
  return s;
}

void writeBoundsCsv(const BoundsTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  out << "layer,neuron,L,U,zL,zU,width\n";
  for (std::size_t j = 0; j < table.layers.size(); ++j) {
    const auto& lb = table.layers[j];
    for (std::size_t i = 0; i < lb.size(); ++i) {
      out << j + 1 << ',' << i << ',' << lb.lower[i] << ',' << lb.upper[i] << ',' << lb.act_lower[i]
          << ',' << lb.act_upper[i] << ',' << lb.preWidth(i) << '\n';
    }
  }
}

void writeWidthSummaryCsv(const WidthSummary& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  out << "layer,count,mean_width,median_width,max_width\n";
  for (std::size_t j = 0; j < summary.layer.size(); ++j) {
    const auto& s = summary.layer[j];
    out << j + 1 << ',' << s.count << ',' << s.mean << ',' << s.median << ',' << s.max << '\n';
  }
  const auto& h = summary.hidden;
  out << "hidden," << h.count << ',' << h.mean << ',' << h.median << ',' << h.max << '\n';
}

}  // namespace prunemip
