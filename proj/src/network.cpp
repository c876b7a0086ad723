#include "prunemip/network.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "prunemip/error.hpp"
#include "prunemip/kernels.hpp"

namespace prunemip {

DenseLayer::DenseLayer(std::size_t in, std::size_t out)
    : in_width(in),
      out_width(out),
      weights(in * out, 0.0),
      bias(out, 0.0),
      weight_mask(in * out, 1),
      bias_mask(out, 1) {}

void DenseLayer::maskWeight(std::size_t row, std::size_t col) {
  weight_mask[row * in_width + col] = 0;
  weights[row * in_width + col] = 0.0;
}

void DenseLayer::maskBias(std::size_t row) {
  bias_mask[row] = 0;
  bias[row] = 0.0;
}

MaskedNetwork::MaskedNetwork(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw Error(ErrorKind::InvalidInput, "network needs at least two widths");
  for (std::size_t w : widths) {
    if (w == 0) throw Error(ErrorKind::InvalidInput, "layer widths must be positive");
  }
  input_dim_ = widths.front();
  output_dim_ = widths.back();
  for (std::size_t j = 1; j < widths.size(); ++j) layers_.emplace_back(widths[j - 1], widths[j]);
}

MaskedNetwork::MaskedNetwork(std::size_t input_dim, std::size_t output_dim,
                             std::vector<DenseLayer> layers)
    : input_dim_(input_dim), output_dim_(output_dim), layers_(std::move(layers)) {
  validate();
}

std::vector<std::size_t> MaskedNetwork::widths() const {
  std::vector<std::size_t> w{input_dim_};
  for (const auto& l : layers_) w.push_back(l.out_width);
  return w;
}

void MaskedNetwork::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Validation, msg); };
  if (layers_.empty()) fail("network has no layers");
  if (input_dim_ == 0 || output_dim_ == 0) fail("input_dim and output_dim must be positive");
  std::size_t expected_in = input_dim_;
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const DenseLayer& l = layers_[j];
    const std::string where = "layers[" + std::to_string(j) + "]";
    if (l.in_width != expected_in) {
      fail(where + ": input width " + std::to_string(l.in_width) + " does not match previous width " +
           std::to_string(expected_in));
    }
    if (l.out_width == 0) fail(where + ": zero output width");
    if (l.weights.size() != l.in_width * l.out_width || l.weight_mask.size() != l.weights.size()) {
      fail(where + ": weight matrix size mismatch");
    }
    if (l.bias.size() != l.out_width || l.bias_mask.size() != l.out_width) {
      fail(where + ": bias size mismatch");
    }
    for (std::size_t k = 0; k < l.weights.size(); ++k) {
      if (!std::isfinite(l.weights[k])) fail(where + ": non-finite weight");
      if (l.weight_mask[k] > 1) fail(where + ": weight mask entries must be 0 or 1");
      if (l.weight_mask[k] == 0 && l.weights[k] != 0.0) {
        fail(where + ".weights[" + std::to_string(k / l.in_width) + "][" +
             std::to_string(k % l.in_width) + "]: masked weight has nonzero value");
      }
    }
    for (std::size_t i = 0; i < l.out_width; ++i) {
      if (!std::isfinite(l.bias[i])) fail(where + ": non-finite bias");
      if (l.bias_mask[i] > 1) fail(where + ": bias mask entries must be 0 or 1");
      if (l.bias_mask[i] == 0 && l.bias[i] != 0.0) {
        fail(where + ".bias[" + std::to_string(i) + "]: masked bias has nonzero value");
      }
    }
    expected_in = l.out_width;
  }
  if (expected_in != output_dim_) fail("last layer width does not match output_dim");
  auto check_scaling = [&](const std::optional<AffineScaling>& s, std::size_t n, const char* name) {
    if (!s) return;
    if (s->lo.size() != n || s->hi.size() != n) fail(std::string(name) + ": size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s->hi[i] > s->lo[i])) fail(std::string(name) + ": requires lo < hi");
    }
  };
  check_scaling(input_scaling_, input_dim_, "input_scaling");
  check_scaling(output_scaling_, output_dim_, "output_scaling");
}

std::vector<std::vector<double>> MaskedNetwork::preactivations(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw Error(ErrorKind::InvalidInput, "forward: expected " + std::to_string(input_dim_) +
                                             " inputs, got " + std::to_string(x.size()));
  }
  const auto& kt = kernels::active();
  std::vector<double> z(x.begin(), x.end());
  if (input_scaling_) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = (z[i] - input_scaling_->lo[i]) / (input_scaling_->hi[i] - input_scaling_->lo[i]);
    }
  }
  std::vector<std::vector<double>> pre;
  pre.reserve(layers_.size());
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const DenseLayer& l = layers_[j];
    std::vector<double> p(l.out_width);
    kt.affine(l.weights.data(), l.bias.data(), z.data(), p.data(), l.out_width, l.in_width);
    z = p;
    if (j + 1 < layers_.size()) kt.relu_inplace(z.data(), z.size());
    pre.push_back(std::move(p));
  }
  if (output_scaling_) {
    auto& out = pre.back();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = out[i] * (output_scaling_->hi[i] - output_scaling_->lo[i]) + output_scaling_->lo[i];
    }
  }
  return pre;
}

std::vector<double> MaskedNetwork::forward(std::span<const double> x) const {
  auto pre = preactivations(x);
  return std::move(pre.back());
}

MaskedNetwork MaskedNetwork::withScalingFolded() const {
  MaskedNetwork out = *this;
  out.input_scaling_.reset();
  out.output_scaling_.reset();
  if (input_scaling_) {
    DenseLayer& first = out.layers_.front();
    for (std::size_t i = 0; i < first.out_width; ++i) {
      double shift = 0.0;
      for (std::size_t k = 0; k < first.in_width; ++k) {
        if (!first.live(i, k)) continue;
        const double range = input_scaling_->hi[k] - input_scaling_->lo[k];
        shift += first.w(i, k) * input_scaling_->lo[k] / range;
        first.w(i, k) /= range;
      }
      if (shift != 0.0) {
        first.bias[i] -= shift;
        first.bias_mask[i] = 1;
      }
    }
  }
  if (output_scaling_) {
    DenseLayer& last = out.layers_.back();
    for (std::size_t i = 0; i < last.out_width; ++i) {
      const double range = output_scaling_->hi[i] - output_scaling_->lo[i];
      for (std::size_t k = 0; k < last.in_width; ++k) last.w(i, k) *= range;
      last.bias[i] = last.bias[i] * range + output_scaling_->lo[i];
      if (last.bias[i] != 0.0) last.bias_mask[i] = 1;
    }
  }
  return out;
}

std::size_t MaskedNetwork::totalWeights() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size();
  return n;
}

std::size_t MaskedNetwork::unmaskedWeights() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    for (auto m : l.weight_mask) n += m;
  }
  return n;
}

bool MaskedNetwork::hiddenNeuronLive(std::size_t layer, std::size_t neuron) const {
  const DenseLayer& l = layers_[layer];
  if (l.bias_mask[neuron]) return true;
  for (std::size_t k = 0; k < l.in_width; ++k) {
    if (l.live(neuron, k)) return true;
  }
  const DenseLayer& next = layers_[layer + 1];
  for (std::size_t r = 0; r < next.out_width; ++r) {
    if (next.live(r, neuron)) return true;
  }
  return false;
}

std::size_t MaskedNetwork::liveHiddenNeurons(std::size_t layer) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < layers_[layer].out_width; ++i) n += hiddenNeuronLive(layer, i);
  return n;
}

std::size_t MaskedNetwork::totalHiddenNeurons() const {
  std::size_t n = 0;
  for (std::size_t j = 0; j + 1 < layers_.size(); ++j) n += layers_[j].out_width;
  return n;
}

double weightSparsity(const MaskedNetwork& net) {
  const std::size_t total = net.totalWeights();
  if (total == 0) return 0.0;
  return static_cast<double>(total - net.unmaskedWeights()) / static_cast<double>(total);
}

double nodeSparsity(const MaskedNetwork& net) {
  const std::size_t total = net.totalHiddenNeurons();
  if (total == 0) return 0.0;
  std::size_t live = 0;
  for (std::size_t j = 0; j + 1 < net.numLayers(); ++j) live += net.liveHiddenNeurons(j);
  return static_cast<double>(total - live) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// JSON interchange

namespace {

void appendNumber(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void appendVector(std::string& out, std::span<const double> v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    appendNumber(out, v[i]);
  }
  out += ']';
}

void appendMask(std::string& out, std::span<const std::uint8_t> v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i] ? '1' : '0';
  }
  out += ']';
}

template <typename T>
void appendMatrix(std::string& out, const std::vector<T>& flat, std::size_t rows, std::size_t cols) {
  out += '[';
  for (std::size_t r = 0; r < rows; ++r) {
    if (r) out += ',';
    std::span<const T> row(flat.data() + r * cols, cols);
    if constexpr (std::is_same_v<T, double>) {
      appendVector(out, row);
    } else {
      appendMask(out, row);
    }
  }
  out += ']';
}

void appendScaling(std::string& out, const char* key, const AffineScaling& s) {
  out += ",\n  \"";
  out += key;
  out += "\": {\"lo\": ";
  appendVector(out, s.lo);
  out += ", \"hi\": ";
  appendVector(out, s.hi);
  out += '}';
}

using nlohmann::json;

[[noreturn]] void parseFail(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::Parse, "field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) parseFail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) parseFail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::size_t readCount(const json& v, const std::string& field) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    parseFail(field, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

double readNumber(const json& v, const std::string& field) {
  if (!v.is_number()) parseFail(field, "expected a number");
  return v.get<double>();
}

std::vector<double> readVector(const json& v, const std::string& field) {
  if (!v.is_array()) parseFail(field, "expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(readNumber(v[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::uint8_t readBit(const json& v, const std::string& field) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (!v.is_number_integer()) parseFail(field, "expected 0 or 1");
  const auto b = v.get<long long>();
  if (b != 0 && b != 1) parseFail(field, "expected 0 or 1");
  return static_cast<std::uint8_t>(b);
}

template <typename T, typename Reader>
std::vector<T> readMatrix(const json& v, const std::string& field, std::size_t& rows,
                          std::size_t& cols, Reader reader) {
  if (!v.is_array()) parseFail(field, "expected an array of rows");
  rows = v.size();
  cols = rows ? (v[0].is_array() ? v[0].size() : 0) : 0;
  std::vector<T> flat;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!v[r].is_array()) parseFail(rf, "expected an array");
    if (v[r].size() != cols) {
      throw Error(ErrorKind::Validation, rf + ": ragged row (expected " + std::to_string(cols) +
                                             " entries)");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      flat.push_back(reader(v[r][c], rf + "[" + std::to_string(c) + "]"));
    }
  }
  return flat;
}

AffineScaling readScaling(const json& v, const std::string& field) {
  AffineScaling s;
  s.lo = readVector(require(v, "lo", field), field + ".lo");
  s.hi = readVector(require(v, "hi", field), field + ".hi");
  return s;
}

}  // namespace

std::string networkToJson(const MaskedNetwork& net) {
  std::string out = "{\n  \"input_dim\": " + std::to_string(net.inputDim()) +
                    ",\n  \"output_dim\": " + std::to_string(net.outputDim()) +
                    ",\n  \"layers\": [";
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const DenseLayer& l = net.layer(j);
    out += j ? ",\n    {" : "\n    {";
    out += "\"weights\": ";
    appendMatrix(out, l.weights, l.out_width, l.in_width);
    out += ", \"bias\": ";
    appendVector(out, l.bias);
    out += ", \"weight_mask\": ";
    appendMatrix(out, l.weight_mask, l.out_width, l.in_width);
    out += ", \"bias_mask\": ";
    appendMask(out, l.bias_mask);
    out += '}';
  }
  out += "\n  ]";
  if (net.inputScaling()) appendScaling(out, "input_scaling", *net.inputScaling());
  if (net.outputScaling()) appendScaling(out, "output_scaling", *net.outputScaling());
  out += "\n}\n";
  return out;
}

MaskedNetwork networkFromJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("malformed JSON: ") + e.what());
  }
  const std::size_t input_dim = readCount(require(doc, "input_dim", ""), "input_dim");
  const std::size_t output_dim = readCount(require(doc, "output_dim", ""), "output_dim");
  const json& jl = require(doc, "layers", "");
  if (!jl.is_array()) parseFail("layers", "expected an array");
  std::vector<DenseLayer> layers;
  for (std::size_t j = 0; j < jl.size(); ++j) {
    const std::string p = "layers[" + std::to_string(j) + "]";
    DenseLayer l;
    std::size_t rows = 0, cols = 0, mrows = 0, mcols = 0;
    l.weights = readMatrix<double>(require(jl[j], "weights", p), p + ".weights", rows, cols,
                                   readNumber);
    l.weight_mask = readMatrix<std::uint8_t>(require(jl[j], "weight_mask", p),
                                             p + ".weight_mask", mrows, mcols, readBit);
    if (rows != mrows || cols != mcols) {
      throw Error(ErrorKind::Validation, p + ": weight_mask shape differs from weights");
    }
    l.out_width = rows;
    l.in_width = cols;
    l.bias = readVector(require(jl[j], "bias", p), p + ".bias");
    const json& bm = require(jl[j], "bias_mask", p);
    if (!bm.is_array()) parseFail(p + ".bias_mask", "expected an array");
    for (std::size_t i = 0; i < bm.size(); ++i) {
      l.bias_mask.push_back(readBit(bm[i], p + ".bias_mask[" + std::to_string(i) + "]"));
    }
    layers.push_back(std::move(l));
  }
  MaskedNetwork net;
  net = MaskedNetwork(input_dim, output_dim, std::move(layers));
  if (doc.contains("input_scaling")) {
    net.setInputScaling(readScaling(doc["input_scaling"], "input_scaling"));
  }
  if (doc.contains("output_scaling")) {
    net.setOutputScaling(readScaling(doc["output_scaling"], "output_scaling"));
  }
  net.validate();
  return net;
}

void saveNetwork(const MaskedNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << networkToJson(net);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

MaskedNetwork loadNetwork(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return networkFromJson(ss.str());
}

}  // namespace prunemip
