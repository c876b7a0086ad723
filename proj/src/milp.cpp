#include "prunemip/milp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "prunemip/error.hpp"

namespace prunemip {

std::size_t MilpModel::addVariable(std::string var_name, VarKind kind, double lower, double upper) {
  vars.push_back({std::move(var_name), kind, lower, upper});
  return vars.size() - 1;
}

std::size_t MilpModel::numBinaries() const {
  return static_cast<std::size_t>(
      std::count_if(vars.begin(), vars.end(), [](const Variable& v) { return v.kind == VarKind::Binary; }));
}

std::optional<std::size_t> MilpModel::findVariable(const std::string& var_name) const {
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].name == var_name) return i;
  }
  return std::nullopt;
}

void MilpModel::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, m); };
  for (const auto& v : vars) {
    if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0 || v.lower > v.upper)) {
      fail("binary variable " + v.name + " must lie in [0,1]");
    }
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      fail("variable " + v.name + " has invalid bounds");
    }
  }
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const auto& t : terms) {
      if (t.var >= vars.size()) fail(where + " references an undeclared variable");
      if (t.coef == 0.0 || !std::isfinite(t.coef)) fail(where + " stores a zero or non-finite coefficient");
    }
  };
  for (const auto& c : cons) {
    check_terms(c.terms, "constraint " + c.name);
    if (!std::isfinite(c.rhs)) fail("constraint " + c.name + " has a non-finite right-hand side");
  }
  check_terms(objective.terms, "objective");
}

double MilpModel::objectiveValue(std::span<const double> x) const {
  double v = objective.constant;
  for (const auto& t : objective.terms) v += t.coef * x[t.var];
  return v;
}

double MilpModel::maxViolation(std::span<const double> x, bool integrality) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    worst = std::max({worst, vars[j].lower - x[j], x[j] - vars[j].upper});
    if (integrality && vars[j].kind == VarKind::Binary) {
      worst = std::max(worst, std::fabs(x[j] - std::round(x[j])));
    }
  }
  for (const auto& c : cons) {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * x[t.var];
    switch (c.sense) {
      case RowSense::LessEqual: worst = std::max(worst, lhs - c.rhs); break;
      case RowSense::GreaterEqual: worst = std::max(worst, c.rhs - lhs); break;
      case RowSense::Equal: worst = std::max(worst, std::fabs(lhs - c.rhs)); break;
    }
  }
  return worst;
}

namespace {

// Affine expression in model variables.
struct LinExpr {
  std::vector<Term> terms;
  double constant = 0.0;
};

std::string hiddenName(char prefix, std::size_t layer, std::size_t neuron) {
  return std::string(1, prefix) + std::to_string(layer) + "_" + std::to_string(neuron);
}

void checkTable(const MaskedNetwork& net, const BoundsTable& table, const Box& box) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Encoding, m); };
  if (box.lo.size() != net.inputDim() || box.hi.size() != net.inputDim()) fail("box does not match input_dim");
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]) || box.lo[i] > box.hi[i]) {
      fail("input box must be finite with lo <= hi");
    }
  }
  if (table.layers.size() != net.numLayers()) fail("bounds table depth does not match network");
  for (std::size_t j = 0; j < net.numLayers(); ++j) {
    const auto& lb = table.layers[j];
    if (lb.size() != net.layer(j).out_width || lb.upper.size() != lb.size()) {
      fail("bounds table width mismatch at layer " + std::to_string(j + 1));
    }
    for (std::size_t i = 0; i < lb.size(); ++i) {
      if (!std::isfinite(lb.lower[i]) || !std::isfinite(lb.upper[i]) || lb.lower[i] > lb.upper[i]) {
        fail("invalid bounds for layer " + std::to_string(j + 1) + " neuron " + std::to_string(i));
      }
    }
  }
}

std::vector<Term> resolveTerms(const MilpModel& model, const LinearExprSpec& spec, const std::string& where) {
  std::map<std::size_t, double> merged;
  for (const auto& [name, coef] : spec.terms) {
    const auto idx = model.findVariable(name);
    if (!idx) throw Error(ErrorKind::Schema, where + " references unknown variable '" + name + "'");
    merged[*idx] += coef;
  }
  std::vector<Term> terms;
  for (const auto& [var, coef] : merged) {
    if (coef != 0.0) terms.push_back({var, coef});
  }
  return terms;
}

}  // namespace

EncodeResult encodeBigM(const MaskedNetwork& raw, const BoundsTable& table, const Box& box,
                        const ObjectiveSpec& objective, const std::vector<ConstraintSpec>& extra) {
  const MaskedNetwork net =
      raw.inputScaling() || raw.outputScaling() ? raw.withScalingFolded() : raw;
  checkTable(net, table, box);

  EncodeResult result;
  MilpModel& model = result.model;
  PresolveStats& stats = result.presolve;
  const std::size_t hidden_layers = net.numHiddenLayers();

  // Classify every hidden neuron first; variables are laid out as inputs,
  // activations (layer-major), indicators, outputs.
  model.meta.hidden.resize(hidden_layers);
  for (std::size_t j = 0; j < hidden_layers; ++j) {
    const auto& lb = table.layers[j];
    auto& enc = model.meta.hidden[j];
    enc.resize(lb.size());
    for (std::size_t i = 0; i < lb.size(); ++i) {
      const double lo = lb.lower[i], hi = lb.upper[i];
      if (hi <= 0.0) {
        enc[i].status = NeuronStatus::StableOff;
        ++stats.stably_off_count;
      } else if (lo == hi) {
        enc[i].status = NeuronStatus::Constant;
        enc[i].constant = hi;
        ++stats.stably_on_count;
      } else if (lo >= 0.0) {
        enc[i].status = NeuronStatus::StableOn;
        ++stats.stably_on_count;
      } else {
        enc[i].status = NeuronStatus::Unstable;
      }
    }
  }

  for (std::size_t i = 0; i < net.inputDim(); ++i) {
    model.meta.inputs.push_back(
        model.addVariable("x" + std::to_string(i), VarKind::Continuous, box.lo[i], box.hi[i]));
  }
  for (std::size_t j = 0; j < hidden_layers; ++j) {
    const auto& lb = table.layers[j];
    for (std::size_t i = 0; i < lb.size(); ++i) {
      auto& e = model.meta.hidden[j][i];
      if (e.status == NeuronStatus::Unstable) {
        e.z = static_cast<long>(model.addVariable(hiddenName('z', j + 1, i), VarKind::Continuous, 0.0, lb.upper[i]));
      } else if (e.status == NeuronStatus::StableOn) {
        e.z = static_cast<long>(
            model.addVariable(hiddenName('z', j + 1, i), VarKind::Continuous, lb.lower[i], lb.upper[i]));
      }
    }
  }
  for (std::size_t j = 0; j < hidden_layers; ++j) {
    for (std::size_t i = 0; i < model.meta.hidden[j].size(); ++i) {
      auto& e = model.meta.hidden[j][i];
      if (e.status == NeuronStatus::Unstable) {
        e.delta = static_cast<long>(model.addVariable(hiddenName('d', j + 1, i), VarKind::Binary, 0.0, 1.0));
      }
    }
  }
  const auto& out_bounds = table.layers.back();
  for (std::size_t i = 0; i < net.outputDim(); ++i) {
    model.meta.outputs.push_back(model.addVariable("y" + std::to_string(i), VarKind::Continuous,
                                                   out_bounds.lower[i], out_bounds.upper[i]));
  }

  // Preactivation of neuron i of layer j as an affine expression of the
  // previous layer's variables, folding constant sources.
  auto preactivation = [&](std::size_t j, std::size_t i) {
    const DenseLayer& l = net.layer(j);
    LinExpr e;
    e.constant = l.bias[i];
    for (std::size_t k = 0; k < l.in_width; ++k) {
      if (!l.live(i, k)) continue;
      const double w = l.w(i, k);
      if (w == 0.0) continue;
      if (j == 0) {
        e.terms.push_back({model.meta.inputs[k], w});
        continue;
      }
      const NeuronEncoding& src = model.meta.hidden[j - 1][k];
      if (src.z >= 0) {
        e.terms.push_back({static_cast<std::size_t>(src.z), w});
      } else {
        e.constant += w * src.constant;
      }
    }
    return e;
  };

  // lhs_terms + coef_self * self (sense) rhs, with the expression moved left.
  auto add_row = [&](std::string row_name, std::size_t self, double self_coef, const LinExpr& p,
                     double p_sign, RowSense sense, double rhs) {
    Constraint c;
    c.name = std::move(row_name);
    c.sense = sense;
    c.terms.push_back({self, self_coef});
    for (const auto& t : p.terms) c.terms.push_back({t.var, p_sign * t.coef});
    c.rhs = rhs - p_sign * p.constant;
    model.cons.push_back(std::move(c));
  };

  for (std::size_t j = 0; j < hidden_layers; ++j) {
    const auto& lb = table.layers[j];
    for (std::size_t i = 0; i < lb.size(); ++i) {
      const NeuronEncoding& e = model.meta.hidden[j][i];
      const std::string tag = std::to_string(j + 1) + "_" + std::to_string(i);
      if (e.status == NeuronStatus::StableOn) {
        add_row("eq" + tag, static_cast<std::size_t>(e.z), 1.0, preactivation(j, i), -1.0, RowSense::Equal, 0.0);
      } else if (e.status == NeuronStatus::Unstable) {
        const auto z = static_cast<std::size_t>(e.z);
        const auto d = static_cast<std::size_t>(e.delta);
        const LinExpr p = preactivation(j, i);
        const double lo = lb.lower[i], hi = lb.upper[i];
        model.cons.push_back({"nn" + tag, {{z, 1.0}}, RowSense::GreaterEqual, 0.0});
        // z >= p
        add_row("ge" + tag, z, 1.0, p, -1.0, RowSense::GreaterEqual, 0.0);
        // z <= p - L (1 - delta)  <=>  z - p - L delta <= -L
        add_row("bm" + tag, z, 1.0, p, -1.0, RowSense::LessEqual, -lo);
        model.cons.back().terms.push_back({d, -lo});
        // z <= U delta
        model.cons.push_back({"ub" + tag, {{z, 1.0}, {d, -hi}}, RowSense::LessEqual, 0.0});
      }
    }
  }
  for (std::size_t i = 0; i < net.outputDim(); ++i) {
    add_row("out" + std::to_string(i), model.meta.outputs[i], 1.0, preactivation(net.numLayers() - 1, i),
            -1.0, RowSense::Equal, 0.0);
  }

  model.objective.sense = objective.sense;
  model.objective.terms = resolveTerms(model, objective.expr, "objective");
  model.objective.constant = objective.expr.constant;
  for (std::size_t c = 0; c < extra.size(); ++c) {
    const std::string row_name = extra[c].name.empty() ? "user" + std::to_string(c) : extra[c].name;
    auto terms = resolveTerms(model, extra[c].expr, "constraint " + row_name);
    if (terms.empty()) throw Error(ErrorKind::Encoding, "constraint " + row_name + " has no variable terms");
    model.cons.push_back({row_name, std::move(terms), extra[c].sense, extra[c].rhs - extra[c].expr.constant});
  }

  const std::size_t h = net.totalHiddenNeurons();
  stats.vars_before = net.inputDim() + 2 * h + net.outputDim();
  stats.cons_before = 4 * h + net.outputDim() + extra.size();
  stats.ints_before = h;
  stats.vars_after = model.vars.size();
  stats.cons_after = model.cons.size();
  stats.ints_after = model.numBinaries();
  model.validate();
  return result;
}

MilpModel lpRelaxation(const MilpModel& model) {
  MilpModel relaxed = model;
  for (auto& v : relaxed.vars) {
    if (v.kind == VarKind::Binary) {
      v.kind = VarKind::Continuous;
      v.lower = std::max(v.lower, 0.0);
      v.upper = std::min(v.upper, 1.0);
    }
  }
  return relaxed;
}

std::vector<double> completeFromInputs(const MilpModel& model, const MaskedNetwork& raw,
                                       std::span<const double> inputs) {
  const MaskedNetwork net =
      raw.inputScaling() || raw.outputScaling() ? raw.withScalingFolded() : raw;
  if (inputs.size() != model.meta.inputs.size()) {
    throw Error(ErrorKind::InvalidInput, "completeFromInputs: wrong number of inputs");
  }
  std::vector<double> x(model.vars.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) x[model.meta.inputs[i]] = inputs[i];
  const auto pre = net.preactivations(inputs);
  for (std::size_t j = 0; j < model.meta.hidden.size(); ++j) {
    for (std::size_t i = 0; i < model.meta.hidden[j].size(); ++i) {
      const NeuronEncoding& e = model.meta.hidden[j][i];
      const double p = pre[j][i];
      if (e.z >= 0) x[static_cast<std::size_t>(e.z)] = relu(p);
      if (e.delta >= 0) x[static_cast<std::size_t>(e.delta)] = p > 0.0 ? 1.0 : 0.0;
    }
  }
  for (std::size_t i = 0; i < model.meta.outputs.size(); ++i) x[model.meta.outputs[i]] = pre.back()[i];
  return x;
}

}  // namespace prunemip
