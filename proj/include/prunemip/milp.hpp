#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "prunemip/bounds.hpp"
#include "prunemip/data.hpp"
#include "prunemip/network.hpp"

namespace prunemip {

enum class VarKind { Continuous, Binary };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class ObjectiveSense { Minimize, Maximize };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = 0.0;
};

struct Term {
  std::size_t var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

struct Objective {
  ObjectiveSense sense = ObjectiveSense::Minimize;
  std::vector<Term> terms;
  double constant = 0.0;
};

enum class NeuronStatus { Unstable, StableOn, StableOff, Constant };

/// How one hidden neuron was encoded. `z` and `delta` are variable indices
/// or -1 when the neuron was folded away.
struct NeuronEncoding {
  NeuronStatus status = NeuronStatus::Unstable;
  long z = -1;
  long delta = -1;
  double constant = 0.0;  // value of the activation when status is StableOff or Constant
};

struct EncodingMetadata {
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;
  std::vector<std::vector<NeuronEncoding>> hidden;  // [hidden layer][neuron]
};

struct MilpModel {
  std::string name = "prunemip";
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  Objective objective;
  EncodingMetadata meta;

  std::size_t addVariable(std::string name, VarKind kind, double lower, double upper);
  std::size_t numBinaries() const;
  std::optional<std::size_t> findVariable(const std::string& name) const;
  /// Throws Error(Validation) if a binary is not on [0,1], a term references an
  /// undeclared variable, or a coefficient is zero.
  void validate() const;
  double objectiveValue(std::span<const double> x) const;
  /// Largest bound, row or (optionally) integrality violation of point x.
  double maxViolation(std::span<const double> x, bool integrality = true) const;
};

struct PresolveStats {
  std::size_t vars_before = 0, vars_after = 0;
  std::size_t cons_before = 0, cons_after = 0;
  std::size_t ints_before = 0, ints_after = 0;
  std::size_t stably_off_count = 0;
  std::size_t stably_on_count = 0;

  static double reductionPercent(std::size_t before, std::size_t after) {
    return before ? 100.0 * (1.0 - static_cast<double>(after) / static_cast<double>(before)) : 0.0;
  }
};

/// Linear expression over named model variables (x{i}, y{i}, z{j}_{i}, d{j}_{i}).
struct LinearExprSpec {
  std::vector<std::pair<std::string, double>> terms;
  double constant = 0.0;
};

struct ObjectiveSpec {
  ObjectiveSense sense = ObjectiveSense::Minimize;
  LinearExprSpec expr;
};

/// expr (sense) rhs
struct ConstraintSpec {
  std::string name;
  LinearExprSpec expr;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

struct EncodeResult {
  MilpModel model;
  PresolveStats presolve;
};

/// Big-M MILP of the network over `box` with the bounds in `table`, plus the
/// objective and extra linear constraints. Stable neurons are eliminated
/// while encoding: U <= 0 fixes the activation to 0, L >= 0 makes it an
/// affine equality, L == U folds it to a constant. Masked weights add no
/// coefficients.
EncodeResult encodeBigM(const MaskedNetwork& net, const BoundsTable& table, const Box& box,
                        const ObjectiveSpec& objective,
                        const std::vector<ConstraintSpec>& extra_constraints = {});

/// Same model with every binary relaxed to a continuous [0,1] variable.
MilpModel lpRelaxation(const MilpModel& model);

/// Completes a full primal point from input values by running the network
/// forward and setting activations, indicators and outputs to match.
std::vector<double> completeFromInputs(const MilpModel& model, const MaskedNetwork& net,
                                       std::span<const double> inputs);

std::string toMps(const MilpModel& model);
std::string toLp(const MilpModel& model);
void exportMps(const MilpModel& model, const std::filesystem::path& path);
void exportLp(const MilpModel& model, const std::filesystem::path& path);

/// Objective, constraints and optional input-bound overrides read from the
/// line-based problem file format (see README).
struct ProblemSpec {
  ObjectiveSpec objective;
  std::vector<ConstraintSpec> constraints;
  std::vector<std::tuple<std::string, double, double>> input_bounds;

  /// Default problem: minimize y0.
  static ProblemSpec minimizeOutput(std::size_t index = 0);
  /// Box with the input_bounds overrides applied; names must be x{i}.
  Box applyBounds(const Box& box) const;
};

ProblemSpec parseProblemSpec(const std::string& text);
ProblemSpec loadProblemSpec(const std::filesystem::path& path);

}  // namespace prunemip
