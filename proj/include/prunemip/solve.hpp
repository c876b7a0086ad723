#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prunemip/milp.hpp"

namespace prunemip {

/// Column-wise LP data for the simplex engine. Rows become logical variables
/// r_i = a_i x whose bounds encode the row sense, so the working system is
/// [A  -I] (x, r) = 0. Binaries are treated as continuous.
struct LpProblem {
  std::size_t num_cols = 0;
  std::size_t num_rows = 0;
  std::vector<std::size_t> col_start;  // CSC, num_cols + 1 entries
  std::vector<std::size_t> col_row;
  std::vector<double> col_val;
  std::vector<double> lower, upper;    // structural bounds
  std::vector<double> row_lower, row_upper;
  std::vector<double> cost;            // objective in minimisation form
  double sense_sign = 1.0;             // -1 for maximisation
  double constant = 0.0;

  explicit LpProblem(const MilpModel& model);
  /// Objective of structural point x in the model's own sense.
  double objective(std::span<const double> x) const;
};

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

/// Simplex basis over num_cols + num_rows variables (logicals last).
struct Basis {
  std::vector<std::size_t> head;  // basic variable in each row position
  std::vector<VarState> state;
  /// Optional dense basis inverse matching `head`, reused instead of
  /// refactoring when present.
  std::shared_ptr<const std::vector<double>> inverse;
  std::size_t updates = 0;  // product-form updates applied since the last refactor
  bool empty() const { return head.empty(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, TimeLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;         // in the model's sense
  std::vector<double> x;          // structural values
  std::size_t iterations = 0;
  Basis basis;
};

struct SimplexOptions {
  std::size_t max_iterations = 0;  // 0: automatic
  std::size_t refactor_interval = 100;
  std::size_t degenerate_before_bland = 50;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  bool keep_inverse = false;  // return the basis inverse in LpResult::basis
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Bounded-variable revised primal simplex. Phase one minimises the sum of
/// infeasibilities from whatever basis it starts from, so any hint is usable.
LpResult simplexSolve(const LpProblem& lp, std::span<const double> lower, std::span<const double> upper,
                      const Basis* hint = nullptr, const SimplexOptions& options = {});
LpResult simplexSolve(const LpProblem& lp, const Basis* hint = nullptr, const SimplexOptions& options = {});
/// Throws Error(InvalidInput) if the model still has binary variables.
LpResult simplexSolve(const MilpModel& lp, const Basis* hint = nullptr, const SimplexOptions& options = {});

const char* toString(LpStatus s);

enum class SolveStatus { Optimal, Infeasible, TimeLimit, Unbounded };
const char* toString(SolveStatus s);

struct SolveLimits {
  double time_limit = 300.0;  // seconds
  double gap = 1e-6;          // absolute
  std::size_t heuristic_interval = 10;
  std::size_t max_nodes = 0;  // 0: unlimited
};

struct SolveStats {
  std::size_t bb_nodes = 0;
  std::size_t simplex_iterations = 0;
  double root_bound = 0.0;
  double root_gap = 0.0;
  double best_bound = 0.0;
  double wall_time = 0.0;
  SolveStatus status = SolveStatus::Infeasible;

  double iterationsPerSecond() const {
    return wall_time > 0.0 ? static_cast<double>(simplex_iterations) / wall_time : 0.0;
  }
};

struct SolveResult {
  bool has_incumbent = false;
  double objective = 0.0;
  std::vector<double> x;
  SolveStats stats;
};

/// Proposes a full primal point from a node's LP solution; proposals are
/// checked against the model before they are accepted.
using IncumbentHeuristic = std::function<std::optional<std::vector<double>>(std::span<const double> lp_x)>;

/// Best-bound branch and bound on the most fractional binary, with an
/// LP-rounding heuristic. One log line per node is written to `log` if given.
SolveResult branchAndBound(const MilpModel& model, const SolveLimits& limits = {}, std::ostream* log = nullptr,
                           const IncumbentHeuristic& heuristic = {});

/// Heuristic that maps the LP point's inputs through the network.
IncumbentHeuristic forwardPassHeuristic(const MilpModel& model, const MaskedNetwork& net);

/// |objective(incumbent) - LP relaxation optimum|; Error(Encoding) if the
/// relaxation is infeasible.
double rootGap(const MilpModel& model, std::span<const double> incumbent);

void writeSolveStatsCsv(const SolveStats& stats, double objective, const std::filesystem::path& path);

}  // namespace prunemip
