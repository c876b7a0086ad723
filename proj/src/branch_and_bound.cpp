#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <queue>

#include "prunemip/error.hpp"
#include "prunemip/solve.hpp"

namespace prunemip {

const char* toString(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kAcceptTol = 1e-6;
constexpr double kInverseBudget = 256.0 * 1024 * 1024;

struct Node {
  double bound = 0.0;  // parent LP value, minimisation form
  std::size_t depth = 0;
  std::size_t seq = 0;
  std::vector<std::int8_t> fix;  // per binary: -1 free, 0, 1
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

class Search {
 public:
  Search(const MilpModel& model, const SolveLimits& limits, std::ostream* log, const IncumbentHeuristic& heuristic)
      : model_(model), lp_(model), limits_(limits), log_(log), heuristic_(heuristic) {
    for (std::size_t j = 0; j < model.vars.size(); ++j) {
      if (model.vars[j].kind == VarKind::Binary) binaries_.push_back(j);
    }
    const double bytes = 8.0 * static_cast<double>(lp_.num_rows) * static_cast<double>(lp_.num_rows);
    inverse_cap_ = static_cast<std::size_t>(std::max(4.0, 2.0 * kInverseBudget / std::max(bytes, 1.0)));
    start_ = std::chrono::steady_clock::now();
    deadline_ = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                             std::chrono::duration<double>(limits.time_limit));
  }

  SolveResult run() {
    SolveResult out;
    Node root;
    root.fix.assign(binaries_.size(), -1);
    root.bound = -std::numeric_limits<double>::infinity();
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(std::move(root));
    bool root_done = false, timed_out = false, unbounded = false;

    while (!open.empty()) {
      if (std::chrono::steady_clock::now() > deadline_ ||
          (limits_.max_nodes && stats_.bb_nodes >= limits_.max_nodes)) {
        timed_out = true;
        break;
      }
      Node node = open.top();
      open.pop();
      if (have_inc_ && node.bound >= inc_value_ - limits_.gap) continue;

      std::vector<double> lo = lp_.lower, hi = lp_.upper;
      for (std::size_t b = 0; b < binaries_.size(); ++b) {
        if (node.fix[b] >= 0) lo[binaries_[b]] = hi[binaries_[b]] = node.fix[b];
      }
      SimplexOptions opt;
      opt.deadline = deadline_;
      opt.keep_inverse = open.size() < inverse_cap_;
      LpResult lp = simplexSolve(lp_, lo, hi, node.basis.get(), opt);
      node.basis.reset();
      stats_.simplex_iterations += lp.iterations;
      ++stats_.bb_nodes;
      const std::size_t id = stats_.bb_nodes - 1;
      if (lp.status == LpStatus::TimeLimit) {
        timed_out = true;
        open.push(std::move(node));
        break;
      }
      if (lp.status == LpStatus::Unbounded) {
        if (!root_done) {
          unbounded = true;
          break;
        }
        continue;
      }
      const bool solved = lp.status == LpStatus::Optimal;
      const double value = solved ? internal(lp.objective) : std::numeric_limits<double>::infinity();
      if (!root_done) {
        root_done = true;
        root_bound_ = value;
        stats_.root_bound = solved ? lp.objective : std::numeric_limits<double>::quiet_NaN();
      }
      if (log_) logNode(id, node, solved, lp.objective, std::max(node.bound, root_bound_));
      if (!solved) continue;
      if (have_inc_ && value >= inc_value_ - limits_.gap) continue;

      if (heuristic_) {
        if (auto proposal = heuristic_(lp.x)) consider(*proposal);
      }
      const long branch = mostFractional(lp.x);
      if (branch < 0) {
        acceptIntegral(lp.x, lo, hi, lp.basis);
        continue;
      }
      if (id == 0 || (limits_.heuristic_interval && id % limits_.heuristic_interval == 0)) {
        roundingHeuristic(lp.x, lp.basis);
      }
      if (have_inc_ && value >= inc_value_ - limits_.gap) continue;

      auto basis = std::make_shared<const Basis>(std::move(lp.basis));
      const auto b = static_cast<std::size_t>(branch);
      for (std::int8_t v : {std::int8_t{0}, std::int8_t{1}}) {
        Node child;
        child.bound = value;
        child.depth = node.depth + 1;
        child.seq = ++seq_;
        child.fix = node.fix;
        child.fix[b] = v;
        child.basis = basis;
        open.push(std::move(child));
      }
    }

    stats_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (unbounded) {
      stats_.status = SolveStatus::Unbounded;
    } else if (timed_out) {
      stats_.status = SolveStatus::TimeLimit;
      double bound = have_inc_ ? inc_value_ : std::numeric_limits<double>::infinity();
      if (!open.empty()) bound = std::min(bound, std::max(open.top().bound, root_bound_));
      stats_.best_bound = external(bound);
    } else {
      stats_.status = have_inc_ ? SolveStatus::Optimal : SolveStatus::Infeasible;
    }
    if (stats_.bb_nodes == 0) stats_.bb_nodes = 1;
    if (have_inc_) {
      out.has_incumbent = true;
      out.x = inc_x_;
      out.objective = model_.objectiveValue(inc_x_);
      if (stats_.status == SolveStatus::Optimal) stats_.best_bound = out.objective;
      stats_.root_gap = std::isfinite(root_bound_) ? std::fabs(inc_value_ - root_bound_) : 0.0;
    } else {
      stats_.root_gap = std::numeric_limits<double>::quiet_NaN();
      if (stats_.status == SolveStatus::Infeasible) stats_.best_bound = std::numeric_limits<double>::quiet_NaN();
    }
    out.stats = stats_;
    return out;
  }

 private:
  double internal(double objective) const { return lp_.sense_sign * objective; }
  double external(double value) const { return lp_.sense_sign * value; }

  long mostFractional(const std::vector<double>& x) const {
    long best = -1;
    double best_frac = kIntTol;
    for (std::size_t b = 0; b < binaries_.size(); ++b) {
      const double v = x[binaries_[b]];
      const double frac = std::fabs(v - std::round(v));
      if (frac > best_frac) {
        best_frac = frac;
        best = static_cast<long>(b);
      }
    }
    return best;
  }

  bool consider(std::vector<double> x) {
    if (x.size() != model_.vars.size()) return false;
    for (std::size_t j : binaries_) x[j] = std::round(x[j]);
    if (model_.maxViolation(x) > kAcceptTol) return false;
    const double value = internal(model_.objectiveValue(x));
    if (have_inc_ && value >= inc_value_) return false;
    have_inc_ = true;
    inc_value_ = value;
    inc_x_ = std::move(x);
    return true;
  }

  // LP solution already integral: snap the binaries, re-solving with them
  // fixed if snapping leaves a residual.
  void acceptIntegral(const std::vector<double>& x, std::vector<double> lo, std::vector<double> hi,
                      const Basis& basis) {
    if (consider(x)) return;
    for (std::size_t j : binaries_) lo[j] = hi[j] = std::round(x[j]);
    SimplexOptions opt;
    opt.deadline = deadline_;
    const LpResult fixed = simplexSolve(lp_, lo, hi, &basis, opt);
    stats_.simplex_iterations += fixed.iterations;
    if (fixed.status == LpStatus::Optimal) consider(fixed.x);
  }

  void roundingHeuristic(const std::vector<double>& x, const Basis& basis) {
    std::vector<double> lo = lp_.lower, hi = lp_.upper;
    for (std::size_t j : binaries_) lo[j] = hi[j] = std::round(x[j]);
    SimplexOptions opt;
    opt.deadline = deadline_;
    const LpResult fixed = simplexSolve(lp_, lo, hi, &basis, opt);
    stats_.simplex_iterations += fixed.iterations;
    if (fixed.status == LpStatus::Optimal) consider(fixed.x);
  }

  void logNode(std::size_t id, const Node& node, bool solved, double lp_obj, double best_bound) {
    auto fmt = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return std::string(buf);
    };
    *log_ << "node " << id << " depth " << node.depth << " lp " << (solved ? fmt(lp_obj) : std::string("infeasible"))
          << " bound " << (std::isfinite(best_bound) ? fmt(external(best_bound)) : std::string("-"))
          << " incumbent " << (have_inc_ ? fmt(external(inc_value_)) : std::string("-")) << "\n";
  }

  const MilpModel& model_;
  LpProblem lp_;
  SolveLimits limits_;
  std::ostream* log_;
  const IncumbentHeuristic& heuristic_;
  std::vector<std::size_t> binaries_;
  std::chrono::steady_clock::time_point start_, deadline_;
  SolveStats stats_;
  bool have_inc_ = false;
  double inc_value_ = std::numeric_limits<double>::infinity();
  std::vector<double> inc_x_;
  double root_bound_ = std::numeric_limits<double>::infinity();
  std::size_t seq_ = 0;
  std::size_t inverse_cap_ = 0;
};

}  // namespace

SolveResult branchAndBound(const MilpModel& model, const SolveLimits& limits, std::ostream* log,
                           const IncumbentHeuristic& heuristic) {
  model.validate();
  Search search(model, limits, log, heuristic);
  SolveResult result = search.run();
  if (log) {
    *log << "status " << toString(result.stats.status) << " nodes " << result.stats.bb_nodes << " iterations "
         << result.stats.simplex_iterations << " time " << result.stats.wall_time << "\n";
  }
  return result;
}

IncumbentHeuristic forwardPassHeuristic(const MilpModel& model, const MaskedNetwork& net) {
  auto folded = std::make_shared<const MaskedNetwork>(
      net.inputScaling() || net.outputScaling() ? net.withScalingFolded() : net);
  return [&model, folded](std::span<const double> lp_x) -> std::optional<std::vector<double>> {
    std::vector<double> inputs;
    for (std::size_t v : model.meta.inputs) {
      inputs.push_back(std::clamp(lp_x[v], model.vars[v].lower, model.vars[v].upper));
    }
    return completeFromInputs(model, *folded, inputs);
  };
}

double rootGap(const MilpModel& model, std::span<const double> incumbent) {
  const LpResult relax = simplexSolve(lpRelaxation(model));
  if (relax.status != LpStatus::Optimal) {
    throw Error(ErrorKind::Encoding, std::string("LP relaxation is ") + toString(relax.status));
  }
  return std::fabs(model.objectiveValue(incumbent) - relax.objective);
}

void writeSolveStatsCsv(const SolveStats& stats, double objective, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "status,objective,bb_nodes,simplex_iterations,iterations_per_second,root_bound,root_gap,best_bound,wall_time\n";
  out << toString(stats.status) << ',' << objective << ',' << stats.bb_nodes << ',' << stats.simplex_iterations << ','
      << stats.iterationsPerSecond() << ',' << stats.root_bound << ',' << stats.root_gap << ',' << stats.best_bound
      << ',' << stats.wall_time << "\n";
}

}  // namespace prunemip
