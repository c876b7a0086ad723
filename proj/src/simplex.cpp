#include <algorithm>
#include <cmath>
#include <limits>

#include "prunemip/error.hpp"
#include "prunemip/kernels.hpp"
#include "prunemip/solve.hpp"

namespace prunemip {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasFactor = 100.0;
}

LpProblem::LpProblem(const MilpModel& model)
    : num_cols(model.vars.size()), num_rows(model.cons.size()) {
  std::vector<std::size_t> counts(num_cols, 0);
  for (const auto& c : model.cons) {
    for (const auto& t : c.terms) ++counts[t.var];
  }
  col_start.assign(num_cols + 1, 0);
  for (std::size_t j = 0; j < num_cols; ++j) col_start[j + 1] = col_start[j] + counts[j];
  col_row.resize(col_start.back());
  col_val.resize(col_start.back());
  std::vector<std::size_t> fill(col_start.begin(), col_start.end() - 1);
  for (std::size_t i = 0; i < num_rows; ++i) {
    for (const auto& t : model.cons[i].terms) {
      col_row[fill[t.var]] = i;
      col_val[fill[t.var]++] = t.coef;
    }
  }
  for (const auto& v : model.vars) {
    lower.push_back(v.lower);
    upper.push_back(v.upper);
  }
  for (const auto& c : model.cons) {
    row_lower.push_back(c.sense == RowSense::LessEqual ? -kInf : c.rhs);
    row_upper.push_back(c.sense == RowSense::GreaterEqual ? kInf : c.rhs);
  }
  sense_sign = model.objective.sense == ObjectiveSense::Maximize ? -1.0 : 1.0;
  constant = model.objective.constant;
  cost.assign(num_cols, 0.0);
  for (const auto& t : model.objective.terms) cost[t.var] += sense_sign * t.coef;
}

double LpProblem::objective(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < num_cols; ++j) v += cost[j] * x[j];
  return sense_sign * v + constant;
}

const char* toString(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

namespace {

class Simplex {
 public:
  Simplex(const LpProblem& lp, std::span<const double> lower, std::span<const double> upper,
          const SimplexOptions& opt)
      : lp_(lp), opt_(opt), n_(lp.num_cols), m_(lp.num_rows), total_(n_ + m_) {
    lo_.resize(total_);
    hi_.resize(total_);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lower[j];
      hi_[j] = upper[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      lo_[n_ + i] = lp.row_lower[i];
      hi_[n_ + i] = lp.row_upper[i];
    }
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::AtLower);
    head_.resize(m_);
    binv_.assign(m_ * m_, 0.0);
    work_col_.assign(m_, 0.0);
    alpha_.assign(m_, 0.0);
    y_.assign(m_, 0.0);
    cb_.assign(m_, 0.0);
  }

  LpResult run(const Basis* hint) {
    LpResult res;
    for (std::size_t j = 0; j < total_; ++j) {
      if (lo_[j] > hi_[j]) {
        res.status = LpStatus::Infeasible;
        return finish(res, false);
      }
    }
    installBasis(hint);
    std::size_t since_refactor = 0;
    if (hint && hint->inverse && hint->inverse->size() == m_ * m_ && !hint_adjusted_) {
      binv_ = *hint->inverse;
      since_refactor = hint->updates;
    } else if (!refactor()) {
      slackBasis(), refactor();
    }
    computeBasics();

    const std::size_t max_iter = opt_.max_iterations ? opt_.max_iterations : 20000 + 50 * (total_ + m_);
    std::size_t degenerate = 0;
    bool verified = false;
    for (;;) {
      if (iterations_ >= max_iter) {
        res.status = LpStatus::IterationLimit;
        return finish(res, false);
      }
      if (opt_.deadline && (iterations_ & 63) == 0 && std::chrono::steady_clock::now() > *opt_.deadline) {
        res.status = LpStatus::TimeLimit;
        return finish(res, false);
      }
      if (since_refactor >= opt_.refactor_interval) {
        if (!refactor()) slackBasis(), refactor();
        computeBasics();
        since_refactor = 0;
      }

      const bool phase1 = setCosts();
      computeDuals();
      const bool bland = degenerate >= opt_.degenerate_before_bland;
      double dq = 0.0;
      const long q = price(phase1, bland, dq);
      if (q < 0) {
        if (!verified && since_refactor > 0) {
          computeBasics();
          verified = true;
          continue;
        }
        res.status = phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
        finish(res, true);
        if (opt_.keep_inverse && res.status == LpStatus::Optimal) {
          res.basis.inverse = std::make_shared<const std::vector<double>>(binv_);
          res.basis.updates = since_refactor;
        }
        return res;
      }
      verified = false;
      const auto qi = static_cast<std::size_t>(q);
      const double dir = dq < 0.0 ? 1.0 : -1.0;
      ftran(qi);

      // Basic i moves at rate g_i = -dir * alpha_i per unit step.
      long leave = -1;
      double step = ratioTest(dir, bland, leave);
      double flip = hi_[qi] - lo_[qi];
      if (!std::isfinite(step) && !std::isfinite(flip)) {
        res.status = phase1 ? LpStatus::Infeasible : LpStatus::Unbounded;
        return finish(res, false);
      }
      ++iterations_;
      ++since_refactor;
      if (std::isfinite(flip) && flip <= step) {
        step = flip;
        leave = -1;
      }
      degenerate = step <= 1e-12 ? degenerate + 1 : 0;

      VarState leave_state = VarState::AtLower;
      if (leave >= 0) {
        const std::size_t out = head_[static_cast<std::size_t>(leave)];
        const double g = -dir * alpha_[static_cast<std::size_t>(leave)];
        const double tol = kFeasFactor * opt_.primal_tol;
        const bool below = x_[out] < lo_[out] - tol, above = x_[out] > hi_[out] + tol;
        leave_state = g > 0.0 ? (below ? VarState::AtLower : VarState::AtUpper)
                              : (above ? VarState::AtUpper : VarState::AtLower);
      }
      x_[qi] += dir * step;
      for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= dir * step * alpha_[i];
      if (leave < 0) {
        state_[qi] = state_[qi] == VarState::AtUpper ? VarState::AtLower : VarState::AtUpper;
        x_[qi] = state_[qi] == VarState::AtUpper ? hi_[qi] : lo_[qi];
        continue;
      }
      const auto r = static_cast<std::size_t>(leave);
      leaveAt(head_[r], leave_state);
      head_[r] = qi;
      state_[qi] = VarState::Basic;
      pivot(r);
    }
  }

 private:
  void leaveAt(std::size_t j, VarState s) {
    if (s == VarState::AtUpper && !std::isfinite(hi_[j])) s = VarState::AtLower;
    if (s == VarState::AtLower && !std::isfinite(lo_[j])) s = std::isfinite(hi_[j]) ? VarState::AtUpper : VarState::AtZero;
    state_[j] = s;
    x_[j] = nonbasicValue(j);
  }

  double nonbasicValue(std::size_t j) const {
    switch (state_[j]) {
      case VarState::AtLower: return lo_[j];
      case VarState::AtUpper: return hi_[j];
      default: return 0.0;
    }
  }

  VarState defaultState(std::size_t j) const {
    if (std::isfinite(lo_[j])) return VarState::AtLower;
    if (std::isfinite(hi_[j])) return VarState::AtUpper;
    return VarState::AtZero;
  }

  void slackBasis() {
    for (std::size_t j = 0; j < n_; ++j) {
      if (state_[j] == VarState::Basic) state_[j] = defaultState(j);
    }
    for (std::size_t i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      state_[n_ + i] = VarState::Basic;
    }
    for (std::size_t j = 0; j < n_; ++j) x_[j] = nonbasicValue(j);
  }

  void installBasis(const Basis* hint) {
    const bool usable = hint && hint->head.size() == m_ && hint->state.size() == total_;
    if (!usable) {
      hint_adjusted_ = true;
      for (std::size_t j = 0; j < n_; ++j) state_[j] = defaultState(j);
      slackBasis();
      return;
    }
    head_ = hint->head;
    std::vector<std::uint8_t> seen(total_, 0);
    for (std::size_t j : head_) {
      if (j >= total_ || seen[j] || hint->state[j] != VarState::Basic) {
        hint_adjusted_ = true;
        for (std::size_t k = 0; k < n_; ++k) state_[k] = defaultState(k);
        slackBasis();
        return;
      }
      seen[j] = 1;
    }
    for (std::size_t j = 0; j < total_; ++j) {
      VarState s = hint->state[j];
      if (s != VarState::Basic) {
        if (s == VarState::AtUpper && !std::isfinite(hi_[j])) s = defaultState(j);
        if (s == VarState::AtLower && !std::isfinite(lo_[j])) s = defaultState(j);
        if (s == VarState::AtZero && (std::isfinite(lo_[j]) || std::isfinite(hi_[j]))) s = defaultState(j);
      }
      state_[j] = s;
      x_[j] = s == VarState::Basic ? 0.0 : nonbasicValue(j);
    }
  }

  // Dense copy of column j of [A -I] into work_col_.
  void loadColumn(std::size_t j) {
    std::fill(work_col_.begin(), work_col_.end(), 0.0);
    if (j < n_) {
      for (std::size_t k = lp_.col_start[j]; k < lp_.col_start[j + 1]; ++k) work_col_[lp_.col_row[k]] = lp_.col_val[k];
    } else {
      work_col_[j - n_] = -1.0;
    }
  }

  // Gauss-Jordan inversion of the basis matrix with partial pivoting.
  bool refactor() {
    if (m_ == 0) return true;
    std::vector<double> b(m_ * m_, 0.0);
    for (std::size_t c = 0; c < m_; ++c) {
      loadColumn(head_[c]);
      for (std::size_t r = 0; r < m_; ++r) b[r * m_ + c] = work_col_[r];
    }
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t p = c;
      double best = std::fabs(b[c * m_ + c]);
      for (std::size_t r = c + 1; r < m_; ++r) {
        if (std::fabs(b[r * m_ + c]) > best) best = std::fabs(b[r * m_ + c]), p = r;
      }
      if (best < 1e-11) return false;
      if (p != c) {
        std::swap_ranges(b.begin() + static_cast<long>(p * m_), b.begin() + static_cast<long>((p + 1) * m_),
                         b.begin() + static_cast<long>(c * m_));
        std::swap_ranges(binv_.begin() + static_cast<long>(p * m_), binv_.begin() + static_cast<long>((p + 1) * m_),
                         binv_.begin() + static_cast<long>(c * m_));
      }
      const double inv = 1.0 / b[c * m_ + c];
      for (std::size_t k = 0; k < m_; ++k) {
        b[c * m_ + k] *= inv;
        binv_[c * m_ + k] *= inv;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        const double f = b[r * m_ + c];
        if (r == c || f == 0.0) continue;
        kernels::axpy(-f, {b.data() + c * m_, m_}, {b.data() + r * m_, m_});
        kernels::axpy(-f, {binv_.data() + c * m_, m_}, {binv_.data() + r * m_, m_});
      }
    }
    return true;
  }

  // x_B = B^-1 (-N x_N)
  void computeBasics() {
    std::vector<double> h(m_, 0.0);
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] == VarState::Basic) continue;
      x_[j] = nonbasicValue(j);
      if (x_[j] == 0.0) continue;
      if (j < n_) {
        for (std::size_t k = lp_.col_start[j]; k < lp_.col_start[j + 1]; ++k) h[lp_.col_row[k]] -= lp_.col_val[k] * x_[j];
      } else {
        h[j - n_] += x_[j];
      }
    }
    for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] = kernels::dot({binv_.data() + i * m_, m_}, h);
  }

  double cost(std::size_t j) const { return j < n_ ? lp_.cost[j] : 0.0; }

  // Fills cb_ for the current phase; returns true in phase one.
  bool setCosts() {
    const double tol = kFeasFactor * opt_.primal_tol;
    bool infeasible = false;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = head_[i];
      if (x_[j] < lo_[j] - tol) {
        cb_[i] = -1.0;
        infeasible = true;
      } else if (x_[j] > hi_[j] + tol) {
        cb_[i] = 1.0;
        infeasible = true;
      } else {
        cb_[i] = 0.0;
      }
    }
    if (!infeasible) {
      for (std::size_t i = 0; i < m_; ++i) cb_[i] = cost(head_[i]);
    }
    return infeasible;
  }

  void computeDuals() {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (cb_[i] != 0.0) kernels::axpy(cb_[i], {binv_.data() + i * m_, m_}, y_);
    }
  }

  double reducedCost(std::size_t j, bool phase1) const {
    double d = phase1 ? 0.0 : cost(j);
    if (j < n_) {
      for (std::size_t k = lp_.col_start[j]; k < lp_.col_start[j + 1]; ++k) d -= y_[lp_.col_row[k]] * lp_.col_val[k];
    } else {
      d += y_[j - n_];
    }
    return d;
  }

  long price(bool phase1, bool bland, double& dq) const {
    long best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < total_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::Basic || lo_[j] == hi_[j]) continue;
      const double d = reducedCost(j, phase1);
      bool eligible = false;
      if (s == VarState::AtLower) eligible = d < -opt_.dual_tol;
      else if (s == VarState::AtUpper) eligible = d > opt_.dual_tol;
      else eligible = std::fabs(d) > opt_.dual_tol;
      if (!eligible) continue;
      if (bland) {
        dq = d;
        return static_cast<long>(j);
      }
      if (std::fabs(d) > best_score) {
        best_score = std::fabs(d);
        best = static_cast<long>(j);
        dq = d;
      }
    }
    return best;
  }

  void ftran(std::size_t q) {
    loadColumn(q);
    for (std::size_t i = 0; i < m_; ++i) alpha_[i] = kernels::dot({binv_.data() + i * m_, m_}, work_col_);
  }

  // Distance basic i may travel along rate g before hitting a bound, or inf.
  double limitFor(std::size_t i, double g, double slack) const {
    const std::size_t j = head_[i];
    const double tol = kFeasFactor * opt_.primal_tol;
    if (g > 0.0) {
      if (x_[j] < lo_[j] - tol) return (lo_[j] - x_[j] + slack) / g;
      if (std::isfinite(hi_[j]) && x_[j] <= hi_[j] + tol) return (hi_[j] - x_[j] + slack) / g;
    } else {
      if (x_[j] > hi_[j] + tol) return (x_[j] - hi_[j] + slack) / -g;
      if (std::isfinite(lo_[j]) && x_[j] >= lo_[j] - tol) return (x_[j] - lo_[j] + slack) / -g;
    }
    return kInf;
  }

  double ratioTest(double dir, bool bland, long& leave) const {
    constexpr double kPivotTol = 1e-9;
    leave = -1;
    if (bland) {
      double best = kInf;
      for (std::size_t i = 0; i < m_; ++i) {
        const double g = -dir * alpha_[i];
        if (std::fabs(g) < kPivotTol) continue;
        const double t = std::max(0.0, limitFor(i, g, 0.0));
        if (t < best || (t == best && leave >= 0 && head_[i] < head_[static_cast<std::size_t>(leave)])) {
          best = t;
          leave = static_cast<long>(i);
        }
      }
      return best;
    }
    double bound = kInf;
    for (std::size_t i = 0; i < m_; ++i) {
      const double g = -dir * alpha_[i];
      if (std::fabs(g) < kPivotTol) continue;
      bound = std::min(bound, limitFor(i, g, opt_.primal_tol));
    }
    if (!std::isfinite(bound)) return kInf;
    double best_pivot = 0.0, step = kInf;
    for (std::size_t i = 0; i < m_; ++i) {
      const double g = -dir * alpha_[i];
      if (std::fabs(g) < kPivotTol) continue;
      const double t = limitFor(i, g, 0.0);
      if (t <= bound && std::fabs(g) > best_pivot) {
        best_pivot = std::fabs(g);
        step = std::max(0.0, t);
        leave = static_cast<long>(i);
      }
    }
    return step;
  }

  void pivot(std::size_t r) {
    double* row_r = binv_.data() + r * m_;
    const double inv = 1.0 / alpha_[r];
    for (std::size_t k = 0; k < m_; ++k) row_r[k] *= inv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || alpha_[i] == 0.0) continue;
      kernels::axpy(-alpha_[i], {row_r, m_}, {binv_.data() + i * m_, m_});
    }
  }

  LpResult& finish(LpResult& res, bool with_solution) {
    res.iterations = iterations_;
    res.x.assign(x_.begin(), x_.begin() + static_cast<long>(n_));
    res.objective = lp_.objective(res.x);
    if (with_solution || res.status != LpStatus::Infeasible) {
      res.basis.head = head_;
      res.basis.state = state_;
    }
    return res;
  }

  const LpProblem& lp_;
  SimplexOptions opt_;
  std::size_t n_, m_, total_;
  std::vector<double> lo_, hi_, x_;
  std::vector<VarState> state_;
  std::vector<std::size_t> head_;
  std::vector<double> binv_, work_col_, alpha_, y_, cb_;
  std::size_t iterations_ = 0;
  bool hint_adjusted_ = false;
};

}  // namespace

LpResult simplexSolve(const LpProblem& lp, std::span<const double> lower, std::span<const double> upper,
                      const Basis* hint, const SimplexOptions& options) {
  if (lower.size() != lp.num_cols || upper.size() != lp.num_cols) {
    throw Error(ErrorKind::InvalidInput, "simplexSolve: bound vectors do not match the column count");
  }
  Simplex s(lp, lower, upper, options);
  return s.run(hint);
}

LpResult simplexSolve(const LpProblem& lp, const Basis* hint, const SimplexOptions& options) {
  return simplexSolve(lp, lp.lower, lp.upper, hint, options);
}

LpResult simplexSolve(const MilpModel& lp, const Basis* hint, const SimplexOptions& options) {
  if (lp.numBinaries() != 0) throw Error(ErrorKind::InvalidInput, "simplexSolve: model has binary variables");
  const LpProblem problem(lp);
  return simplexSolve(problem, hint, options);
}

}  // namespace prunemip
